//! The invariant suite behind the `selfcheck` subcommand.
//!
//! Each entry re-verifies one structural law of the library on the
//! configured kernel and profile: normalization, halfspace laws, stencil
//! mass and symmetry, equivalence of the two convolution paths, the
//! closed-form density constant, isotropy, convexity, trivial energies and
//! one-homogeneity. A fault-injection hook deliberately corrupts the stencil
//! used by the spectral path so that the suite's ability to detect a broken
//! rescale can itself be tested.

use super::config::ExperimentConfig;
use super::LabError;
use crate::density::{closed_form_c_ng, DensityContext};
use crate::geom::{self, Vector};
use crate::kernels::{self, Kernel};
use crate::nonlocal::{build_stencil, convolve_direct, convolve_fft, eval_f_eps, Stencil};
use crate::profiles::builtin_profile;
use crate::shapes::{Domain, IndicatorField, Shape};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::time::Instant;

/// Knobs for deliberate fault injection.
#[derive(Debug, Clone, Default)]
pub struct SelfcheckOptions {
    /// Multiply the center stencil weight fed to the spectral path by this
    /// factor, simulating a broken rescale step (the rescale adjusts the
    /// center weight, so that is where a fault would sit).
    pub corrupt_stencil_rescale: Option<f64>,
}

#[derive(Debug)]
pub struct SelfcheckEntry {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub wall_seconds: f64,
}

#[derive(Debug)]
pub struct SelfcheckReport {
    pub entries: Vec<SelfcheckEntry>,
}

impl SelfcheckReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

fn timed(
    entries: &mut Vec<SelfcheckEntry>,
    name: &'static str,
    run: impl FnOnce() -> Result<(bool, String), LabError>,
) -> Result<(), LabError> {
    let start = Instant::now();
    let (passed, detail) = run()?;
    entries.push(SelfcheckEntry {
        name,
        passed,
        detail,
        wall_seconds: start.elapsed().as_secs_f64(),
    });
    Ok(())
}

fn random_unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let mut v = [0.0, 0.0, 0.0];
        let mut norm_sq: f64 = 0.0;
        for coord in v.iter_mut().take(dim) {
            *coord = rng.gen_range(-1.0..1.0);
            norm_sq += *coord * *coord;
        }
        if norm_sq > 1e-4 && norm_sq <= 1.0 {
            let norm = norm_sq.sqrt();
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

fn corrupted_copy(stencil: &Stencil, options: &SelfcheckOptions) -> Stencil {
    let mut copy = stencil.clone();
    if let Some(factor) = options.corrupt_stencil_rescale {
        if let Some(center) = copy.offsets.iter().position(|o| *o == [0, 0, 0]) {
            copy.weights[center] *= factor;
        }
    }
    copy
}

fn check_kernel_mass(kernel: &Kernel) -> (bool, String) {
    let mass = kernels::kernel_total_mass(kernel, 192);
    ((mass - 1.0).abs() < 1e-8, format!("total mass {mass}"))
}

fn check_halfspace_laws(kernel: &Kernel) -> Result<(bool, String), LabError> {
    let dim = kernel.dim();
    let inv = 1.0 / (dim as f64).sqrt();
    let mut diagonal = [0.0, 0.0, 0.0];
    for coord in diagonal.iter_mut().take(dim) {
        *coord = inv;
    }
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for nu in [[1.0, 0.0, 0.0], diagonal] {
        worst = worst.max((kernels::halfspace_mass(kernel, &nu, 0.0)? - 0.5).abs());
        worst = worst.max(kernels::halfspace_mass(kernel, &nu, 1.0)?.abs());
        let mut prev = f64::INFINITY;
        for i in 0..=5 {
            let mass = kernels::halfspace_mass(kernel, &nu, 0.2 * i as f64)?;
            monotone &= mass <= prev + 1e-12;
            prev = mass;
        }
    }
    Ok((
        worst < 1e-8 && monotone,
        format!("worst law deviation {worst:e}, monotone in t: {monotone}"),
    ))
}

fn check_stencil(stencil: &Stencil) -> (bool, String) {
    let mass_ok = stencil.weight_sum() == 1.0;
    let table: HashMap<[i64; 3], f64> = stencil
        .offsets()
        .iter()
        .copied()
        .zip(stencil.weights().iter().copied())
        .collect();
    let even = stencil.offsets().iter().zip(stencil.weights()).all(|(o, &w)| {
        table.get(&[-o[0], -o[1], -o[2]]) == Some(&w)
    });
    (
        mass_ok && even,
        format!("weight sum {}, even: {even}", stencil.weight_sum()),
    )
}

fn check_path_equivalence(
    dim: usize,
    seed: u64,
    kernel: &Kernel,
    options: &SelfcheckOptions,
) -> Result<(bool, String), LabError> {
    let (resolution, epsilon) = if dim == 2 { (48, 0.125) } else { (24, 0.25) };
    let dom = Domain::unit(dim, resolution)?;
    let clean = build_stencil(kernel, epsilon, &dom)?;
    let spectral = corrupted_copy(&clean, options);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..dom.total_voxels())
        .map(|_| rng.gen_range(0.0..1.0))
        .collect();
    let field = IndicatorField::from_values(dom, values);
    let direct = convolve_direct(&field, &clean)?;
    let fast = convolve_fft(&field, &spectral)?;
    let max_diff = direct
        .iter()
        .zip(&fast)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok((max_diff <= 1e-10, format!("max path difference {max_diff:e}")))
}

fn check_closed_form(cfg: &ExperimentConfig, kernel: &Kernel) -> Result<(bool, String), LabError> {
    if !kernel.is_radial() {
        return Ok((true, "skipped (anisotropic kernel)".into()));
    }
    let identity_ctx = DensityContext::with_orders(
        cfg.build_kernel()?,
        builtin_profile("identity", None)?,
        cfg.t_order,
        cfg.slice_order,
    )?;
    let quadrature = identity_ctx.radial_constant()?;
    let closed = closed_form_c_ng(kernel)?;
    let diff = (quadrature - closed).abs();
    Ok((
        diff < 1e-8,
        format!("quadrature {quadrature}, closed form {closed}"),
    ))
}

fn check_isotropy(ctx: &DensityContext, seed: u64) -> Result<(bool, String), LabError> {
    if !ctx.kernel().is_radial() {
        return Ok((true, "skipped (anisotropic kernel)".into()));
    }
    let constant = ctx.radial_constant()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let nu = random_unit_direction(&mut rng, ctx.kernel().dim());
        worst = worst.max((ctx.theta(&nu)? - constant).abs());
    }
    Ok((worst < 1e-8, format!("worst direction spread {worst:e}")))
}

fn check_convexity(ctx: &DensityContext, seed: u64) -> Result<(bool, String), LabError> {
    if !ctx.profile().convex_flag() {
        return Ok((true, "skipped (profile not declared convex)".into()));
    }
    let violations = ctx.convexity_probe(500, seed)?;
    Ok((
        violations.is_empty(),
        format!("{} violations in 500 trials", violations.len()),
    ))
}

fn check_trivial_energies(cfg: &ExperimentConfig) -> Result<(bool, String), LabError> {
    let dim = cfg.dim;
    let (resolution, epsilon) = if dim == 2 { (32, 0.25) } else { (16, 0.25) };
    let dom = Domain::unit(dim, resolution)?;
    let kernel = cfg.build_kernel()?;
    let profile = cfg.build_profile()?;
    let far_ball = Shape::Ball {
        center: [-5.0, 0.0, 0.0],
        radius: 0.3,
    };
    let covering_box = Shape::Box {
        lower: [-1.0, -1.0, -1.0],
        upper: [2.0, 2.0, 2.0],
    };
    let empty = eval_f_eps(&far_ball, epsilon, &profile, &kernel, &dom)?;
    let full = eval_f_eps(&covering_box, epsilon, &profile, &kernel, &dom)?;
    Ok((
        empty == 0.0 && full == 0.0,
        format!("empty set {empty}, full domain {full}"),
    ))
}

fn check_homogeneity(ctx: &DensityContext) -> Result<(bool, String), LabError> {
    let dim = ctx.kernel().dim();
    let vs: [Vector; 2] = if dim == 2 {
        [[0.3, -0.4, 0.0], [-1.1, 0.7, 0.0]]
    } else {
        [[0.3, -0.4, 0.5], [-1.1, 0.7, 0.2]]
    };
    let mut worst: f64 = 0.0;
    for v in vs {
        let base = ctx.theta_tilde(&v)?;
        for lambda in [0.25, 3.7] {
            let scaled = ctx.theta_tilde(&geom::scale(&v, lambda))?;
            worst = worst.max((scaled - lambda * base).abs());
        }
    }
    Ok((worst < 1e-10, format!("worst homogeneity defect {worst:e}")))
}

pub fn run_selfcheck(
    cfg: &ExperimentConfig,
    options: &SelfcheckOptions,
) -> Result<SelfcheckReport, LabError> {
    cfg.validate()?;
    let kernel = cfg.build_kernel()?;
    let ctx = cfg.density_context()?;
    let mut entries = Vec::new();
    timed(&mut entries, "kernel mass", || Ok(check_kernel_mass(&kernel)))?;
    timed(&mut entries, "halfspace laws", || check_halfspace_laws(&kernel))?;
    timed(&mut entries, "stencil mass and symmetry", || {
        let dom = cfg.domain_for_epsilon(cfg.epsilon0)?;
        let stencil = build_stencil(&kernel, cfg.epsilon0, &dom)?;
        Ok(check_stencil(&corrupted_copy(&stencil, options)))
    })?;
    timed(&mut entries, "convolution path equivalence", || {
        check_path_equivalence(cfg.dim, cfg.seed, &kernel, options)
    })?;
    timed(&mut entries, "closed-form constant", || {
        check_closed_form(cfg, &kernel)
    })?;
    timed(&mut entries, "isotropy", || check_isotropy(&ctx, cfg.seed))?;
    timed(&mut entries, "convexity probe", || {
        check_convexity(&ctx, cfg.seed)
    })?;
    timed(&mut entries, "trivial energies", || {
        check_trivial_energies(cfg)
    })?;
    timed(&mut entries, "one-homogeneity", || check_homogeneity(&ctx))?;
    Ok(SelfcheckReport { entries })
}

/// Prints the pass/fail table with timings.
pub fn print_selfcheck(report: &SelfcheckReport) {
    for entry in &report.entries {
        println!(
            "[{}] {:<28} {:>8.3}s  {}",
            if entry.passed { " ok " } else { "FAIL" },
            entry.name,
            entry.wall_seconds,
            entry.detail
        );
    }
    println!(
        "selfcheck: {}",
        if report.all_passed() {
            "all checks passed"
        } else {
            "FAILURES detected"
        }
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_selfcheck_passes_every_entry() {
        let cfg = ExperimentConfig::default();
        let report = run_selfcheck(&cfg, &SelfcheckOptions::default()).unwrap();
        assert_eq!(report.entries.len(), 9);
        for entry in &report.entries {
            assert!(entry.passed, "{} failed: {}", entry.name, entry.detail);
        }
        assert!(report.all_passed());
    }

    #[test]
    fn corrupted_rescale_is_detected_by_the_right_entries() {
        let cfg = ExperimentConfig::default();
        let options = SelfcheckOptions {
            corrupt_stencil_rescale: Some(1.01),
        };
        let report = run_selfcheck(&cfg, &options).unwrap();
        assert!(!report.all_passed());
        for entry in &report.entries {
            let should_fail = entry.name == "stencil mass and symmetry"
                || entry.name == "convolution path equivalence";
            assert_eq!(
                entry.passed, !should_fail,
                "{}: {}",
                entry.name, entry.detail
            );
        }
    }
}
