//! The acceptance gate: nine end-to-end checks covering the closed forms,
//! the isotropy and convexity properties of the surface density, the ε → 0
//! convergence of the nonlocal energy, the lower-estimate study, the Monte
//! Carlo oracle agreement, the convolution path equivalence, the trivial
//! laws, and byte-level determinism of the reports.
//!
//! Every check prints exactly one terminal line of the form
//! `criterion N (name): pass|FAIL — detail [wall s]` (visible under
//! `cargo test -- --nocapture`) and then asserts, so a failure names the
//! criterion both in the line and in the panic message.  All tolerances and
//! runtime budgets are pinned here, not read from configuration.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use convperim::density::closed_form_c_ng;
use convperim::geom::{identity, normalized, Matrix, Vector};
use convperim::kernels::{absolute_moment_along, halfspace_mass, make_bump_kernel, Kernel};
use convperim::lab::config::parse_config;
use convperim::lab::oracle::{mc_halfspace_oracle, mc_theta_oracle};
use convperim::lab::report::{convergence_csv, to_json};
use convperim::lab::runner::{run_convergence, run_lower_bound, LowerBoundSpec};
use convperim::nonlocal::{build_stencil, convolve_direct, convolve_fft, eval_f_eps};
use convperim::profiles::{builtin_profile, Profile};
use convperim::shapes::{Domain, IndicatorField, Shape};
use convperim::DensityContext;

fn conclude(number: usize, name: &str, passed: bool, detail: &str, wall: Duration) {
    let status = if passed { "pass" } else { "FAIL" };
    println!(
        "criterion {number} ({name}): {status} — {detail} [{:.2} s]",
        wall.as_secs_f64()
    );
    assert!(passed, "criterion {number} ({name}) failed: {detail}");
}

fn radial_kernel(dim: usize) -> Kernel {
    make_bump_kernel(dim, None).unwrap()
}

fn aniso_kernel_2d() -> Kernel {
    let mut a: Matrix = identity(2);
    a[0][0] = 1.5;
    make_bump_kernel(2, Some(a)).unwrap()
}

#[test]
fn criterion_1_closed_form_cross_check() {
    let start = Instant::now();
    let kernel = radial_kernel(2);
    let ctx = DensityContext::new(kernel.clone(), builtin_profile("identity", None).unwrap());
    let closed = closed_form_c_ng(&kernel).unwrap();
    let dirs: [Vector; 4] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0],
        [0.6, 0.8, 0.0],
    ];
    let mut worst = 0.0_f64;
    for nu in &dirs {
        let theta = ctx.theta(nu).unwrap();
        let half_moment = 0.5 * absolute_moment_along(&kernel, nu).unwrap();
        worst = worst
            .max((theta - half_moment).abs())
            .max((theta - closed).abs())
            .max((half_moment - closed).abs());
    }
    let wall = start.elapsed();
    let passed = worst < 1e-6 && wall < Duration::from_secs(5);
    let detail = format!("worst pairwise gap {worst:.3e} over {} directions", dirs.len());
    conclude(1, "closed-form cross-check", passed, &detail, wall);
}

#[test]
fn criterion_2_isotropy() {
    let start = Instant::now();
    let ctx = DensityContext::new(radial_kernel(2), builtin_profile("identity", None).unwrap());
    let constant = ctx.radial_constant().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let angle = rng.gen_range(0.0..TAU);
        let nu = [angle.cos(), angle.sin(), 0.0];
        worst = worst.max((ctx.theta(&nu).unwrap() - constant).abs());
    }
    let wall = start.elapsed();
    let passed = worst < 1e-8 && wall < Duration::from_secs(10);
    let detail = format!("max deviation {worst:.3e} over 50 random directions");
    conclude(2, "isotropy", passed, &detail, wall);
}

#[test]
fn criterion_3_pointwise_limit() {
    let start = Instant::now();

    // Identity profile; the defaults pin the ball of radius 0.3 in (0,1)²,
    // the ε schedule 1/8 → 1/64 with halving, and the spacing h = ε/8.
    let cfg = parse_config("").unwrap();
    let report = run_convergence(&cfg).unwrap();
    let closed = closed_form_c_ng(&radial_kernel(2)).unwrap();
    let exact = closed * TAU * 0.3;
    let reference_ok = (report.reference - exact).abs() < 1e-6 * exact;
    let identity_ok =
        reference_ok && report.monotone_errors && report.extrapolated_rel_error <= 0.02;
    let identity_wall = start.elapsed();

    let power_start = Instant::now();
    let cfg = parse_config(
        "[profile]\nname = power\nexponent = 2\n\n[schedule]\ntolerance = 0.05\n",
    )
    .unwrap();
    let power = run_convergence(&cfg).unwrap();
    let power_ok = power.monotone_errors && power.extrapolated_rel_error <= 0.05;
    let power_wall = power_start.elapsed();

    let budget = Duration::from_secs(300);
    let passed = identity_ok && power_ok && identity_wall < budget && power_wall < budget;
    let detail = format!(
        "identity extrapolated rel error {:.3e}, power(2) {:.3e}, errors monotone {}",
        report.extrapolated_rel_error,
        power.extrapolated_rel_error,
        report.monotone_errors && power.monotone_errors
    );
    conclude(3, "pointwise limit", passed, &detail, identity_wall + power_wall);
}

#[test]
fn criterion_4_lower_estimate() {
    let start = Instant::now();
    // Graph u = 0.5 + 0.1·sin(2πx) with default perturbations
    // u_h = u + (1/h)·cos(4πx) and ranges ε_h = 1/(8h) for h ∈ {8,16,32,64}.
    let cfg = parse_config("[shape]\nkind = graph\n").unwrap();
    let spec = LowerBoundSpec::from_config(&cfg);
    let report = run_lower_bound(&cfg, &spec).unwrap();
    let wall = start.elapsed();
    let passed = report.pass == Some(true) && wall < Duration::from_secs(300);
    let detail = format!(
        "final deficit {:.3e} vs reference {:.6}, tolerance {:.0}%",
        report.final_deficit,
        report.reference,
        100.0 * report.deficit_tolerance
    );
    conclude(4, "lower estimate", passed, &detail, wall);
}

#[test]
fn criterion_5_convexity_and_homogeneity() {
    let start = Instant::now();
    let kernel = radial_kernel(2);
    let mut all_clean = true;
    for (name, exponent) in [("identity", None), ("power", Some(2.0)), ("expm1", None)] {
        let profile = builtin_profile(name, exponent).unwrap();
        let ctx = DensityContext::new(kernel.clone(), profile);
        let violations = ctx.convexity_probe(10_000, 11).unwrap();
        all_clean &= violations.is_empty();
    }

    let ctx = DensityContext::new(kernel, builtin_profile("identity", None).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let v: Vector = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0];
        if normalized(&v).is_none() {
            continue;
        }
        let lambda = rng.gen_range(0.1..4.0);
        let scaled = [lambda * v[0], lambda * v[1], 0.0];
        let gap = (ctx.theta_tilde(&scaled).unwrap() - lambda * ctx.theta_tilde(&v).unwrap()).abs();
        worst = worst.max(gap);
    }

    let wall = start.elapsed();
    let passed = all_clean && worst < 1e-10 && wall < Duration::from_secs(60);
    let detail = format!(
        "0 violations over 3 profiles × 10⁴ trials, homogeneity gap {worst:.3e} on 10³ probes"
    );
    conclude(5, "convexity and homogeneity", passed, &detail, wall);
}

#[test]
fn criterion_6_oracle_equivalence() {
    let start = Instant::now();
    let radial2 = radial_kernel(2);
    let radial3 = radial_kernel(3);
    let aniso = aniso_kernel_2d();
    let diag2: Vector = [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0];
    let tilt2: Vector = [0.6, 0.8, 0.0];
    let s3 = 1.0 / 3.0_f64.sqrt();
    let diag3: Vector = [s3, s3, s3];

    // 14 half-space pairs across the radial 2-d, anisotropic 2-d and radial
    // 3-d kernels, then 6 surface-density pairs; 20 in total.
    let halfspace_pairs: [(&Kernel, Vector, f64); 14] = [
        (&radial2, [1.0, 0.0, 0.0], 0.25),
        (&radial2, [1.0, 0.0, 0.0], 0.5),
        (&radial2, [0.0, 1.0, 0.0], 0.25),
        (&radial2, [0.0, 1.0, 0.0], 0.5),
        (&radial2, diag2, 0.25),
        (&radial2, diag2, 0.5),
        (&radial2, tilt2, 0.25),
        (&radial2, tilt2, 0.5),
        (&aniso, [1.0, 0.0, 0.0], 0.2),
        (&aniso, [1.0, 0.0, 0.0], 0.4),
        (&aniso, tilt2, 0.2),
        (&aniso, tilt2, 0.4),
        (&radial3, [0.0, 0.0, 1.0], 0.3),
        (&radial3, diag3, 0.3),
    ];
    let samples = 10_000_000;
    let mut pairs_checked = 0;
    let mut worst_ratio = 0.0_f64;
    let mut all_within = true;
    for (index, (kernel, nu, t)) in halfspace_pairs.iter().enumerate() {
        let est = mc_halfspace_oracle(kernel, nu, *t, samples, 1001 + index as u64);
        let quadrature = halfspace_mass(kernel, nu, *t).unwrap();
        let ratio = (est.value - quadrature).abs() / est.std_error;
        worst_ratio = worst_ratio.max(ratio);
        all_within &= ratio <= 3.0;
        pairs_checked += 1;
    }

    let identity = builtin_profile("identity", None).unwrap();
    let power2 = builtin_profile("power", Some(2.0)).unwrap();
    let theta_pairs: [(Kernel, Profile, Vector); 6] = [
        (radial2.clone(), identity.clone(), [1.0, 0.0, 0.0]),
        (radial2.clone(), identity.clone(), tilt2),
        (radial2.clone(), power2, [1.0, 0.0, 0.0]),
        (aniso.clone(), identity.clone(), [1.0, 0.0, 0.0]),
        (aniso.clone(), identity.clone(), [0.0, 1.0, 0.0]),
        (aniso.clone(), identity, diag2),
    ];
    for (index, (kernel, profile, nu)) in theta_pairs.into_iter().enumerate() {
        let ctx = DensityContext::new(kernel, profile);
        let est = mc_theta_oracle(&ctx, &nu, samples, 2001 + index as u64);
        let quadrature = ctx.theta(&nu).unwrap();
        let ratio = (est.value - quadrature).abs() / est.std_error;
        worst_ratio = worst_ratio.max(ratio);
        all_within &= ratio <= 3.0;
        pairs_checked += 1;
    }

    let wall = start.elapsed();
    let passed = all_within && pairs_checked == 20 && wall < Duration::from_secs(600);
    let detail = format!("worst |mc − quadrature| = {worst_ratio:.2} standard errors over 20 pairs");
    conclude(6, "oracle equivalence", passed, &detail, wall);
}

#[test]
fn criterion_7_path_equivalence() {
    let start = Instant::now();
    let dom = Domain::unit(2, 64).unwrap();
    let kernel = radial_kernel(2);
    let stencil = build_stencil(&kernel, 0.125, &dom).unwrap();
    let mut worst = 0.0_f64;
    for run in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + run);
        let values: Vec<f64> = (0..dom.total_voxels())
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let field = IndicatorField::from_values(dom.clone(), values);
        let direct = convolve_direct(&field, &stencil).unwrap();
        let fast = convolve_fft(&field, &stencil).unwrap();
        for (a, b) in direct.iter().zip(&fast) {
            worst = worst.max((a - b).abs());
        }
    }
    let wall = start.elapsed();
    let passed = worst <= 1e-10 && wall < Duration::from_secs(30);
    let detail = format!("max |direct − fft| = {worst:.3e} over 10 random 64² fields");
    conclude(7, "path equivalence", passed, &detail, wall);
}

#[test]
fn criterion_8_trivial_laws() {
    let start = Instant::now();
    let kernel = radial_kernel(2);
    let profile = builtin_profile("identity", None).unwrap();
    let dom = Domain::unit(2, 32).unwrap();

    // A ball far outside Ω meets it in the empty set; a box containing Ω
    // leaves an empty complement.  Both energies must vanish identically.
    let empty = Shape::Ball {
        center: [-5.0, 0.0, 0.0],
        radius: 0.3,
    };
    let full = Shape::Box {
        lower: [-1.0, -1.0, 0.0],
        upper: [2.0, 2.0, 0.0],
    };
    let f_empty = eval_f_eps(&empty, 0.25, &profile, &kernel, &dom).unwrap();
    let f_full = eval_f_eps(&full, 0.25, &profile, &kernel, &dom).unwrap();

    let zero_ctx = DensityContext::new(kernel.clone(), Profile::zero());
    let theta_zero = zero_ctx.theta(&[0.6, 0.8, 0.0]).unwrap();

    let aniso = aniso_kernel_2d();
    let mut half_gap = 0.0_f64;
    let mut top_mass = 0.0_f64;
    for (kernel, nu) in [
        (&kernel, [1.0, 0.0, 0.0]),
        (&kernel, [0.6, 0.8, 0.0]),
        (&aniso, [1.0, 0.0, 0.0]),
        (&aniso, [0.6, 0.8, 0.0]),
    ] {
        half_gap = half_gap.max((halfspace_mass(kernel, &nu, 0.0).unwrap() - 0.5).abs());
        top_mass = top_mass.max(halfspace_mass(kernel, &nu, 1.0).unwrap().abs());
    }

    let wall = start.elapsed();
    let passed = f_empty == 0.0
        && f_full == 0.0
        && theta_zero == 0.0
        && half_gap < 1e-8
        && top_mass == 0.0
        && wall < Duration::from_secs(30);
    let detail = format!(
        "F_ε(∅) = {f_empty}, F_ε(Ω) = {f_full}, θ_zero = {theta_zero}, \
         |halfspace(·,0) − 1/2| ≤ {half_gap:.3e}, halfspace(·,1) = {top_mass}"
    );
    conclude(8, "trivial laws", passed, &detail, wall);
}

#[test]
fn criterion_9_determinism() {
    let start = Instant::now();
    let run = || {
        let cfg = parse_config("").unwrap();
        let report = run_convergence(&cfg).unwrap();
        let csv = convergence_csv(&report);
        let json = to_json(&report).unwrap();
        (csv, json)
    };
    let (csv_a, json_a) = run();
    let (csv_b, json_b) = run();
    let wall = start.elapsed();
    let passed = csv_a == csv_b && json_a == json_b && wall < Duration::from_secs(600);
    let detail = format!(
        "csv identical {}, json identical {} ({} csv bytes)",
        csv_a == csv_b,
        json_a == json_b,
        csv_a.len()
    );
    conclude(9, "determinism", passed, &detail, wall);
}
