//! Monte Carlo and low-tech quadrature oracles.
//!
//! Every value the library computes through its production quadratures can be
//! re-derived here along an independent route: plain rejection-sampling Monte
//! Carlo over the unit ball, stratified Monte Carlo for the surface density,
//! a thin-slab sweep for slice integrals, and a high-resolution trapezoid
//! rule for the radial moment. The oracles are deliberately simple — their
//! job is to be obviously correct, not fast — and they report standard
//! errors so that agreement can be asserted as a multiple of the noise.

use super::report::richardson_extrapolate;
use super::LabError;
use crate::density::DensityContext;
use crate::geom::{self, Vector};
use crate::kernels::Kernel;
use crate::profiles::Profile;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A Monte Carlo estimate together with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Number of strata the theta oracle uses over the offset interval.
pub const THETA_STRATA: u64 = 64;

/// Slab widths for the slice oracle, halved twice for extrapolation.
pub const SLICE_WIDTHS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

fn sample_unit_ball(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let mut z = [0.0, 0.0, 0.0];
        let mut norm_sq = 0.0;
        for coord in z.iter_mut().take(dim) {
            *coord = rng.gen_range(-1.0..1.0);
            norm_sq += *coord * *coord;
        }
        if norm_sq <= 1.0 {
            return z;
        }
    }
}

fn check_direction(nu: &Vector) {
    assert!(
        (geom::norm(nu) - 1.0).abs() < 1e-9,
        "oracle directions must be unit vectors"
    );
}

fn mean_and_se(sum: f64, sum_sq: f64, samples: u64) -> (f64, f64) {
    let n = samples as f64;
    let mean = sum / n;
    let variance = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (variance / n).sqrt())
}

/// Estimates the halfspace mass ∫_{z·ν ≥ t} G(z) dz by uniform rejection
/// sampling over the unit ball (the kernel support never exceeds it).
pub fn mc_halfspace_oracle(
    kernel: &Kernel,
    nu: &Vector,
    t: f64,
    samples: u64,
    seed: u64,
) -> McEstimate {
    assert!(samples >= 10_000, "halfspace oracle needs >= 10^4 samples");
    check_direction(nu);
    let dim = kernel.dim();
    let volume = geom::unit_ball_volume(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let z = sample_unit_ball(&mut rng, dim);
        let val = if geom::dot(&z, nu) >= t {
            kernel.eval(&z)
        } else {
            0.0
        };
        sum += val;
        sum_sq += val * val;
    }
    let (mean, se) = mean_and_se(sum, sum_sq, samples);
    McEstimate {
        value: volume * mean,
        std_error: volume * se,
    }
}

/// Estimates the total mass of the *unnormalized* bump profile, i.e. the
/// kernel with its normalization constant divided back out. The production
/// route computes the same number as 1 / normalization.
pub fn mc_raw_mass_oracle(kernel: &Kernel, samples: u64, seed: u64) -> McEstimate {
    assert!(samples >= 10_000, "raw mass oracle needs >= 10^4 samples");
    let dim = kernel.dim();
    let volume = geom::unit_ball_volume(dim);
    let scale = 1.0 / kernel.normalization();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let z = sample_unit_ball(&mut rng, dim);
        let val = kernel.eval(&z) * scale;
        sum += val;
        sum_sq += val * val;
    }
    let (mean, se) = mean_and_se(sum, sum_sq, samples);
    McEstimate {
        value: volume * mean,
        std_error: volume * se,
    }
}

/// Estimates the absolute moment ∫ G(z) |z·ν| dz along a direction by the
/// same uniform rejection sampling as the halfspace oracle.
pub fn mc_absolute_moment_oracle(
    kernel: &Kernel,
    nu: &Vector,
    samples: u64,
    seed: u64,
) -> McEstimate {
    assert!(samples >= 10_000, "moment oracle needs >= 10^4 samples");
    check_direction(nu);
    let dim = kernel.dim();
    let volume = geom::unit_ball_volume(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let z = sample_unit_ball(&mut rng, dim);
        let val = kernel.eval(&z) * geom::dot(&z, nu).abs();
        sum += val;
        sum_sq += val * val;
    }
    let (mean, se) = mean_and_se(sum, sum_sq, samples);
    McEstimate {
        value: volume * mean,
        std_error: volume * se,
    }
}

/// Numeric bound on the slope of the profile over the mass range [0, 0.6]
/// (halfspace masses never exceed one half), with a small safety factor.
fn max_profile_slope(profile: &Profile) -> f64 {
    let grid = 2048;
    let hi = 0.6;
    let step = hi / grid as f64;
    let mut max_slope: f64 = 0.0;
    let mut prev = profile.eval(0.0);
    for i in 1..=grid {
        let y = profile.eval(step * i as f64);
        max_slope = max_slope.max(((y - prev) / step).abs());
        prev = y;
    }
    max_slope * 1.05
}

/// Estimates θ(ν) = ∫₀¹ f(halfspace mass at t) dt by stratifying the offset
/// into `THETA_STRATA` midpoint cells and running an independent halfspace
/// estimate in each. The reported error propagates the per-stratum noise
/// through a numeric Lipschitz bound on the profile.
pub fn mc_theta_oracle(ctx: &DensityContext, nu: &Vector, samples: u64, seed: u64) -> McEstimate {
    let per_stratum = samples / THETA_STRATA;
    assert!(
        per_stratum >= 10_000,
        "theta oracle needs >= 10^4 samples per stratum"
    );
    check_direction(nu);
    let mut acc = 0.0;
    let mut se_sq = 0.0;
    for j in 0..THETA_STRATA {
        let t = (j as f64 + 0.5) / THETA_STRATA as f64;
        let mass = mc_halfspace_oracle(ctx.kernel(), nu, t, per_stratum, seed + j);
        acc += ctx.profile().eval(mass.value);
        se_sq += mass.std_error * mass.std_error;
    }
    let lipschitz = max_profile_slope(ctx.profile());
    McEstimate {
        value: acc / THETA_STRATA as f64,
        std_error: lipschitz * se_sq.sqrt() / THETA_STRATA as f64,
    }
}

/// Estimates the slice integral ∫_{z·ν = s} G dH^{d−1} by measuring the mass
/// of thin slabs |z·ν − s| ≤ δ/2 for three halved widths and extrapolating
/// the width away. All widths share one sample stream. The standard error is
/// conservative: twice the largest per-width error, which covers the
/// extrapolation amplification.
pub fn mc_slice_oracle(
    kernel: &Kernel,
    nu: &Vector,
    s: f64,
    samples: u64,
    seed: u64,
) -> McEstimate {
    assert!(samples >= 10_000, "slice oracle needs >= 10^4 samples");
    check_direction(nu);
    let dim = kernel.dim();
    let volume = geom::unit_ball_volume(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = [0.0; 3];
    let mut sum_sqs = [0.0; 3];
    for _ in 0..samples {
        let z = sample_unit_ball(&mut rng, dim);
        let g = kernel.eval(&z);
        if g == 0.0 {
            continue;
        }
        let dist = (geom::dot(&z, nu) - s).abs();
        for (k, &width) in SLICE_WIDTHS.iter().enumerate() {
            if dist <= 0.5 * width {
                sums[k] += g;
                sum_sqs[k] += g * g;
            }
        }
    }
    let mut values = [0.0; 3];
    let mut worst_se: f64 = 0.0;
    for k in 0..3 {
        let (mean, se) = mean_and_se(sums[k], sum_sqs[k], samples);
        values[k] = volume * mean / SLICE_WIDTHS[k];
        worst_se = worst_se.max(volume * se / SLICE_WIDTHS[k]);
    }
    McEstimate {
        value: richardson_extrapolate(&SLICE_WIDTHS, &values),
        std_error: 2.0 * worst_se,
    }
}

/// Independent route to the first radial moment ∫ G(z) |z| dz of a radial
/// kernel: a flat trapezoid rule with 10^4 panels on the radial reduction.
/// The integrand vanishes to all orders at r = 1 and has no odd low-order
/// derivatives contributing at r = 0, so the rule is far more accurate than
/// its nominal order; the production value should match to ~1e-10 or better.
pub fn trapezoid_radial_moment_oracle(kernel: &Kernel) -> Result<f64, LabError> {
    if !kernel.is_radial() {
        return Err(LabError::Config(
            "the trapezoid moment oracle needs a radial kernel".into(),
        ));
    }
    let dim = kernel.dim();
    let panels = 10_000usize;
    let step = 1.0 / panels as f64;
    let mut total = 0.0;
    for i in 0..=panels {
        let r = step * i as f64;
        let weight = if i == 0 || i == panels { 0.5 } else { 1.0 };
        total += weight * kernel.eval(&[r, 0.0, 0.0]) * r.powi(dim as i32);
    }
    Ok(total * step * geom::unit_sphere_area(dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{self, make_bump_kernel};
    use crate::profiles::builtin_profile;

    #[test]
    fn halfspace_oracle_matches_the_zero_offset_law() {
        let kernel = make_bump_kernel(2, None).unwrap();
        let est = mc_halfspace_oracle(&kernel, &[1.0, 0.0, 0.0], 0.0, 20_000, 7);
        assert!(est.std_error > 0.0);
        assert!(
            (est.value - 0.5).abs() <= 3.0 * est.std_error,
            "value {} se {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn halfspace_oracle_is_exactly_zero_at_offset_one() {
        let kernel = make_bump_kernel(2, None).unwrap();
        let est = mc_halfspace_oracle(&kernel, &[0.0, 1.0, 0.0], 1.0, 10_000, 3);
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn halfspace_oracle_agrees_with_quadrature() {
        let kernel = make_bump_kernel(2, None).unwrap();
        let nu = [0.6, 0.8, 0.0];
        let quad = kernels::halfspace_mass(&kernel, &nu, 0.3).unwrap();
        let est = mc_halfspace_oracle(&kernel, &nu, 0.3, 50_000, 11);
        assert!(
            (est.value - quad).abs() <= 3.0 * est.std_error,
            "mc {} quad {} se {}",
            est.value,
            quad,
            est.std_error
        );
    }

    #[test]
    fn theta_oracle_agrees_with_quadrature() {
        let kernel = make_bump_kernel(2, None).unwrap();
        let profile = builtin_profile("identity", None).unwrap();
        let ctx = DensityContext::new(kernel, profile);
        let nu = [1.0, 0.0, 0.0];
        let quad = ctx.theta(&nu).unwrap();
        let est = mc_theta_oracle(&ctx, &nu, 64 * 15_000, 19);
        assert!(
            (est.value - quad).abs() <= 3.0 * est.std_error,
            "mc {} quad {} se {}",
            est.value,
            quad,
            est.std_error
        );
    }

    #[test]
    fn absolute_moment_oracle_agrees_with_quadrature() {
        let aniso = [[1.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let kernel = make_bump_kernel(2, Some(aniso)).unwrap();
        let nu = [1.0, 0.0, 0.0];
        let quad = kernels::absolute_moment_along(&kernel, &nu).unwrap();
        let est = mc_absolute_moment_oracle(&kernel, &nu, 50_000, 29);
        assert!(
            (est.value - quad).abs() <= 3.0 * est.std_error,
            "mc {} quad {} se {}",
            est.value,
            quad,
            est.std_error
        );
    }

    #[test]
    fn raw_mass_oracle_matches_inverse_normalization() {
        let kernel = make_bump_kernel(2, None).unwrap();
        let target = 1.0 / kernel.normalization();
        let est = mc_raw_mass_oracle(&kernel, 30_000, 5);
        assert!(
            (est.value - target).abs() <= 3.0 * est.std_error,
            "mc {} target {} se {}",
            est.value,
            target,
            est.std_error
        );
    }

    #[test]
    fn slice_oracle_agrees_with_quadrature() {
        let kernel = make_bump_kernel(2, None).unwrap();
        let nu = [1.0, 0.0, 0.0];
        let quad = kernels::slice_integral(&kernel, &nu, 0.3).unwrap();
        let est = mc_slice_oracle(&kernel, &nu, 0.3, 2_000_000, 23);
        assert!(
            (est.value - quad).abs() <= 3.0 * est.std_error,
            "mc {} quad {} se {}",
            est.value,
            quad,
            est.std_error
        );
    }

    #[test]
    fn trapezoid_moment_oracle_matches_production_quadrature() {
        for dim in [2, 3] {
            let kernel = make_bump_kernel(dim, None).unwrap();
            let oracle = trapezoid_radial_moment_oracle(&kernel).unwrap();
            let quad = kernels::first_radial_moment(&kernel);
            assert!(
                (oracle - quad).abs() < 1e-10,
                "dim {dim}: oracle {oracle} quad {quad}"
            );
        }
    }

    #[test]
    fn trapezoid_moment_oracle_rejects_anisotropy() {
        let aniso = [[1.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let kernel = make_bump_kernel(2, Some(aniso)).unwrap();
        assert!(trapezoid_radial_moment_oracle(&kernel).is_err());
    }
}
