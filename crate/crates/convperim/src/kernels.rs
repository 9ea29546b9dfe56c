//! Admissible convolution kernels: even, nonnegative, unit mass, supported in
//! the closed unit ball.
//!
//! The concrete family is the normalized bump `z ↦ c · exp(−1/(1−|Az|²))`
//! with an optional symmetric positive-definite anisotropy `A` whose smallest
//! singular value is at least 1, so that the support `{|Az| ≤ 1}` stays inside
//! the unit ball. On top of pointwise evaluation the module computes the
//! integral quantities the rest of the crate is built from: hyperplane slice
//! integrals, half-space masses, the absolute moment along a direction, and
//! the first radial moment.
//!
//! Half-space masses are always computed through the slice decomposition
//! (1D outer integral of hyperplane slices), never by masked N-dimensional
//! quadrature: the mask would make tensor quadrature first-order, while the
//! slice integrand is smooth. For the same reason both outer integrals run
//! over the exact support interval `[·, σ(ν)]`, where `σ(ν) = |A⁻ᵀν|` is the
//! extent of the support ellipsoid in direction ν; integrating past σ(ν)
//! would put an (infinitely) flat but abrupt support end strictly inside the
//! quadrature interval and cost several digits.

use crate::geom::{
    self, det, dot, matvec, norm, solve, symmetric_eigenvalues, tangent_basis, transpose, Matrix,
    Vector,
};
use crate::quad;
use thiserror::Error;

/// Tolerance on |ν| − 1 before a direction is rejected.
const UNIT_NORM_TOL: f64 = 1e-12;
/// Slack on the smallest-singular-value admissibility bound.
const SIGMA_MIN_TOL: f64 = 1e-12;
/// One-dimensional Gauss-Legendre order used for construction-time
/// normalization and other exact radial reductions (the integrands are C^∞
/// and compactly supported; this order is far past the accuracy plateau).
const RADIAL_ORDER: usize = 96;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel dimension must be 2 or 3, got {0}")]
    UnsupportedDim(usize),
    #[error("anisotropy matrix is not symmetric (|a[{i}][{j}] - a[{j}][{i}]| = {dev:.3e})")]
    NotSymmetric { i: usize, j: usize, dev: f64 },
    #[error("anisotropy matrix is not positive definite (eigenvalue {0:.6e})")]
    NotPositiveDefinite(f64),
    #[error(
        "anisotropy matrix has smallest singular value {sigma_min:.12} < 1; \
         the support {{|Az| <= 1}} would exit the unit ball"
    )]
    SupportExceedsBall { sigma_min: f64 },
    #[error("direction must be a unit vector (|nu| deviates from 1 by {deviation:.3e})")]
    NonUnitDirection { deviation: f64 },
    #[error("half-space offset must lie in [0,1], got {0}")]
    OffsetOutOfRange(f64),
}

/// Gauss-Legendre orders used by the kernel quadratures, gathered in one
/// record so every consumer agrees on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuadOptions {
    /// Order of the inner (hyperplane-slice) rule: chord rule in 2D, radial
    /// rule on the ellipse section in 3D.
    pub slice_order: usize,
    /// Order of outer 1D rules built on top of slices (half-space mass,
    /// absolute moment).
    pub outer_order: usize,
}

impl Default for KernelQuadOptions {
    fn default() -> Self {
        Self {
            slice_order: 64,
            outer_order: 64,
        }
    }
}

/// An even, nonnegative kernel of unit mass supported in the closed unit
/// ball. Immutable after construction; all operations are pure.
#[derive(Debug, Clone)]
pub struct Kernel {
    dim: usize,
    /// Multiplier fixing total mass to 1.
    normalization: f64,
    /// The anisotropy matrix A; the identity when constructed without one.
    anisotropy: Matrix,
    /// `Some(s)` iff A = s·I, i.e. the kernel is radially symmetric.
    radial_scale: Option<f64>,
    /// Whether an anisotropy was supplied explicitly.
    has_anisotropy: bool,
    quad: KernelQuadOptions,
}

/// The unnormalized profile r² ↦ exp(−1/(1−r²)), taking the *squared* radius
/// to avoid a redundant square root in hot loops.
fn bump_of_square(q: f64) -> f64 {
    if q < 1.0 {
        (-1.0 / (1.0 - q)).exp()
    } else {
        0.0
    }
}

/// ∫₀¹ exp(−1/(1−r²)) r^{k} dr, the 1D building block of every exact radial
/// reduction.
fn radial_bump_integral(k: usize) -> f64 {
    quad::rule(RADIAL_ORDER).integrate(0.0, 1.0, |r| bump_of_square(r * r) * r.powi(k as i32))
}

/// Builds the normalized bump kernel `c · exp(−1/(1−|Az|²))` (A = identity if
/// absent). The normalization is exact up to 1D quadrature: by the change of
/// variables w = Az the raw mass is `S_{N−1} · ∫₀¹ exp(−1/(1−r²)) r^{N−1} dr
/// / det A`, so c = det A / (S_{N−1} · I_{N−1}).
pub fn make_bump_kernel(dim: usize, anisotropy: Option<Matrix>) -> Result<Kernel, KernelError> {
    if !(2..=3).contains(&dim) {
        return Err(KernelError::UnsupportedDim(dim));
    }
    let a = match anisotropy {
        Some(m) => {
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let dev = (m[i][j] - m[j][i]).abs();
                    if dev > 1e-12 {
                        return Err(KernelError::NotSymmetric { i, j, dev });
                    }
                }
            }
            let eigen = symmetric_eigenvalues(&m, dim);
            if eigen[0] <= 0.0 {
                return Err(KernelError::NotPositiveDefinite(eigen[0]));
            }
            // For a symmetric positive-definite matrix the singular values
            // are the eigenvalues.
            if eigen[0] < 1.0 - SIGMA_MIN_TOL {
                return Err(KernelError::SupportExceedsBall {
                    sigma_min: eigen[0],
                });
            }
            m
        }
        None => geom::identity(dim),
    };
    let radial_scale = detect_radial_scale(&a, dim);
    let raw_mass = geom::unit_sphere_area(dim) * radial_bump_integral(dim - 1) / det(&a, dim);
    Ok(Kernel {
        dim,
        normalization: 1.0 / raw_mass,
        anisotropy: a,
        radial_scale,
        has_anisotropy: anisotropy.is_some(),
        quad: KernelQuadOptions::default(),
    })
}

/// `Some(s)` when `a` equals `s · I` on its leading `dim × dim` block.
fn detect_radial_scale(a: &Matrix, dim: usize) -> Option<f64> {
    let s = a[0][0];
    for i in 0..dim {
        for j in 0..dim {
            let expect = if i == j { s } else { 0.0 };
            if (a[i][j] - expect).abs() > 1e-14 * s.max(1.0) {
                return None;
            }
        }
    }
    Some(s)
}

impl Kernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Radius of the ball guaranteed to contain the support; fixed at 1.
    pub fn support_radius(&self) -> f64 {
        1.0
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// The anisotropy matrix, if one was supplied at construction.
    pub fn anisotropy(&self) -> Option<&Matrix> {
        if self.has_anisotropy {
            Some(&self.anisotropy)
        } else {
            None
        }
    }

    /// Whether the kernel is radially symmetric (A a scalar multiple of the
    /// identity, including the default identity).
    pub fn is_radial(&self) -> bool {
        self.radial_scale.is_some()
    }

    /// The radial profile g with eval(z) = g(|z|), present iff the kernel is
    /// radially symmetric; defined for r in [0,1].
    pub fn radial_profile(&self, r: f64) -> Option<f64> {
        self.radial_scale
            .map(|s| self.normalization * bump_of_square((s * r) * (s * r)))
    }

    /// Pointwise kernel value.
    pub fn eval(&self, z: &Vector) -> f64 {
        let az = matvec(&self.anisotropy, z);
        self.normalization * bump_of_square(dot(&az, &az))
    }

    pub fn quad_options(&self) -> &KernelQuadOptions {
        &self.quad
    }

    /// Returns a copy using the given quadrature orders.
    pub fn with_quad_options(mut self, quad: KernelQuadOptions) -> Self {
        self.quad = quad;
        self
    }

    /// The support extent in direction ν: σ(ν) = max{z·ν : |Az| ≤ 1} = |A⁻ᵀν|.
    pub fn support_extent(&self, nu: &Vector) -> f64 {
        let at = transpose(&self.anisotropy, self.dim);
        norm(&solve(&at, nu, self.dim))
    }

    fn check_unit(&self, nu: &Vector) -> Result<(), KernelError> {
        let deviation = (norm(nu) - 1.0).abs();
        if deviation > UNIT_NORM_TOL {
            return Err(KernelError::NonUnitDirection { deviation });
        }
        Ok(())
    }
}

/// Mass of the half-space {z·ν ≥ t} under a kernel, packaged with its inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfspaceMass {
    pub normal: Vector,
    pub offset: f64,
    pub value: f64,
}

impl HalfspaceMass {
    pub fn compute(kernel: &Kernel, nu: &Vector, t: f64) -> Result<Self, KernelError> {
        Ok(Self {
            normal: *nu,
            offset: t,
            value: halfspace_mass(kernel, nu, t)?,
        })
    }
}

/// Total mass by deterministic tensor-product Gauss-Legendre quadrature of
/// `eval` over [−1,1]^N with `quad_order` nodes per axis, summed in a fixed
/// lexicographic order.
pub fn kernel_total_mass(kernel: &Kernel, quad_order: usize) -> f64 {
    assert!(quad_order >= 2, "quadrature order must be at least 2");
    let rule = quad::rule(quad_order);
    let nodes = rule.mapped(-1.0, 1.0);
    let mut total = 0.0;
    match kernel.dim {
        2 => {
            for &(x, wx) in &nodes {
                let mut row = 0.0;
                for &(y, wy) in &nodes {
                    row += wy * kernel.eval(&[x, y, 0.0]);
                }
                total += wx * row;
            }
        }
        3 => {
            for &(x, wx) in &nodes {
                let mut plane = 0.0;
                for &(y, wy) in &nodes {
                    let mut row = 0.0;
                    for &(z, wz) in &nodes {
                        row += wz * kernel.eval(&[x, y, z]);
                    }
                    plane += wy * row;
                }
                total += wx * plane;
            }
        }
        d => unreachable!("kernel constructed with unsupported dim {d}"),
    }
    total
}

/// Integral of the kernel over the hyperplane {z·ν = s}.
///
/// The hyperplane is parametrized by an orthonormal tangent basis of ν^⊥.
/// In 2D the section of the support ellipsoid is a chord whose endpoints are
/// the roots of a quadratic; Gauss-Legendre runs exactly over the chord. In
/// 3D the section is an ellipse; mapping it from the unit disk reduces the
/// integral to a 1D radial rule, because |Az|² is radial in the mapped
/// coordinate. Returns 0 for |s| beyond the support extent (in particular
/// for |s| ≥ 1).
pub fn slice_integral(kernel: &Kernel, nu: &Vector, s: f64) -> Result<f64, KernelError> {
    slice_integral_with_order(kernel, nu, s, kernel.quad.slice_order)
}

pub fn slice_integral_with_order(
    kernel: &Kernel,
    nu: &Vector,
    s: f64,
    order: usize,
) -> Result<f64, KernelError> {
    kernel.check_unit(nu)?;
    if s.abs() >= 1.0 {
        return Ok(0.0);
    }
    let a = &kernel.anisotropy;
    let dim = kernel.dim;
    let tangents = tangent_basis(nu, dim);
    let anu = matvec(a, nu);
    let rule = quad::rule(order);
    match dim {
        2 => {
            let atau = matvec(a, &tangents[0]);
            // |A(sν + tτ)|² = qa·t² + 2·qb·t + qc
            let qa = dot(&atau, &atau);
            let qb = s * dot(&anu, &atau);
            let qc = s * s * dot(&anu, &anu);
            let disc = qb * qb - qa * (qc - 1.0);
            if disc <= 0.0 {
                return Ok(0.0);
            }
            let half_width = disc.sqrt() / qa;
            let center = -qb / qa;
            let value = rule.integrate(center - half_width, center + half_width, |t| {
                bump_of_square(qa * t * t + 2.0 * qb * t + qc)
            });
            Ok(kernel.normalization * value)
        }
        3 => {
            let at1 = matvec(a, &tangents[0]);
            let at2 = matvec(a, &tangents[1]);
            // |A(sν + y₁τ₁ + y₂τ₂)|² = yᵀQy + 2s·bᵀy + s²|Aν|²
            let q: Matrix = [
                [dot(&at1, &at1), dot(&at1, &at2), 0.0],
                [dot(&at2, &at1), dot(&at2, &at2), 0.0],
                [0.0; 3],
            ];
            let b = [dot(&anu, &at1), dot(&anu, &at2), 0.0];
            let q_inv_b = solve(&q, &b, 2);
            // Minimum of the quadratic over the plane, attained at the
            // ellipse center y₀ = −s·Q⁻¹b.
            let m0 = s * s * (dot(&anu, &anu) - dot(&b, &q_inv_b));
            let rho_sq = 1.0 - m0;
            if rho_sq <= 0.0 {
                return Ok(0.0);
            }
            // Mapping the unit disk p ↦ y₀ + ρ·Q^{−1/2}p turns the section
            // integral into ρ²/√(det Q) · ∫_{|p|≤1} bump(m0 + ρ²|p|²) dp,
            // which is radial in p.
            let det_q = det(&q, 2);
            let radial = rule.integrate(0.0, 1.0, |r| bump_of_square(m0 + rho_sq * r * r) * r);
            Ok(kernel.normalization * rho_sq / det_q.sqrt()
                * 2.0
                * std::f64::consts::PI
                * radial)
        }
        d => unreachable!("kernel constructed with unsupported dim {d}"),
    }
}

/// Mass of the kernel in the half-space {z·ν ≥ t}: the 1D integral of
/// `slice_integral` over s ∈ [t, σ(ν)]. Nonincreasing in t, 1/2 at t = 0 by
/// evenness, 0 at t = 1.
pub fn halfspace_mass(kernel: &Kernel, nu: &Vector, t: f64) -> Result<f64, KernelError> {
    halfspace_mass_with_orders(kernel, nu, t, kernel.quad.outer_order, kernel.quad.slice_order)
}

pub fn halfspace_mass_with_orders(
    kernel: &Kernel,
    nu: &Vector,
    t: f64,
    outer_order: usize,
    slice_order: usize,
) -> Result<f64, KernelError> {
    kernel.check_unit(nu)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(KernelError::OffsetOutOfRange(t));
    }
    let sigma = kernel.support_extent(nu);
    if t >= sigma {
        return Ok(0.0);
    }
    let rule = quad::rule(outer_order);
    let mut acc = 0.0;
    for (s, w) in rule.mapped(t, sigma) {
        acc += w * slice_integral_with_order(kernel, nu, s, slice_order)?;
    }
    Ok(acc)
}

/// The absolute moment ∫ G(z)|z·ν| dz, computed through the slice
/// decomposition: by evenness it equals 2·∫₀^{σ(ν)} s · slice(ν, s) ds, whose
/// integrand is smooth — unlike the |z·ν| kink seen by tensor quadrature.
/// For radial kernels the result is independent of ν.
pub fn absolute_moment_along(kernel: &Kernel, nu: &Vector) -> Result<f64, KernelError> {
    kernel.check_unit(nu)?;
    let sigma = kernel.support_extent(nu);
    let rule = quad::rule(kernel.quad.outer_order);
    let mut acc = 0.0;
    for (s, w) in rule.mapped(0.0, sigma) {
        acc += w * s * slice_integral(kernel, nu, s)?;
    }
    Ok(2.0 * acc)
}

/// The first radial moment ∫ G(z)|z| dz.
///
/// Radial kernels reduce exactly to the 1D integral
/// `S_{N−1} · ∫ g(r) r^N dr`. Anisotropic kernels reduce, via w = Az, to a
/// product of that radial factor with the smooth angular integral
/// ∫_{S^{N−1}} |A⁻¹ω| dH(ω) — again avoiding the |z| kink that would make
/// tensor quadrature lose digits.
pub fn first_radial_moment(kernel: &Kernel) -> f64 {
    let dim = kernel.dim;
    if let Some(scale) = kernel.radial_scale {
        // g(r) = c · bump((scale·r)²) supported on [0, 1/scale]; substitute
        // u = scale·r to land on the fixed [0,1] building block.
        let raw = radial_bump_integral(dim) / scale.powi(dim as i32 + 1);
        return kernel.normalization * geom::unit_sphere_area(dim) * raw;
    }
    let a = &kernel.anisotropy;
    let det_a = det(a, dim);
    let radial_factor = radial_bump_integral(dim);
    let angular = match dim {
        2 => {
            // Smooth periodic integrand: the trapezoid rule is spectral.
            let n = 512;
            let mut acc = 0.0;
            for i in 0..n {
                let phi = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
                let omega = [phi.cos(), phi.sin(), 0.0];
                acc += norm(&solve(a, &omega, 2));
            }
            acc * 2.0 * std::f64::consts::PI / (n as f64)
        }
        3 => {
            let rule = quad::rule(64);
            let n_phi = 128;
            let mut acc = 0.0;
            for (mu, w_mu) in rule.mapped(-1.0, 1.0) {
                let sin_theta = (1.0 - mu * mu).max(0.0).sqrt();
                let mut ring = 0.0;
                for i in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * (i as f64) / (n_phi as f64);
                    let omega = [sin_theta * phi.cos(), sin_theta * phi.sin(), mu];
                    ring += norm(&solve(a, &omega, 3));
                }
                acc += w_mu * ring * 2.0 * std::f64::consts::PI / (n_phi as f64);
            }
            acc
        }
        d => unreachable!("kernel constructed with unsupported dim {d}"),
    };
    kernel.normalization / det_a * radial_factor * angular
}
