//! The anisotropic surface density
//! `θ(ν) = ∫₀¹ f( mass of G in {z·ν ≥ t} ) dt`
//! and the limit perimeter functional `F(E) = ∫_{∂E∩Ω} θ(ν_E) dH^{N−1}`.
//!
//! θ is the ε → 0 limit of the rescaled convolution energy: across a flat
//! interface with normal ν, the convolved indicator at signed distance εt
//! equals the half-space mass at offset t, and the 1/ε rescaling turns the
//! normal integral into the t-integral above.
//!
//! Evaluation inverts the naive order: instead of one half-space quadrature
//! per t node (quadratic in the order), the slice function s ↦ slice(ν, s)
//! is sampled once on a Gauss-Legendre grid, projected onto a Legendre
//! expansion, and integrated in closed form — Legendre antiderivatives are
//! again Legendre — giving every half-space mass from one set of samples.
//! A nested reference implementation stays available for cross-checking.

use crate::geom::{norm, scale, Vector};
use crate::kernels::{
    first_radial_moment, halfspace_mass_with_orders, slice_integral_with_order, Kernel,
    KernelError,
};
use crate::profiles::Profile;
use crate::quad::{self, legendre_all};
use crate::shapes::{boundary_quadrature, Domain, Shape, ShapeError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::Mutex;

/// Quantization step for the direction cache: two normals agreeing to this
/// tolerance share a θ value.
const CACHE_QUANTUM: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum DensityError {
    #[error("{which} = {got} is too small; the density quadratures need order >= 8")]
    OrderTooSmall { which: &'static str, got: usize },
    #[error("kernel is not radially symmetric; this quantity is only defined for radial kernels")]
    NotRadial,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// A midpoint-convexity counterexample found by [`DensityContext::convexity_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityViolation {
    pub u: Vector,
    pub v: Vector,
    /// θ̃((u+v)/2) − (θ̃(u) + θ̃(v))/2, beyond tolerance.
    pub excess: f64,
}

impl std::fmt::Display for ConvexityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "theta_tilde midpoint exceeds the average by {:.3e} at u = {:?}, v = {:?}",
            self.excess, self.u, self.v
        )
    }
}

/// The value of the limit functional together with the quadrature health
/// flag carried over from the boundary rule.
#[derive(Debug, Clone, Copy)]
pub struct LimitEstimate {
    pub value: f64,
    pub order_warning: bool,
}

/// Everything needed to evaluate θ: kernel, profile, quadrature orders, and
/// a cache keyed on quantized directions so repeated normals (every facet of
/// a box, every experiment rerun) cost one evaluation.
#[derive(Debug)]
pub struct DensityContext {
    kernel: Kernel,
    profile: Profile,
    t_order: usize,
    slice_order: usize,
    cache: Mutex<HashMap<[i64; 3], f64>>,
}

impl DensityContext {
    /// Context with the default orders (64 offset nodes, 64-point slices).
    pub fn new(kernel: Kernel, profile: Profile) -> Self {
        Self::with_orders(kernel, profile, 64, 64).expect("default orders are valid")
    }

    pub fn with_orders(
        kernel: Kernel,
        profile: Profile,
        t_order: usize,
        slice_order: usize,
    ) -> Result<Self, DensityError> {
        if t_order < 8 {
            return Err(DensityError::OrderTooSmall {
                which: "t_order",
                got: t_order,
            });
        }
        if slice_order < 8 {
            return Err(DensityError::OrderTooSmall {
                which: "slice_order",
                got: slice_order,
            });
        }
        Ok(Self {
            kernel,
            profile,
            t_order,
            slice_order,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn t_order(&self) -> usize {
        self.t_order
    }

    pub fn slice_order(&self) -> usize {
        self.slice_order
    }

    /// Number of distinct directions evaluated so far.
    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("theta cache poisoned").len()
    }

    /// The surface density θ(ν) for a unit direction ν. Cached.
    pub fn theta(&self, nu: &Vector) -> Result<f64, DensityError> {
        let key = [
            (nu[0] / CACHE_QUANTUM).round() as i64,
            (nu[1] / CACHE_QUANTUM).round() as i64,
            (nu[2] / CACHE_QUANTUM).round() as i64,
        ];
        if let Some(&hit) = self.cache.lock().expect("theta cache poisoned").get(&key) {
            return Ok(hit);
        }
        let value = self.theta_fast(nu)?;
        self.cache
            .lock()
            .expect("theta cache poisoned")
            .insert(key, value);
        Ok(value)
    }

    /// One-pass evaluation: sample the slice function, fit a Legendre
    /// expansion, integrate it exactly to get every half-space mass, then
    /// apply the outer rule to f. The integrand vanishes identically for
    /// t ≥ σ(ν) = |A^{-T}ν|, so the t-integral runs over [0, σ] only.
    fn theta_fast(&self, nu: &Vector) -> Result<f64, DensityError> {
        let sigma = self.kernel.support_extent(nu);
        let rule = quad::rule(self.t_order);
        let slices: Vec<f64> = rule
            .mapped(0.0, sigma)
            .into_iter()
            .map(|(s, _)| slice_integral_with_order(&self.kernel, nu, s, self.slice_order))
            .collect::<Result<_, _>>()?;

        // Legendre coefficients of the slice samples on the reference
        // interval (x = 2s/σ − 1): c_k = (2k+1)/2 · Σᵢ wᵢ S(sᵢ) P_k(xᵢ).
        let kmax = self.t_order - 1;
        let mut coeff = vec![0.0; kmax + 1];
        let mut pbuf = vec![0.0; kmax + 2];
        for ((&x, &w), &s_val) in rule.nodes.iter().zip(&rule.weights).zip(&slices) {
            legendre_all(kmax + 1, x, &mut pbuf);
            for (k, c) in coeff.iter_mut().enumerate() {
                *c += w * s_val * pbuf[k] * (2.0 * k as f64 + 1.0) / 2.0;
            }
        }

        // H(t) = ∫_t^σ S ds = (σ/2)·Σ_k c_k ∫_x^1 P_k dx̃, with
        // ∫ P_k = (P_{k+1} − P_{k−1})/(2k+1) and P_k(1) = 1 for every k.
        let mut total = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            legendre_all(kmax + 1, x, &mut pbuf);
            let mut h = coeff[0] * (1.0 - x);
            for (k, &c) in coeff.iter().enumerate().skip(1) {
                h -= c * (pbuf[k + 1] - pbuf[k - 1]) / (2.0 * k as f64 + 1.0);
            }
            h *= sigma / 2.0;
            total += w * self.profile.eval(h.max(0.0));
        }
        Ok(total * sigma / 2.0)
    }

    /// Reference evaluation with one nested half-space quadrature per t
    /// node. Slower by a factor of the outer order; used to validate the
    /// fast path.
    pub fn theta_nested(&self, nu: &Vector) -> Result<f64, DensityError> {
        let sigma = self.kernel.support_extent(nu);
        let rule = quad::rule(self.t_order);
        let mut total = 0.0;
        for (t, w) in rule.mapped(0.0, sigma) {
            let mass =
                halfspace_mass_with_orders(&self.kernel, nu, t, self.t_order, self.slice_order)?;
            total += w * self.profile.eval(mass);
        }
        Ok(total)
    }

    /// The one-homogeneous extension θ̃(v) = |v| · θ(v/|v|), with
    /// θ̃(0) = 0 exactly.
    pub fn theta_tilde(&self, v: &Vector) -> Result<f64, DensityError> {
        let len = norm(v);
        if len == 0.0 {
            return Ok(0.0);
        }
        Ok(len * self.theta(&scale(v, 1.0 / len))?)
    }

    /// The limit functional F(E) = ∫_{∂E∩Ω} θ(ν_E) dH^{N−1}, via the shape's
    /// boundary quadrature. The direction cache makes polyhedral shapes cost
    /// one θ evaluation per distinct facet normal.
    pub fn limit_functional(
        &self,
        shape: &Shape,
        dom: &Domain,
        order: usize,
    ) -> Result<LimitEstimate, DensityError> {
        let bq = boundary_quadrature(shape, dom, order)?;
        let mut value = 0.0;
        for node in &bq.nodes {
            value += node.weight * self.theta(&node.normal)?;
        }
        Ok(LimitEstimate {
            value,
            order_warning: bq.order_warning,
        })
    }

    /// The direction-independent value θ(e_N) of a radially symmetric
    /// kernel, computed once along the last coordinate axis. Errors on
    /// anisotropic kernels, where θ genuinely varies.
    pub fn radial_constant(&self) -> Result<f64, DensityError> {
        if !self.kernel.is_radial() {
            return Err(DensityError::NotRadial);
        }
        let mut e_n = [0.0, 0.0, 0.0];
        e_n[self.kernel.dim() - 1] = 1.0;
        self.theta(&e_n)
    }

    /// Random midpoint-convexity probe of θ̃ on the ball of radius 2.
    /// Returns every pair where θ̃((u+v)/2) exceeds (θ̃(u)+θ̃(v))/2 by more
    /// than 1e−9 — findings are data, not panics.
    pub fn convexity_probe(
        &self,
        trials: usize,
        seed: u64,
    ) -> Result<Vec<ConvexityViolation>, DensityError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.kernel.dim();
        let draw = |rng: &mut ChaCha8Rng| -> Vector {
            loop {
                let mut v = [0.0; 3];
                for component in v.iter_mut().take(dim) {
                    *component = rng.gen_range(-2.0..2.0);
                }
                if norm(&v) <= 2.0 {
                    return v;
                }
            }
        };
        let mut violations = Vec::new();
        for _ in 0..trials {
            let u = draw(&mut rng);
            let v = draw(&mut rng);
            let mid = [
                0.5 * (u[0] + v[0]),
                0.5 * (u[1] + v[1]),
                0.5 * (u[2] + v[2]),
            ];
            let lhs = self.theta_tilde(&mid)?;
            let rhs = 0.5 * (self.theta_tilde(&u)? + self.theta_tilde(&v)?);
            if lhs > rhs + 1e-9 {
                violations.push(ConvexityViolation {
                    u,
                    v,
                    excess: lhs - rhs,
                });
            }
        }
        Ok(violations)
    }
}

/// Closed form of the density constant for a radial kernel with the identity
/// profile: θ ≡ |B^{N−1}| / H^{N−1}(S^{N−1}) · ∫ G(z)|z| dz, which is
/// (1/π)·∫G|z| in 2D and (1/4)·∫G|z| in 3D.
pub fn closed_form_c_ng(kernel: &Kernel) -> Result<f64, DensityError> {
    if !kernel.is_radial() {
        return Err(DensityError::NotRadial);
    }
    let n = kernel.dim();
    let moment = first_radial_moment(kernel);
    Ok(moment * crate::geom::unit_ball_volume(n - 1) / crate::geom::unit_sphere_area(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{absolute_moment_along, make_bump_kernel};
    use crate::profiles::builtin_profile;

    fn identity_ctx(dim: usize) -> DensityContext {
        DensityContext::new(
            make_bump_kernel(dim, None).unwrap(),
            builtin_profile("identity", None).unwrap(),
        )
    }

    #[test]
    fn fast_path_matches_nested_reference() {
        let aniso = [[1.5, 0.2, 0.0], [0.2, 1.4, 0.0], [0.0, 0.0, 1.25]];
        let dirs2 = [[1.0, 0.0, 0.0], [0.6, 0.8, 0.0]];
        let sqrt14 = 14.0f64.sqrt();
        let dir3 = [1.0 / sqrt14, 2.0 / sqrt14, 3.0 / sqrt14];
        for profile_name in ["identity", "expm1"] {
            let f = builtin_profile(profile_name, None).unwrap();
            for nu in dirs2 {
                let radial = DensityContext::new(make_bump_kernel(2, None).unwrap(), f.clone());
                assert!((radial.theta(&nu).unwrap() - radial.theta_nested(&nu).unwrap()).abs()
                    < 1e-10);
                let skewed = DensityContext::new(
                    make_bump_kernel(2, Some(aniso)).unwrap(),
                    f.clone(),
                );
                assert!((skewed.theta(&nu).unwrap() - skewed.theta_nested(&nu).unwrap()).abs()
                    < 1e-10);
            }
            let ctx3 = DensityContext::new(make_bump_kernel(3, Some(aniso)).unwrap(), f.clone());
            assert!((ctx3.theta(&dir3).unwrap() - ctx3.theta_nested(&dir3).unwrap()).abs()
                < 1e-10);
        }
    }

    #[test]
    fn doubling_the_offset_order_barely_moves_theta() {
        let k = make_bump_kernel(2, None).unwrap();
        let f = builtin_profile("power", Some(2.0)).unwrap();
        let coarse = DensityContext::with_orders(k.clone(), f.clone(), 64, 64).unwrap();
        let fine = DensityContext::with_orders(k, f, 128, 64).unwrap();
        let nu = [0.6, 0.8, 0.0];
        let d = (coarse.theta(&nu).unwrap() - fine.theta(&nu).unwrap()).abs();
        assert!(d < 1e-8, "order doubling moved theta by {d}");
    }

    #[test]
    fn identity_profile_reduces_to_half_the_absolute_moment() {
        let aniso = [[1.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let cases = [
            (identity_ctx(2), [1.0, 0.0, 0.0]),
            (identity_ctx(2), [0.6, 0.8, 0.0]),
            (identity_ctx(3), [0.0, 0.0, 1.0]),
            (
                DensityContext::new(
                    make_bump_kernel(2, Some(aniso)).unwrap(),
                    builtin_profile("identity", None).unwrap(),
                ),
                [0.6, 0.8, 0.0],
            ),
        ];
        for (ctx, nu) in cases {
            let theta = ctx.theta(&nu).unwrap();
            let moment = absolute_moment_along(ctx.kernel(), &nu).unwrap();
            assert!(
                (theta - 0.5 * moment).abs() < 1e-9,
                "theta {theta} vs moment/2 {}",
                0.5 * moment
            );
        }
    }

    #[test]
    fn radial_theta_is_isotropic() {
        let k = make_bump_kernel(2, None).unwrap();
        let f = builtin_profile("power", Some(2.0)).unwrap();
        let ctx = DensityContext::new(k, f);
        let base = ctx.theta(&[1.0, 0.0, 0.0]).unwrap();
        for i in 0..8 {
            let phi = 0.7 * (i as f64 + 1.0);
            let nu = [phi.cos(), phi.sin(), 0.0];
            assert!((ctx.theta(&nu).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_matches_the_closed_form_constant() {
        for dim in [2, 3] {
            let ctx = identity_ctx(dim);
            let c = closed_form_c_ng(ctx.kernel()).unwrap();
            let theta = ctx.radial_constant().unwrap();
            assert!(
                (theta - c).abs() < 1e-8,
                "dim {dim}: theta {theta} vs closed form {c}"
            );
        }
    }

    #[test]
    fn closed_form_rejects_anisotropic_kernels() {
        let aniso = [[1.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let k = make_bump_kernel(2, Some(aniso)).unwrap();
        assert!(matches!(
            closed_form_c_ng(&k),
            Err(DensityError::NotRadial)
        ));
        let ctx = DensityContext::new(k, builtin_profile("identity", None).unwrap());
        assert!(matches!(
            ctx.radial_constant(),
            Err(DensityError::NotRadial)
        ));
    }

    #[test]
    fn theta_is_positive_and_bounded_by_profile_at_half() {
        // H(t) ≤ 1/2 for t ≥ 0 and σ ≤ 1, so θ ≤ f(1/2)
        let aniso = [[1.25, 0.0, 0.0], [0.0, 1.75, 0.0], [0.0, 0.0, 1.0]];
        let kernels = [
            make_bump_kernel(2, None).unwrap(),
            make_bump_kernel(2, Some(aniso)).unwrap(),
            make_bump_kernel(3, None).unwrap(),
        ];
        for k in kernels {
            for name in ["identity", "expm1", "saturating"] {
                let f = builtin_profile(name, None).unwrap();
                let bound = f.eval(0.5);
                let ctx = DensityContext::new(k.clone(), f);
                let theta = ctx.theta(&[0.0, 1.0, 0.0]).unwrap();
                assert!(theta > 0.0);
                assert!(theta <= bound + 1e-12, "theta {theta} above f(1/2) {bound}");
            }
        }
    }

    #[test]
    fn theta_tilde_is_one_homogeneous() {
        let ctx = DensityContext::new(
            make_bump_kernel(2, None).unwrap(),
            builtin_profile("expm1", None).unwrap(),
        );
        assert_eq!(ctx.theta_tilde(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let v = [0.3, -1.1, 0.0];
        let base = ctx.theta_tilde(&v).unwrap();
        for lambda in [0.25, 3.7] {
            let scaled = ctx.theta_tilde(&scale(&v, lambda)).unwrap();
            assert!(
                (scaled - lambda * base).abs() < 1e-10,
                "homogeneity off at lambda {lambda}"
            );
        }
    }

    #[test]
    fn convex_profiles_pass_the_convexity_probe() {
        let ctx = identity_ctx(2);
        assert!(ctx.convexity_probe(500, 11).unwrap().is_empty());
        let ctx = DensityContext::new(
            make_bump_kernel(2, None).unwrap(),
            builtin_profile("power", Some(2.0)).unwrap(),
        );
        assert!(ctx.convexity_probe(300, 12).unwrap().is_empty());
    }

    #[test]
    fn limit_functional_on_box_and_ball() {
        let dom = Domain::unit(2, 16).unwrap();
        let ctx = identity_ctx(2);
        let c = closed_form_c_ng(ctx.kernel()).unwrap();
        let boxy = Shape::Box {
            lower: [0.2, 0.2, 0.0],
            upper: [0.7, 0.7, 0.0],
        };
        let est = ctx.limit_functional(&boxy, &dom, 8).unwrap();
        assert!((est.value - 2.0 * c).abs() < 1e-9);
        assert!(!est.order_warning);
        // four axis normals, one theta evaluation each
        assert_eq!(ctx.cache_len(), 4);
        let ball = Shape::Ball {
            center: [0.5, 0.5, 0.0],
            radius: 0.3,
        };
        let est = ctx.limit_functional(&ball, &dom, 64).unwrap();
        let exact = c * 2.0 * std::f64::consts::PI * 0.3;
        assert!((est.value - exact).abs() < 1e-9);
    }

    #[test]
    fn order_validation() {
        let k = make_bump_kernel(2, None).unwrap();
        let f = builtin_profile("identity", None).unwrap();
        assert!(matches!(
            DensityContext::with_orders(k.clone(), f.clone(), 4, 32),
            Err(DensityError::OrderTooSmall {
                which: "t_order",
                ..
            })
        ));
        assert!(matches!(
            DensityContext::with_orders(k, f, 64, 7),
            Err(DensityError::OrderTooSmall {
                which: "slice_order",
                ..
            })
        ));
    }

    #[test]
    fn non_unit_directions_are_rejected() {
        let ctx = identity_ctx(2);
        assert!(matches!(
            ctx.theta(&[1.1, 0.0, 0.0]),
            Err(DensityError::Kernel(KernelError::NonUnitDirection { .. }))
        ));
    }
}
