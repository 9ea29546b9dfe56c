//! Gauss-Legendre quadrature rules.
//!
//! Nodes and weights on the reference interval `[-1, 1]` are computed by
//! Newton iteration on the Legendre recurrence and cached per order, so
//! repeated lookups are cheap and bit-identical. All integration in the crate
//! funnels through these rules; summation always runs in node order so results
//! are reproducible run to run.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// A Gauss-Legendre rule on `[-1, 1]`: `nodes[i]` with `weights[i]`,
/// ascending in the node coordinate.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Integrate `f` over `[a, b]` by mapping the reference rule affinely.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// The rule mapped to `[a, b]` as `(node, weight)` pairs, ascending.
    pub fn mapped(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (mid + half * x, w * half))
            .collect()
    }
}

/// Evaluate the Legendre polynomial `P_n` and its derivative at `x`
/// via the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // derivative from P_n and P_{n-1}
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Evaluate `P_0 .. P_kmax` at `x` into `out` (length `kmax + 1`).
pub fn legendre_all(kmax: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() == kmax + 1);
    out[0] = 1.0;
    if kmax == 0 {
        return;
    }
    out[1] = x;
    for k in 2..=kmax {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

fn compute_rule(n: usize) -> GaussLegendre {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th root (descending),
        // then Newton; converges in a handful of steps for all practical n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // the middle node is exactly zero
        nodes[n / 2] = 0.0;
        let (_, dp) = legendre_and_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    GaussLegendre {
        order: n,
        nodes,
        weights,
    }
}

/// The Gauss-Legendre rule of order `n`, computed once and cached.
pub fn rule(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("quadrature cache poisoned");
    map.entry(n).or_insert_with(|| Arc::new(compute_rule(n))).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights_match_reference_order_5() {
        // classical 5-point values
        let r = rule(5);
        let x_ref = [
            -0.906179845938664,
            -0.538469310105683,
            0.0,
            0.538469310105683,
            0.906179845938664,
        ];
        let w_ref = [
            0.236926885056189,
            0.478628670499366,
            0.568888888888889,
            0.478628670499366,
            0.236926885056189,
        ];
        for i in 0..5 {
            assert!((r.nodes[i] - x_ref[i]).abs() < 1e-14);
            assert!((r.weights[i] - w_ref[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for &n in &[2usize, 5, 8, 16] {
            let r = rule(n);
            for k in 0..(2 * n) {
                let integral = r.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!(
                    (integral - exact).abs() < 2e-14,
                    "order {n} monomial degree {k}: {integral} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn affine_mapping_handles_general_intervals() {
        let r = rule(12);
        let v = r.integrate(0.25, 1.75, |x| x * x);
        let exact = (1.75f64.powi(3) - 0.25f64.powi(3)) / 3.0;
        assert!((v - exact).abs() < 1e-14);
        // mapped() agrees with integrate()
        let s: f64 = r.mapped(0.25, 1.75).iter().map(|(x, w)| w * x * x).sum();
        assert!((s - v).abs() < 1e-15);
    }

    #[test]
    fn weights_are_positive_and_sum_to_interval_length() {
        for &n in &[1usize, 7, 32, 64, 128, 256] {
            let r = rule(n);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {n}: weight sum {s}");
        }
    }

    #[test]
    fn legendre_all_matches_recurrence_polynomials() {
        let mut buf = vec![0.0; 7];
        legendre_all(6, 0.3, &mut buf);
        // P_2(x) = (3x^2 - 1)/2, P_3(x) = (5x^3 - 3x)/2
        assert!((buf[2] - (3.0 * 0.09 - 1.0) / 2.0).abs() < 1e-15);
        assert!((buf[3] - (5.0 * 0.027 - 3.0 * 0.3) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_compact_bump_converges_with_order() {
        // reference value for ∫_{-1}^{1} exp(-1/(1-x^2)) dx via high order
        let bump = |x: f64| {
            let r2 = x * x;
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        };
        let hi = rule(256).integrate(-1.0, 1.0, bump);
        let e64 = (rule(64).integrate(-1.0, 1.0, bump) - hi).abs();
        let e96 = (rule(96).integrate(-1.0, 1.0, bump) - hi).abs();
        assert!(e64 < 1e-11, "order 64 error {e64}");
        assert!(e96 < 1e-13, "order 96 error {e96}");
    }
}
