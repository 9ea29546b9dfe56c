//! Small fixed-dimension geometry helpers.
//!
//! Everything works in dimension 2 or 3, stored in `[f64; 3]` with unused
//! trailing components set to zero. Keeping the arrays fixed-size keeps the
//! quadrature inner loops allocation-free.

/// A point or vector in `R^N`, `N ≤ 3`, padded with zeros.
pub type Vector = [f64; 3];

/// A row-major `N×N` matrix embedded in 3×3, padded with zeros.
pub type Matrix = [[f64; 3]; 3];

pub fn dot(a: &Vector, b: &Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vector) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &Vector, c: f64) -> Vector {
    [c * a[0], c * a[1], c * a[2]]
}

pub fn add(a: &Vector, b: &Vector) -> Vector {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: &Vector, b: &Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Normalize `a`; returns `None` for the zero vector.
pub fn normalized(a: &Vector) -> Option<Vector> {
    let n = norm(a);
    if n == 0.0 {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

pub fn matvec(m: &Matrix, v: &Vector) -> Vector {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// The identity embedded in the padded 3×3 layout.
pub fn identity(dim: usize) -> Matrix {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

/// Determinant of the leading `dim × dim` block.
pub fn det(m: &Matrix, dim: usize) -> f64 {
    match dim {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Solve `M x = b` for the leading `dim × dim` block by the adjugate formula.
/// Panics on a singular matrix; callers validate invertibility beforehand.
pub fn solve(m: &Matrix, b: &Vector, dim: usize) -> Vector {
    let d = det(m, dim);
    assert!(d != 0.0, "singular matrix in solve()");
    match dim {
        2 => [
            (b[0] * m[1][1] - b[1] * m[0][1]) / d,
            (m[0][0] * b[1] - m[1][0] * b[0]) / d,
            0.0,
        ],
        3 => {
            let mut x = [0.0; 3];
            for (col, xi) in x.iter_mut().enumerate() {
                // Cramer: replace column `col` with b
                let mut mc = *m;
                for row in 0..3 {
                    mc[row][col] = b[row];
                }
                *xi = det(&mc, 3) / d;
            }
            x
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

pub fn transpose(m: &Matrix, dim: usize) -> Matrix {
    let mut t = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Eigenvalues of a symmetric `dim × dim` matrix, ascending.
///
/// 2×2 by the closed form; 3×3 by cyclic Jacobi sweeps (a few iterations
/// suffice at these sizes). Only used for validating kernel anisotropy.
pub fn symmetric_eigenvalues(m: &Matrix, dim: usize) -> Vec<f64> {
    match dim {
        2 => {
            let tr = m[0][0] + m[1][1];
            let dt = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let disc = (tr * tr / 4.0 - dt).max(0.0).sqrt();
            let mut v = vec![tr / 2.0 - disc, tr / 2.0 + disc];
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        }
        3 => {
            let mut a = *m;
            for _sweep in 0..50 {
                // largest off-diagonal element
                let mut p = 0;
                let mut q = 1;
                let mut big = 0.0f64;
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        if a[i][j].abs() > big {
                            big = a[i][j].abs();
                            p = i;
                            q = j;
                        }
                    }
                }
                if big < 1e-15 {
                    break;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut b = a;
                for k in 0..3 {
                    b[p][k] = c * a[p][k] - s * a[q][k];
                    b[q][k] = s * a[p][k] + c * a[q][k];
                }
                a = b;
                let mut b = a;
                for k in 0..3 {
                    b[k][p] = c * a[k][p] - s * a[k][q];
                    b[k][q] = s * a[k][p] + c * a[k][q];
                }
                a = b;
            }
            let mut v = vec![a[0][0], a[1][1], a[2][2]];
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            v
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// An orthonormal basis `(tangents, -nu)` adapted to the unit vector `nu`:
/// the returned tangent vectors span the hyperplane `nu^⊥`.
///
/// Built from the Householder reflection through `v = nu + e_N`, which maps
/// `e_N ↦ -nu` and is orthogonal; its images of `e_1 .. e_{N-1}` therefore
/// form an orthonormal basis of `nu^⊥`. When `nu` points into the lower
/// half-space (`nu_N < 0`) the reflection through `nu + e_N` degenerates as
/// `nu → -e_N`, so the basis is built for `-nu` instead — the span of the
/// tangents is unchanged.
pub fn tangent_basis(nu: &Vector, dim: usize) -> Vec<Vector> {
    let flipped = nu[dim - 1] < 0.0;
    let n = if flipped { scale(nu, -1.0) } else { *nu };
    let mut v = n;
    v[dim - 1] += 1.0;
    let vv = dot(&v, &v);
    let mut basis = Vec::with_capacity(dim - 1);
    for i in 0..(dim - 1) {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        // H e_i = e_i - 2 v (v·e_i) / |v|^2
        let tau = sub(&e, &scale(&v, 2.0 * v[i] / vv));
        basis.push(tau);
    }
    basis
}

/// Volume of the `k`-dimensional unit ball, by the two-step recursion
/// `|B^k| = (2π/k) |B^{k-2}|` with `|B^0| = 1`, `|B^1| = 2`.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / (k as f64) * unit_ball_volume(k - 2),
    }
}

/// Surface measure of the unit sphere `S^{N-1} ⊂ R^N`: `N · |B^N|`.
pub fn unit_sphere_area(n: usize) -> f64 {
    (n as f64) * unit_ball_volume(n)
}
