//! Analytic finite-perimeter test sets: exact indicators, voxel
//! rasterization over the computational box Ω, and boundary quadrature
//! (points, outward unit normals, surface-measure weights).
//!
//! Sets are closed: the indicator is 1 on the topological boundary. That is
//! a measure-zero convention, irrelevant to every integral, fixed once for
//! determinism.

use crate::geom::{self, dot, norm, normalized, sub, Vector};
use crate::quad;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("domain dimension must be 2 or 3, got {0}")]
    UnsupportedDim(usize),
    #[error("domain corners must satisfy lower < upper componentwise (axis {axis}: {lo} vs {hi})")]
    BadCorners { axis: usize, lo: f64, hi: f64 },
    #[error("resolution must be at least 8, got {0}")]
    ResolutionTooSmall(usize),
    #[error(
        "voxels must be cubes: axis spacings {0:.6e} and {1:.6e} differ; \
         choose a box and resolution with equal spacing per axis"
    )]
    AnisotropicVoxels(f64, f64),
}

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("boundary quadrature order must be at least 4, got {0}")]
    OrderTooSmall(usize),
    #[error("slab boundary quadrature in 3D supports axis-aligned normals only")]
    SlabOrientationUnsupported,
    #[error("full graph boundary quadrature is implemented in 2D only")]
    GraphFullUnsupported3D,
    #[error("shape normal must be nonzero")]
    ZeroNormal,
}

/// The open axis-aligned box Ω together with its voxel grid: `resolution`
/// cubic voxels per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    dim: usize,
    lower: Vector,
    upper: Vector,
    resolution: usize,
}

impl Domain {
    pub fn new(
        lower: Vector,
        upper: Vector,
        resolution: usize,
        dim: usize,
    ) -> Result<Self, DomainError> {
        if !(2..=3).contains(&dim) {
            return Err(DomainError::UnsupportedDim(dim));
        }
        for axis in 0..dim {
            if lower[axis] >= upper[axis] {
                return Err(DomainError::BadCorners {
                    axis,
                    lo: lower[axis],
                    hi: upper[axis],
                });
            }
        }
        if resolution < 8 {
            return Err(DomainError::ResolutionTooSmall(resolution));
        }
        let h0 = (upper[0] - lower[0]) / resolution as f64;
        for axis in 1..dim {
            let h = (upper[axis] - lower[axis]) / resolution as f64;
            if (h - h0).abs() > 1e-9 * h0 {
                return Err(DomainError::AnisotropicVoxels(h0, h));
            }
        }
        Ok(Self {
            dim,
            lower,
            upper,
            resolution,
        })
    }

    /// The unit square (0,1)² or cube (0,1)³ at the given resolution.
    pub fn unit(dim: usize, resolution: usize) -> Result<Self, DomainError> {
        Self::new([0.0; 3], [1.0, 1.0, if dim == 3 { 1.0 } else { 0.0 }], resolution, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Edge length of the (cubic) voxels.
    pub fn spacing(&self) -> f64 {
        (self.upper[0] - self.lower[0]) / self.resolution as f64
    }

    pub fn total_voxels(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    /// Center of the voxel with per-axis indices `idx` (third index ignored
    /// in 2D).
    pub fn voxel_center(&self, idx: &[usize; 3]) -> Vector {
        let h = self.spacing();
        let mut c = [0.0; 3];
        for axis in 0..self.dim {
            c[axis] = self.lower[axis] + (idx[axis] as f64 + 0.5) * h;
        }
        c
    }

    /// Lexicographic linear index of a voxel.
    pub fn linear_index(&self, idx: &[usize; 3]) -> usize {
        let r = self.resolution;
        match self.dim {
            2 => idx[0] * r + idx[1],
            3 => (idx[0] * r + idx[1]) * r + idx[2],
            _ => unreachable!(),
        }
    }

    /// Whether a point lies strictly inside the open box Ω.
    pub fn contains_strictly(&self, p: &Vector) -> bool {
        (0..self.dim).all(|i| self.lower[i] < p[i] && p[i] < self.upper[i])
    }
}

/// Which parts of a graph set's topological boundary enter the boundary
/// quadrature. `TopOnly` restricts to the graph surface {y = u(x)} — the
/// right choice when Ω is declared to contain only the graph part, so the
/// floor and lateral sides fall on ∂Ω and carry no limit energy. `Full` adds
/// the floor {y = 0} and the lateral sides (2D only); nodes on ∂Ω are still
/// clipped away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphBoundary {
    TopOnly,
    Full,
}

/// The subgraph set {(x', y) : x' ∈ D, 0 ≤ y ≤ u(x')} over a base rectangle
/// D, with u > 0 and continuously differentiable.
#[derive(Clone)]
pub struct GraphShape {
    dim: usize,
    base_lower: Vector,
    base_upper: Vector,
    height: Arc<dyn Fn(&Vector) -> f64 + Send + Sync>,
    gradient: Arc<dyn Fn(&Vector) -> Vector + Send + Sync>,
    pub boundary: GraphBoundary,
}

impl fmt::Debug for GraphShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphShape")
            .field("dim", &self.dim)
            .field("base_lower", &self.base_lower)
            .field("base_upper", &self.base_upper)
            .field("boundary", &self.boundary)
            .finish()
    }
}

impl GraphShape {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn height(&self, base: &Vector) -> f64 {
        (self.height)(base)
    }

    pub fn gradient(&self, base: &Vector) -> Vector {
        (self.gradient)(base)
    }
}

/// An analytic test set.
#[derive(Debug, Clone)]
pub enum Shape {
    Ball {
        center: Vector,
        radius: f64,
    },
    Box {
        lower: Vector,
        upper: Vector,
    },
    /// {x : offset_low ≤ x·n̂ ≤ offset_high}; `normal` is normalized
    /// internally.
    Slab {
        normal: Vector,
        offset_low: f64,
        offset_high: f64,
    },
    Graph(GraphShape),
}

impl Shape {
    /// Graph of a scalar function u over the interval (a, b) on the x-axis.
    pub fn graph_2d(
        a: f64,
        b: f64,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64) -> f64 + Send + Sync + 'static,
        boundary: GraphBoundary,
    ) -> Self {
        Shape::Graph(GraphShape {
            dim: 2,
            base_lower: [a, 0.0, 0.0],
            base_upper: [b, 0.0, 0.0],
            height: Arc::new(move |p: &Vector| u(p[0])),
            gradient: Arc::new(move |p: &Vector| [du(p[0]), 0.0, 0.0]),
            boundary,
        })
    }

    /// Graph of u over the rectangle (a₁,b₁)×(a₂,b₂) in the xy-plane.
    pub fn graph_3d(
        lower: [f64; 2],
        upper: [f64; 2],
        u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
        boundary: GraphBoundary,
    ) -> Self {
        Shape::Graph(GraphShape {
            dim: 3,
            base_lower: [lower[0], lower[1], 0.0],
            base_upper: [upper[0], upper[1], 0.0],
            height: Arc::new(move |p: &Vector| u(p[0], p[1])),
            gradient: Arc::new(move |p: &Vector| {
                let g = grad(p[0], p[1]);
                [g[0], g[1], 0.0]
            }),
            boundary,
        })
    }

    /// Exact membership: 1 inside or on the boundary (closed sets), else 0.
    pub fn indicator(&self, x: &Vector) -> f64 {
        if self.contains(x) {
            1.0
        } else {
            0.0
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        match self {
            Shape::Ball { center, radius } => norm(&sub(x, center)) <= *radius,
            Shape::Box { lower, upper } => {
                (0..3).all(|i| lower[i] <= x[i] && x[i] <= upper[i])
            }
            Shape::Slab {
                normal,
                offset_low,
                offset_high,
            } => {
                let n = normalized(normal).expect("slab normal must be nonzero");
                let t = dot(x, &n);
                *offset_low <= t && t <= *offset_high
            }
            Shape::Graph(g) => {
                let height_axis = g.dim - 1;
                for i in 0..height_axis {
                    if x[i] < g.base_lower[i] || x[i] > g.base_upper[i] {
                        return false;
                    }
                }
                let y = x[height_axis];
                y >= 0.0 && y <= g.height(x)
            }
        }
    }
}

/// Voxel sampling of χ_{E∩Ω}: fractional fill per voxel in [0,1].
#[derive(Debug, Clone)]
pub struct IndicatorField {
    domain: Domain,
    values: Vec<f64>,
}

impl IndicatorField {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Σ values · h^N: the approximate volume |E ∩ Ω|.
    pub fn volume(&self) -> f64 {
        let h = self.domain.spacing();
        self.values.iter().sum::<f64>() * h.powi(self.domain.dim() as i32)
    }

    /// Builds a field directly from raw values (for synthetic test inputs).
    pub fn from_values(domain: Domain, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), domain.total_voxels());
        Self { domain, values }
    }
}

/// Per-voxel first moments of E: mean offset of the inside sub-sample points
/// from the voxel center, in units of the voxel edge length, averaged over
/// *all* sub-points (so a full or empty voxel has moment zero).
#[derive(Debug, Clone)]
pub struct MomentField {
    pub values: Vec<Vector>,
}

/// Rasterizes a shape: each voxel value is the fraction of supersample^N
/// deterministic midpoint sub-cells whose centers lie inside the shape.
pub fn rasterize(shape: &Shape, dom: &Domain, supersample: usize) -> IndicatorField {
    rasterize_impl(shape, dom, supersample, false).0
}

/// Rasterization that also returns first moments, used by the energy
/// evaluator's within-voxel Taylor correction.
pub fn rasterize_with_moments(
    shape: &Shape,
    dom: &Domain,
    supersample: usize,
) -> (IndicatorField, MomentField) {
    let (field, moments) = rasterize_impl(shape, dom, supersample, true);
    (field, moments.expect("moments requested"))
}

fn rasterize_impl(
    shape: &Shape,
    dom: &Domain,
    supersample: usize,
    want_moments: bool,
) -> (IndicatorField, Option<MomentField>) {
    assert!(supersample >= 1, "supersample must be at least 1");
    let dim = dom.dim();
    let res = dom.resolution();
    let h = dom.spacing();
    let k = supersample;
    // midpoint offsets of the sub-cells, in voxel units, centered on 0
    let offsets: Vec<f64> = (0..k).map(|j| (j as f64 + 0.5) / k as f64 - 0.5).collect();
    let total_sub = k.pow(dim as u32) as f64;
    let mut values = vec![0.0; dom.total_voxels()];
    let mut moments = if want_moments {
        vec![[0.0; 3]; dom.total_voxels()]
    } else {
        Vec::new()
    };
    let mut idx = [0usize; 3];
    for i0 in 0..res {
        idx[0] = i0;
        for i1 in 0..res {
            idx[1] = i1;
            let planes = if dim == 3 { res } else { 1 };
            for i2 in 0..planes {
                idx[2] = i2;
                let center = dom.voxel_center(&idx);
                let mut inside = 0usize;
                let mut moment = [0.0; 3];
                for &ox in &offsets {
                    for &oy in &offsets {
                        if dim == 2 {
                            let p = [center[0] + ox * h, center[1] + oy * h, 0.0];
                            if shape.contains(&p) {
                                inside += 1;
                                moment[0] += ox;
                                moment[1] += oy;
                            }
                        } else {
                            for &oz in &offsets {
                                let p = [center[0] + ox * h, center[1] + oy * h, center[2] + oz * h];
                                if shape.contains(&p) {
                                    inside += 1;
                                    moment[0] += ox;
                                    moment[1] += oy;
                                    moment[2] += oz;
                                }
                            }
                        }
                    }
                }
                let lin = dom.linear_index(&idx);
                values[lin] = inside as f64 / total_sub;
                if want_moments {
                    moments[lin] = geom::scale(&moment, 1.0 / total_sub);
                }
            }
        }
    }
    (
        IndicatorField {
            domain: dom.clone(),
            values,
        },
        want_moments.then_some(MomentField { values: moments }),
    )
}

/// One node of a surface quadrature: a point on ∂E ∩ Ω, the outward unit
/// normal there, and a positive H^{N−1} weight.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryNode {
    pub point: Vector,
    pub normal: Vector,
    pub weight: f64,
}

/// Quadrature for surface integrals over ∂E ∩ Ω.
#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    pub nodes: Vec<BoundaryNode>,
    /// Set when the requested order is heuristically too coarse for the
    /// variant's curvature; the quadrature is still returned.
    pub order_warning: bool,
}

impl BoundaryQuadrature {
    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

/// Builds the boundary quadrature of a shape, clipped to the open box Ω:
///
/// * ball, 2D: uniform angular nodes (exact total circumference);
/// * ball, 3D: Gauss-Legendre latitude bands × uniform longitudes;
/// * box: per-face tensor Gauss-Legendre with constant outward normals;
/// * slab: the two planar faces, clipped to Ω (any normal in 2D,
///   axis-aligned in 3D);
/// * graph: tensor Gauss-Legendre on the base D with weight √(1+|∇u|²) and
///   normal (−∇u, 1)/√(1+|∇u|²); `Full` (2D) adds floor and lateral sides.
///
/// Nodes falling on or outside ∂Ω are dropped.
pub fn boundary_quadrature(
    shape: &Shape,
    dom: &Domain,
    order: usize,
) -> Result<BoundaryQuadrature, ShapeError> {
    if order < 4 {
        return Err(ShapeError::OrderTooSmall(order));
    }
    let dim = dom.dim();
    let mut nodes = Vec::new();
    let order_warning;
    match shape {
        Shape::Ball { center, radius } => {
            order_warning = order < if dim == 2 { 32 } else { 16 };
            if dim == 2 {
                let w = 2.0 * std::f64::consts::PI * radius / order as f64;
                for k in 0..order {
                    let phi = (k as f64 + 0.5) * 2.0 * std::f64::consts::PI / order as f64;
                    let dir = [phi.cos(), phi.sin(), 0.0];
                    nodes.push(BoundaryNode {
                        point: geom::add(center, &geom::scale(&dir, *radius)),
                        normal: dir,
                        weight: w,
                    });
                }
            } else {
                let rule = quad::rule(order);
                let n_phi = 2 * order;
                let w_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
                for (mu, w_mu) in rule.mapped(-1.0, 1.0) {
                    let sin_theta = (1.0 - mu * mu).max(0.0).sqrt();
                    for k in 0..n_phi {
                        let phi = (k as f64 + 0.5) * w_phi;
                        let dir = [sin_theta * phi.cos(), sin_theta * phi.sin(), mu];
                        nodes.push(BoundaryNode {
                            point: geom::add(center, &geom::scale(&dir, *radius)),
                            normal: dir,
                            weight: radius * radius * w_mu * w_phi,
                        });
                    }
                }
            }
        }
        Shape::Box { lower, upper } => {
            order_warning = false;
            for axis in 0..dim {
                for (face_pos, sign) in [(lower[axis], -1.0), (upper[axis], 1.0)] {
                    let mut normal = [0.0; 3];
                    normal[axis] = sign;
                    // clip the face rectangle to Ω along the tangential axes
                    let tang: Vec<usize> = (0..dim).filter(|&i| i != axis).collect();
                    if face_pos <= dom.lower()[axis] || face_pos >= dom.upper()[axis] {
                        continue;
                    }
                    let ranges: Vec<(f64, f64)> = tang
                        .iter()
                        .map(|&i| (lower[i].max(dom.lower()[i]), upper[i].min(dom.upper()[i])))
                        .collect();
                    if ranges.iter().any(|&(lo, hi)| lo >= hi) {
                        continue;
                    }
                    let rule = quad::rule(order);
                    if dim == 2 {
                        for (t, w) in rule.mapped(ranges[0].0, ranges[0].1) {
                            let mut point = [0.0; 3];
                            point[axis] = face_pos;
                            point[tang[0]] = t;
                            nodes.push(BoundaryNode {
                                point,
                                normal,
                                weight: w,
                            });
                        }
                    } else {
                        for (t0, w0) in rule.mapped(ranges[0].0, ranges[0].1) {
                            for (t1, w1) in rule.mapped(ranges[1].0, ranges[1].1) {
                                let mut point = [0.0; 3];
                                point[axis] = face_pos;
                                point[tang[0]] = t0;
                                point[tang[1]] = t1;
                                nodes.push(BoundaryNode {
                                    point,
                                    normal,
                                    weight: w0 * w1,
                                });
                            }
                        }
                    }
                }
            }
        }
        Shape::Slab {
            normal,
            offset_low,
            offset_high,
        } => {
            order_warning = false;
            let n = normalized(normal).ok_or(ShapeError::ZeroNormal)?;
            for (offset, sign) in [(*offset_low, -1.0), (*offset_high, 1.0)] {
                let outward = geom::scale(&n, sign);
                if dim == 2 {
                    // the face is the line {x·n = offset}; parametrize by the
                    // unit tangent and clip the parameter to the open box
                    let tau = [-n[1], n[0], 0.0];
                    let p0 = geom::scale(&n, offset);
                    let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
                    let mut empty = false;
                    for i in 0..2 {
                        if tau[i].abs() < 1e-15 {
                            if p0[i] <= dom.lower()[i] || p0[i] >= dom.upper()[i] {
                                empty = true;
                            }
                            continue;
                        }
                        let a = (dom.lower()[i] - p0[i]) / tau[i];
                        let b = (dom.upper()[i] - p0[i]) / tau[i];
                        t_lo = t_lo.max(a.min(b));
                        t_hi = t_hi.min(a.max(b));
                    }
                    if empty || t_lo >= t_hi {
                        continue;
                    }
                    for (t, w) in quad::rule(order).mapped(t_lo, t_hi) {
                        nodes.push(BoundaryNode {
                            point: geom::add(&p0, &geom::scale(&tau, t)),
                            normal: outward,
                            weight: w,
                        });
                    }
                } else {
                    // 3D: axis-aligned normals only
                    let axis = (0..3)
                        .find(|&i| (n[i].abs() - 1.0).abs() < 1e-12)
                        .ok_or(ShapeError::SlabOrientationUnsupported)?;
                    let face_pos = offset * n[axis].signum();
                    if face_pos <= dom.lower()[axis] || face_pos >= dom.upper()[axis] {
                        continue;
                    }
                    let tang: Vec<usize> = (0..3).filter(|&i| i != axis).collect();
                    let rule = quad::rule(order);
                    for (t0, w0) in rule.mapped(dom.lower()[tang[0]], dom.upper()[tang[0]]) {
                        for (t1, w1) in rule.mapped(dom.lower()[tang[1]], dom.upper()[tang[1]]) {
                            let mut point = [0.0; 3];
                            point[axis] = face_pos;
                            point[tang[0]] = t0;
                            point[tang[1]] = t1;
                            nodes.push(BoundaryNode {
                                point,
                                normal: outward,
                                weight: w0 * w1,
                            });
                        }
                    }
                }
            }
        }
        Shape::Graph(g) => {
            order_warning = order < 16;
            let height_axis = g.dim - 1;
            let rule = quad::rule(order);
            if g.dim == 2 {
                for (x, w) in rule.mapped(g.base_lower[0], g.base_upper[0]) {
                    let base = [x, 0.0, 0.0];
                    let du = g.gradient(&base)[0];
                    let len = (1.0 + du * du).sqrt();
                    nodes.push(BoundaryNode {
                        point: [x, g.height(&base), 0.0],
                        normal: [-du / len, 1.0 / len, 0.0],
                        weight: w * len,
                    });
                }
                if g.boundary == GraphBoundary::Full {
                    // floor {y = 0}
                    for (x, w) in rule.mapped(g.base_lower[0], g.base_upper[0]) {
                        nodes.push(BoundaryNode {
                            point: [x, 0.0, 0.0],
                            normal: [0.0, -1.0, 0.0],
                            weight: w,
                        });
                    }
                    // lateral sides x = a, x = b
                    for (x_side, sign) in [(g.base_lower[0], -1.0), (g.base_upper[0], 1.0)] {
                        let top = g.height(&[x_side, 0.0, 0.0]);
                        for (y, w) in rule.mapped(0.0, top) {
                            nodes.push(BoundaryNode {
                                point: [x_side, y, 0.0],
                                normal: [sign, 0.0, 0.0],
                                weight: w,
                            });
                        }
                    }
                }
            } else {
                if g.boundary == GraphBoundary::Full {
                    return Err(ShapeError::GraphFullUnsupported3D);
                }
                for (x0, w0) in rule.mapped(g.base_lower[0], g.base_upper[0]) {
                    for (x1, w1) in rule.mapped(g.base_lower[1], g.base_upper[1]) {
                        let base = [x0, x1, 0.0];
                        let grad = g.gradient(&base);
                        let len = (1.0 + grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
                        nodes.push(BoundaryNode {
                            point: [x0, x1, g.height(&base)],
                            normal: [-grad[0] / len, -grad[1] / len, 1.0 / len],
                            weight: w0 * w1 * len,
                        });
                    }
                }
            }
            let _ = height_axis;
        }
    }
    nodes.retain(|n| dom.contains_strictly(&n.point));
    Ok(BoundaryQuadrature {
        nodes,
        order_warning,
    })
}
