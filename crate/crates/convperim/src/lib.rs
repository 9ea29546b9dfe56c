//! Numerical machinery for rescaled convolution perimeters.
//!
//! The library evaluates two related energies on finite-perimeter test sets
//! `E` inside an open box `Ω ⊂ R^N`:
//!
//! * the **nonlocal functional** at interaction range `ε`,
//!
//!   `F_ε(E) = (1/ε) ∫_{E^c ∩ Ω} f(G_ε ∗ χ_{E∩Ω}) dx`,
//!
//!   where `G_ε(x) = ε^{-N} G(x/ε)` is a rescaled even unit-mass kernel
//!   supported in the closed unit ball and `f` is a continuous nondecreasing
//!   interaction profile with `f(0) = 0`;
//!
//! * its **local limit**, the anisotropic surface energy
//!
//!   `F(E) = ∫_{∂*E ∩ Ω} θ(ν_E) dH^{N-1}`,
//!
//!   whose density is `θ(ν) = ∫₀¹ f( ∫_{z·ν ≥ t} G dz ) dt`.
//!
//! The crate is organised bottom-up:
//!
//! * [`quad`] — Gauss-Legendre rules, cached per order;
//! * [`geom`] — small fixed-dimension vector/matrix helpers, unit-ball and
//!   sphere measures;
//! * [`kernels`] — the bump kernel family, hyperplane slice integrals,
//!   half-space masses and moments;
//! * [`profiles`] — the interaction profiles `f` and their validity checks;
//! * [`shapes`] — analytic test sets (ball, box, slab, graph) with exact
//!   indicators, boundary quadratures and voxel rasterization;
//! * [`nonlocal`] — discrete evaluation of `F_ε` via stencil or FFT
//!   convolution;
//! * [`density`] — `θ`, its one-homogeneous extension, the limit functional,
//!   the closed forms for radial kernels, and the convexity probe;
//! * [`lab`] — experiment runner, Monte Carlo oracles, reports and the CLI
//!   plumbing.

pub mod density;
pub mod geom;
pub mod kernels;
pub mod lab;
pub mod nonlocal;
pub mod profiles;
pub mod quad;
pub mod shapes;

pub use density::DensityContext;
pub use kernels::Kernel;
pub use profiles::Profile;
pub use shapes::{Domain, Shape};
