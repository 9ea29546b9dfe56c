//! Experiment drivers: the ε-convergence study and the lower-bound study.
//!
//! Convergence runs walk the configured ε schedule, evaluate F_ε on a grid
//! that follows the resolution policy, and compare against the limit
//! functional from the boundary quadrature. Lower-bound runs perturb a graph
//! shape with a shrinking oscillation u + (a/h)·cos(2π·p·x) while ε shrinks
//! with h, and track the deficit F(E) − F_{ε_h}(E_h); the check is one-sided
//! and never asserts an upper bound.

use super::config::{ExperimentConfig, ShapeSpec};
use super::report::{
    fit_rate, richardson_extrapolate, ConvergenceReport, ConvergenceRow, LowerBoundReport,
    LowerBoundRow, VERSION,
};
use super::LabError;
use crate::nonlocal::{eval_f_eps_with_options, EvalOptions};
use crate::shapes::{GraphBoundary, Shape};
use std::f64::consts::PI;
use std::time::Instant;

/// Number of trailing runs used for the empirical rate fit.
pub const RATE_WINDOW: usize = 4;

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport, LabError> {
    cfg.validate()?;
    let shape = cfg.build_shape()?;
    let kernel = cfg.build_kernel()?;
    let profile = cfg.build_profile()?;
    let ctx = cfg.density_context()?;
    let limit = ctx.limit_functional(&shape, &cfg.fixed_domain()?, cfg.boundary_order)?;
    let reference = limit.value;
    let options = EvalOptions {
        supersample: cfg.supersample,
    };
    let mut rows = Vec::with_capacity(cfg.count);
    for epsilon in cfg.epsilon_schedule() {
        let dom = cfg.domain_for_epsilon(epsilon)?;
        let start = Instant::now();
        let f_eps = eval_f_eps_with_options(&shape, epsilon, &profile, &kernel, &dom, &options)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        let abs_error = (f_eps - reference).abs();
        let rel_error = if reference == 0.0 {
            abs_error
        } else {
            abs_error / reference.abs()
        };
        rows.push(ConvergenceRow {
            epsilon,
            f_eps,
            abs_error,
            rel_error,
            wall_seconds,
        });
    }
    let epsilons: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.f_eps).collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.abs_error).collect();
    let monotone_errors = errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let rate = fit_rate(&epsilons, &errors, RATE_WINDOW);
    let rate_note = if rate.is_some() {
        "least-squares slope of log-error against log-epsilon over the last 4 runs"
    } else {
        "insufficient data"
    };
    let extrapolated = richardson_extrapolate(&epsilons, &values);
    let final_rel_error = rows[rows.len() - 1].rel_error;
    let extrapolated_rel_error = if reference == 0.0 {
        (extrapolated - reference).abs()
    } else {
        ((extrapolated - reference) / reference).abs()
    };
    let pass = final_rel_error <= cfg.tolerance && extrapolated_rel_error <= cfg.tolerance;
    Ok(ConvergenceReport {
        version: VERSION,
        kind: "convergence",
        config: cfg.echo.clone(),
        reference,
        reference_order_warning: limit.order_warning,
        rows,
        monotone_errors,
        rate,
        rate_note,
        extrapolated,
        final_rel_error,
        extrapolated_rel_error,
        tolerance: cfg.tolerance,
        pass,
    })
}

/// Parameters of a lower-bound study, usually read off a config.
#[derive(Debug, Clone)]
pub struct LowerBoundSpec {
    pub h_values: Vec<u32>,
    pub perturb_amplitude: f64,
    pub perturb_frequency: f64,
    /// Pin ε instead of shrinking it with h; flags a no-limit schedule.
    pub fixed_epsilon: Option<f64>,
    /// ε_h = 1 / (factor · h) when ε is not pinned.
    pub epsilon_factor: f64,
    pub deficit_tolerance: f64,
}

impl LowerBoundSpec {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            h_values: cfg.h_values.clone(),
            perturb_amplitude: cfg.perturb_amplitude,
            perturb_frequency: cfg.perturb_frequency,
            fixed_epsilon: cfg.fixed_epsilon,
            epsilon_factor: cfg.epsilon_factor,
            deficit_tolerance: cfg.deficit_tolerance,
        }
    }
}

pub fn run_lower_bound(
    cfg: &ExperimentConfig,
    spec: &LowerBoundSpec,
) -> Result<LowerBoundReport, LabError> {
    cfg.validate()?;
    let (base, amplitude, frequency, full_boundary) = match &cfg.shape {
        ShapeSpec::Graph {
            base,
            amplitude,
            frequency,
            full_boundary,
        } if cfg.dim == 2 => (*base, *amplitude, *frequency, *full_boundary),
        _ => {
            return Err(LabError::Config(
                "the lower-bound study needs a 2-d graph shape".into(),
            ))
        }
    };
    let kernel = cfg.build_kernel()?;
    let profile = cfg.build_profile()?;
    let ctx = cfg.density_context()?;
    let reference_dom = cfg.fixed_domain()?;
    let limit = ctx.limit_functional(&cfg.build_shape()?, &reference_dom, cfg.boundary_order)?;
    let reference = limit.value;
    let boundary = if full_boundary {
        GraphBoundary::Full
    } else {
        GraphBoundary::TopOnly
    };
    let (x0, x1) = (reference_dom.lower()[0], reference_dom.upper()[0]);
    let options = EvalOptions {
        supersample: cfg.supersample,
    };
    let mut h_values = spec.h_values.clone();
    h_values.sort_unstable();
    let mut rows = Vec::with_capacity(h_values.len());
    for &h in &h_values {
        let hf = h as f64;
        let epsilon = spec
            .fixed_epsilon
            .unwrap_or(1.0 / (spec.epsilon_factor * hf));
        let dom = cfg.domain_for_epsilon(epsilon)?;
        let (pa, pf) = (spec.perturb_amplitude, spec.perturb_frequency);
        let perturbed = Shape::graph_2d(
            x0,
            x1,
            move |x| {
                base + amplitude * (2.0 * PI * frequency * x).sin()
                    + (pa / hf) * (2.0 * PI * pf * x).cos()
            },
            move |x| {
                amplitude * 2.0 * PI * frequency * (2.0 * PI * frequency * x).cos()
                    - (pa / hf) * 2.0 * PI * pf * (2.0 * PI * pf * x).sin()
            },
            boundary,
        );
        let start = Instant::now();
        let f_eps = eval_f_eps_with_options(&perturbed, epsilon, &profile, &kernel, &dom, &options)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        rows.push(LowerBoundRow {
            h,
            epsilon,
            f_eps,
            reference,
            deficit: reference - f_eps,
            wall_seconds,
        });
    }
    let no_limit_schedule = spec.fixed_epsilon.is_some();
    let final_deficit = rows[rows.len() - 1].deficit;
    let pass = if no_limit_schedule {
        None
    } else {
        // One-sided: only the positive part of the deficit constrains the
        // bound, and it must shrink along the schedule.
        let allowances: Vec<f64> = rows.iter().map(|r| r.deficit.max(0.0)).collect();
        let shrinking = allowances.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let within = final_deficit.max(0.0) <= spec.deficit_tolerance * reference.abs();
        Some(shrinking && within)
    };
    Ok(LowerBoundReport {
        version: VERSION,
        kind: "lower-bound",
        config: cfg.echo.clone(),
        reference,
        reference_order_warning: limit.order_warning,
        rows,
        no_limit_schedule,
        final_deficit,
        deficit_tolerance: spec.deficit_tolerance,
        pass,
    })
}
