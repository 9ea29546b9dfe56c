//! Command-line driver for the convolution-perimeter laboratory.
//!
//! Every subcommand reads one plain-text config; exit codes are 0 for
//! success, 1 when a pass criterion or oracle comparison fails, and 2 for
//! usage and configuration problems.

use clap::{Parser, Subcommand, ValueEnum};
use convperim::geom::{self, Vector};
use convperim::kernels;
use convperim::lab::config::{load_config, ExperimentConfig};
use convperim::lab::oracle::{
    mc_absolute_moment_oracle, mc_halfspace_oracle, mc_raw_mass_oracle, mc_slice_oracle,
    mc_theta_oracle, trapezoid_radial_moment_oracle, McEstimate,
};
use convperim::lab::report::{
    convergence_csv, lower_bound_csv, print_convergence, print_lower_bound, to_json, write_text,
};
use convperim::lab::runner::{run_convergence, run_lower_bound, LowerBoundSpec};
use convperim::lab::selfcheck::{print_selfcheck, run_selfcheck, SelfcheckOptions};
use convperim::lab::LabError;
use convperim::nonlocal::{eval_f_eps_with_options, EvalOptions};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "convperim",
    version,
    about = "Rescaled convolution energies and their perimeter limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the surface density θ(ν) for one direction.
    Theta {
        #[arg(long)]
        config: PathBuf,
        /// Direction components, e.g. "1,0"; normalized internally.
        #[arg(long)]
        dir: String,
    },
    /// Evaluate F_ε(E) for a single ε on the policy grid.
    Feps {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first ε of the schedule.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Evaluate the limit functional F(E) by boundary quadrature.
    Limit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the ε-convergence study and emit its reports.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the lower-bound study on the perturbed graph family.
    Lowerbound {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cross-check a production quadrature against an independent oracle.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: OracleKind,
        /// Direction components; defaults to the first axis.
        #[arg(long)]
        dir: Option<String>,
        /// Halfspace offset t or slice offset s.
        #[arg(long, default_value_t = 0.5)]
        offset: f64,
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        /// Defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-verify the library's structural invariants.
    Selfcheck {
        #[arg(long)]
        config: PathBuf,
        /// Fault injection: scale the spectral path's center stencil weight.
        #[arg(long)]
        corrupt_stencil_rescale: Option<f64>,
    },
}

#[derive(Debug, Copy, Clone, ValueEnum)]
enum OracleKind {
    /// Unnormalized kernel mass vs. 1/normalization.
    Rawmass,
    /// Halfspace mass at (dir, offset) vs. quadrature.
    Halfspace,
    /// Slice integral at (dir, offset) vs. quadrature.
    Slice,
    /// Surface density at dir vs. stratified Monte Carlo.
    Theta,
    /// Absolute moment along dir vs. weighted Monte Carlo.
    Absmoment,
    /// First radial moment vs. a flat trapezoid rule (radial kernels).
    Moment,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn parse_direction(text: &str, dim: usize) -> Result<Vector, LabError> {
    let parts: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() != dim {
        return Err(LabError::Config(format!(
            "direction needs {dim} components, got {}",
            parts.len()
        )));
    }
    let mut v = [0.0, 0.0, 0.0];
    for (coord, part) in v.iter_mut().zip(&parts) {
        *coord = part
            .parse()
            .map_err(|_| LabError::Config(format!("bad direction component {part:?}")))?;
    }
    geom::normalized(&v).ok_or_else(|| LabError::Config("direction must be nonzero".into()))
}

fn direction_or_first_axis(dir: &Option<String>, dim: usize) -> Result<Vector, LabError> {
    match dir {
        Some(text) => parse_direction(text, dim),
        None => Ok([1.0, 0.0, 0.0]),
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, LabError> {
    let cfg = load_config(path)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Prints an oracle-vs-quadrature comparison; true when they agree within
/// three standard errors.
fn report_oracle(label: &str, est: McEstimate, quadrature: f64) -> bool {
    let diff = (est.value - quadrature).abs();
    let pass = diff <= 3.0 * est.std_error;
    let ratio = if diff == 0.0 { 0.0 } else { diff / est.std_error };
    println!("{label}");
    println!("  monte carlo  = {} +/- {}", est.value, est.std_error);
    println!("  quadrature   = {quadrature}");
    println!("  |difference| = {diff} ({ratio:.2} standard errors)");
    println!(
        "  agreement within 3 standard errors: {}",
        if pass { "yes" } else { "NO" }
    );
    pass
}

fn run(cli: Cli) -> Result<bool, LabError> {
    match cli.command {
        Command::Theta { config, dir } => {
            let cfg = load(&config)?;
            let ctx = cfg.density_context()?;
            let nu = parse_direction(&dir, cfg.dim)?;
            let value = ctx.theta(&nu)?;
            println!(
                "theta([{}]) = {value}",
                nu[..cfg.dim]
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            Ok(true)
        }
        Command::Feps { config, epsilon } => {
            let cfg = load(&config)?;
            let epsilon = epsilon.unwrap_or(cfg.epsilon0);
            let shape = cfg.build_shape()?;
            let kernel = cfg.build_kernel()?;
            let profile = cfg.build_profile()?;
            let dom = cfg.domain_for_epsilon(epsilon)?;
            let options = EvalOptions {
                supersample: cfg.supersample,
            };
            let start = Instant::now();
            let value =
                eval_f_eps_with_options(&shape, epsilon, &profile, &kernel, &dom, &options)?;
            println!(
                "F_eps = {value}  (epsilon {epsilon}, {} voxels per axis, {:.3}s)",
                dom.resolution(),
                start.elapsed().as_secs_f64()
            );
            Ok(true)
        }
        Command::Limit { config } => {
            let cfg = load(&config)?;
            let ctx = cfg.density_context()?;
            let shape = cfg.build_shape()?;
            let estimate = ctx.limit_functional(&shape, &cfg.fixed_domain()?, cfg.boundary_order)?;
            println!("F(E) = {}", estimate.value);
            if estimate.order_warning {
                println!("warning: boundary quadrature order is low for this shape");
            }
            Ok(true)
        }
        Command::Converge { config } => {
            let cfg = load(&config)?;
            let report = run_convergence(&cfg)?;
            print_convergence(&report);
            if let Some(path) = &cfg.csv_path {
                write_text(path, &convergence_csv(&report))?;
            }
            if let Some(path) = &cfg.json_path {
                write_text(path, &to_json(&report)?)?;
            }
            Ok(report.pass)
        }
        Command::Lowerbound { config } => {
            let cfg = load(&config)?;
            let spec = LowerBoundSpec::from_config(&cfg);
            let report = run_lower_bound(&cfg, &spec)?;
            print_lower_bound(&report);
            if let Some(path) = &cfg.csv_path {
                write_text(path, &lower_bound_csv(&report))?;
            }
            if let Some(path) = &cfg.json_path {
                write_text(path, &to_json(&report)?)?;
            }
            Ok(report.pass.unwrap_or(true))
        }
        Command::Oracle {
            config,
            kind,
            dir,
            offset,
            samples,
            seed,
        } => {
            let cfg = load(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let kernel = cfg.build_kernel()?;
            let pass = match kind {
                OracleKind::Rawmass => {
                    let est = mc_raw_mass_oracle(&kernel, samples, seed);
                    let quadrature = 1.0 / kernel.normalization();
                    report_oracle("raw kernel mass", est, quadrature)
                }
                OracleKind::Halfspace => {
                    let nu = direction_or_first_axis(&dir, cfg.dim)?;
                    let est = mc_halfspace_oracle(&kernel, &nu, offset, samples, seed);
                    let quadrature = kernels::halfspace_mass(&kernel, &nu, offset)?;
                    report_oracle("halfspace mass", est, quadrature)
                }
                OracleKind::Slice => {
                    let nu = direction_or_first_axis(&dir, cfg.dim)?;
                    let est = mc_slice_oracle(&kernel, &nu, offset, samples, seed);
                    let quadrature = kernels::slice_integral(&kernel, &nu, offset)?;
                    report_oracle("slice integral", est, quadrature)
                }
                OracleKind::Theta => {
                    let ctx = cfg.density_context()?;
                    let nu = direction_or_first_axis(&dir, cfg.dim)?;
                    let est = mc_theta_oracle(&ctx, &nu, samples, seed);
                    let quadrature = ctx.theta(&nu)?;
                    report_oracle("surface density", est, quadrature)
                }
                OracleKind::Absmoment => {
                    let nu = direction_or_first_axis(&dir, cfg.dim)?;
                    let est = mc_absolute_moment_oracle(&kernel, &nu, samples, seed);
                    let quadrature = kernels::absolute_moment_along(&kernel, &nu)?;
                    report_oracle("absolute moment", est, quadrature)
                }
                OracleKind::Moment => {
                    let oracle = trapezoid_radial_moment_oracle(&kernel)?;
                    let quadrature = kernels::first_radial_moment(&kernel);
                    let diff = (oracle - quadrature).abs();
                    println!("first radial moment");
                    println!("  trapezoid oracle = {oracle}");
                    println!("  quadrature       = {quadrature}");
                    println!("  |difference|     = {diff}");
                    diff < 1e-10
                }
            };
            Ok(pass)
        }
        Command::Selfcheck {
            config,
            corrupt_stencil_rescale,
        } => {
            let cfg = load(&config)?;
            let options = SelfcheckOptions {
                corrupt_stencil_rescale,
            };
            let report = run_selfcheck(&cfg, &options)?;
            print_selfcheck(&report);
            Ok(report.all_passed())
        }
    }
}
