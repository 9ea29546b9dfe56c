//! Experiment reports and their emission as CSV and JSON.
//!
//! File outputs are deterministic: identical config and seeds produce
//! byte-identical bytes. Wall-clock timings are therefore kept in memory for
//! the terminal tables only and never serialized; floats are written with
//! the shortest round-trip formatting.

use super::LabError;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Version string stamped into JSON reports, in `git describe` style.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub type ConfigEcho = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub f_eps: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceReport {
    pub version: &'static str,
    pub kind: &'static str,
    pub config: ConfigEcho,
    /// The limit value F(E) from the surface-density quadrature.
    pub reference: f64,
    pub reference_order_warning: bool,
    /// Rows sorted by decreasing ε.
    pub rows: Vec<ConvergenceRow>,
    pub monotone_errors: bool,
    /// Least-squares slope of log|F_ε − F| against log ε on the last 4 rows;
    /// `None` means insufficient data.
    pub rate: Option<f64>,
    pub rate_note: &'static str,
    pub extrapolated: f64,
    pub final_rel_error: f64,
    pub extrapolated_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundRow {
    pub h: u32,
    pub epsilon: f64,
    /// F_{ε_h}(E_h) on the perturbed graph.
    pub f_eps: f64,
    pub reference: f64,
    /// F(E) − F_{ε_h}(E_h); positive values are what the bound constrains.
    pub deficit: f64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct LowerBoundReport {
    pub version: &'static str,
    pub kind: &'static str,
    pub config: ConfigEcho,
    pub reference: f64,
    pub reference_order_warning: bool,
    /// Rows sorted by increasing h.
    pub rows: Vec<LowerBoundRow>,
    /// True when ε_h is pinned instead of shrinking; the liminf statement
    /// then does not apply and `pass` is absent.
    pub no_limit_schedule: bool,
    pub final_deficit: f64,
    pub deficit_tolerance: f64,
    /// One-sided check only: positive deficits must shrink and the last one
    /// must be within tolerance. Never asserts an upper bound.
    pub pass: Option<bool>,
}

/// Richardson extrapolation on a geometric ε schedule: fits
/// v(ε) ≈ F + C·ε^p to the last three values and removes the leading term.
/// Falls back to the last value when the differences do not behave like a
/// single decaying mode (sign change, stagnation, or too few rows).
pub fn richardson_extrapolate(epsilons: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return values[n - 1];
    }
    let rho = epsilons[n - 1] / epsilons[n - 2];
    let d1 = values[n - 2] - values[n - 3];
    let d2 = values[n - 1] - values[n - 2];
    if d1 * d2 <= 0.0 {
        return values[n - 1];
    }
    let p = (d1 / d2).ln() / (1.0 / rho).ln();
    if !p.is_finite() || p <= 0.0 {
        return values[n - 1];
    }
    let rho_p = rho.powf(p);
    values[n - 1] + d2 * rho_p / (1.0 - rho_p)
}

/// Least-squares slope of log(err) against log(ε) over the last `window`
/// points with strictly positive error; `None` ("insufficient data") when
/// fewer than `window` such points exist.
pub fn fit_rate(epsilons: &[f64], errors: &[f64], window: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = epsilons
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&eps, &e)| (eps.ln(), e.ln()))
        .collect();
    if pts.len() < window {
        return None;
    }
    let tail = &pts[pts.len() - window..];
    let n = tail.len() as f64;
    let mean_x = tail.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = tail.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxy: f64 = tail
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let sxx: f64 = tail.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    Some(sxy / sxx)
}

/// One RFC-4180 field: quote only when the content requires it.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("epsilon,f_eps,abs_error,rel_error\r\n");
    for row in &report.rows {
        out.push_str(&csv_line(&[
            row.epsilon.to_string(),
            row.f_eps.to_string(),
            row.abs_error.to_string(),
            row.rel_error.to_string(),
        ]));
        out.push_str("\r\n");
    }
    out
}

pub fn lower_bound_csv(report: &LowerBoundReport) -> String {
    let mut out = String::from("h,epsilon,f_eps,reference,deficit\r\n");
    for row in &report.rows {
        out.push_str(&csv_line(&[
            row.h.to_string(),
            row.epsilon.to_string(),
            row.f_eps.to_string(),
            row.reference.to_string(),
            row.deficit.to_string(),
        ]));
        out.push_str("\r\n");
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn to_json<T: Serialize>(report: &T) -> Result<String, LabError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Terminal table for a convergence report (wall times shown here only).
pub fn print_convergence(report: &ConvergenceReport) {
    println!(
        "reference F(E) = {} (boundary quadrature{})",
        report.reference,
        if report.reference_order_warning {
            ", order warning"
        } else {
            ""
        }
    );
    println!(
        "{:>12} {:>22} {:>14} {:>12} {:>9}",
        "epsilon", "F_eps", "abs_error", "rel_error", "wall[s]"
    );
    for row in &report.rows {
        println!(
            "{:>12.8} {:>22.15} {:>14.6e} {:>12.4e} {:>9.3}",
            row.epsilon, row.f_eps, row.abs_error, row.rel_error, row.wall_seconds
        );
    }
    match report.rate {
        Some(rate) => println!("fitted rate p = {rate:.3} ({})", report.rate_note),
        None => println!("fitted rate: {}", report.rate_note),
    }
    println!(
        "extrapolated limit = {} (rel error {:.4e})",
        report.extrapolated, report.extrapolated_rel_error
    );
    println!(
        "errors monotone: {}; pass (tolerance {}): {}",
        if report.monotone_errors { "yes" } else { "no" },
        report.tolerance,
        if report.pass { "yes" } else { "no" }
    );
}

/// Terminal table for a lower-bound report.
pub fn print_lower_bound(report: &LowerBoundReport) {
    println!(
        "reference F(E) = {} (boundary quadrature{})",
        report.reference,
        if report.reference_order_warning {
            ", order warning"
        } else {
            ""
        }
    );
    println!(
        "{:>6} {:>12} {:>22} {:>14} {:>9}",
        "h", "epsilon", "F_eps(E_h)", "deficit", "wall[s]"
    );
    for row in &report.rows {
        println!(
            "{:>6} {:>12.8} {:>22.15} {:>14.6e} {:>9.3}",
            row.h, row.epsilon, row.f_eps, row.deficit, row.wall_seconds
        );
    }
    if report.no_limit_schedule {
        println!("no-limit schedule: epsilon does not shrink, liminf criteria not applicable");
    } else {
        println!(
            "final deficit = {:.4e} (tolerance {} of reference); pass: {}",
            report.final_deficit,
            report.deficit_tolerance,
            match report.pass {
                Some(true) => "yes",
                Some(false) => "no",
                None => "n/a",
            }
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_recovers_a_clean_power_law() {
        // v(ε) = F + C·ε^p with F = 2, C = 0.7, p = 1.5
        let eps: Vec<f64> = (0..4).map(|i| 0.125 * 0.5f64.powi(i)).collect();
        let vals: Vec<f64> = eps.iter().map(|e| 2.0 + 0.7 * e.powf(1.5)).collect();
        let lim = richardson_extrapolate(&eps, &vals);
        assert!((lim - 2.0).abs() < 1e-12, "extrapolated {lim}");
    }

    #[test]
    fn richardson_falls_back_on_sign_changes() {
        let eps = [0.125, 0.0625, 0.03125];
        let vals = [2.0, 2.1, 2.05];
        assert_eq!(richardson_extrapolate(&eps, &vals), 2.05);
        // and on short inputs
        assert_eq!(richardson_extrapolate(&eps[..2], &vals[..2]), 2.1);
    }

    #[test]
    fn rate_fit_recovers_the_slope() {
        let eps: Vec<f64> = (0..6).map(|i| 0.25 * 0.5f64.powi(i)).collect();
        let errs: Vec<f64> = eps.iter().map(|e| 3.0 * e.powf(2.0)).collect();
        let rate = fit_rate(&eps, &errs, 4).unwrap();
        assert!((rate - 2.0).abs() < 1e-12);
        // zero errors shrink the usable set below the window
        let errs = [0.0, 0.0, 0.0, 1e-3, 1e-4, 1e-5];
        assert!(fit_rate(&eps, &errs, 4).is_none());
    }

    #[test]
    fn csv_quoting_follows_rfc_4180() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn convergence_csv_layout() {
        let report = ConvergenceReport {
            version: VERSION,
            kind: "convergence",
            config: ConfigEcho::new(),
            reference: 0.5,
            reference_order_warning: false,
            rows: vec![ConvergenceRow {
                epsilon: 0.125,
                f_eps: 0.375,
                abs_error: 0.125,
                rel_error: 0.25,
                wall_seconds: 1.0,
            }],
            monotone_errors: true,
            rate: None,
            rate_note: "insufficient data",
            extrapolated: 0.375,
            final_rel_error: 0.25,
            extrapolated_rel_error: 0.25,
            tolerance: 0.02,
            pass: false,
        };
        let csv = convergence_csv(&report);
        assert_eq!(
            csv,
            "epsilon,f_eps,abs_error,rel_error\r\n0.125,0.375,0.125,0.25\r\n"
        );
        // wall time never reaches the serialized forms
        let json = to_json(&report).unwrap();
        assert!(!json.contains("wall"));
        assert!(json.contains("\"version\""));
    }
}
