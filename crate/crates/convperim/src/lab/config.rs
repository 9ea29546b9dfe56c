//! Plain-text experiment configuration.
//!
//! The format is `key = value` lines grouped under `[section]` headers;
//! `#` starts a comment anywhere on a line. Every key has a default, so the
//! empty file is a valid config; unknown sections or keys are hard errors.
//!
//! Sections and keys (defaults in parentheses):
//!
//! ```text
//! [kernel]   dim (2) · anisotropy (none; dim·dim numbers, row-major)
//! [profile]  name (identity; one of identity, power, expm1, saturating,
//!            zero) · exponent (none; required for power)
//! [shape]    kind (ball; one of ball, box, slab, graph)
//!            ball:  center (0.5 per axis) · radius (0.3)
//!            box:   lower (0.25 per axis) · upper (0.75 per axis)
//!            slab:  normal (first axis) · offset_low (0.2) · offset_high (0.5)
//!            graph: base (0.5) · amplitude (0.1) · frequency (1) ·
//!                   boundary (top; or full) — the height is
//!                   u(x) = base + amplitude·sin(2π·frequency·x), with the
//!                   analogous product form over both axes in 3D
//! [domain]   lower (0 per axis) · upper (1 per axis) · resolution (64) ·
//!            supersample (4)
//! [schedule] epsilon0 (0.125) · ratio (0.5) · count (4) ·
//!            policy (eps-over-k; or fixed) · k (8) · tolerance (0.02) ·
//!            t_order (64) · slice_order (64) · boundary_order (128) ·
//!            seed (7) · h_values (8 16 32 64) · epsilon_factor (8) ·
//!            perturb_amplitude (1) · perturb_frequency (2) ·
//!            fixed_epsilon (none) · deficit_tolerance (0.03)
//! [output]   csv (none) · json (none)
//! ```
//!
//! The `eps-over-k` resolution policy grids each ε run at spacing h = ε/k;
//! `fixed` uses `[domain] resolution` for every ε and exists to expose
//! discretization-floor effects deliberately. The lower-bound keys pair each
//! h in `h_values` with the perturbation amplitude a_h = perturb_amplitude/h,
//! the perturbed height u_h = u + a_h·cos(2π·perturb_frequency·x), and the
//! range ε_h = 1/(epsilon_factor·h) — unless `fixed_epsilon` pins ε, which
//! produces the degenerate no-limit schedule.

use super::LabError;
use crate::density::DensityContext;
use crate::geom::{Matrix, Vector};
use crate::kernels::{make_bump_kernel, Kernel};
use crate::profiles::{builtin_profile, Profile};
use crate::shapes::{Domain, GraphBoundary, Shape};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Which shape the config describes, with its raw parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Ball {
        center: Option<Vec<f64>>,
        radius: f64,
    },
    BoxShape {
        lower: Option<Vec<f64>>,
        upper: Option<Vec<f64>>,
    },
    Slab {
        normal: Option<Vec<f64>>,
        offset_low: f64,
        offset_high: f64,
    },
    Graph {
        base: f64,
        amplitude: f64,
        frequency: f64,
        full_boundary: bool,
    },
}

/// How the grid resolution follows the ε schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolutionPolicy {
    /// h = ε/k per run (k ≥ 4).
    EpsOverK { k: f64 },
    /// One fixed resolution for every ε.
    Fixed,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// The user-supplied keys, section by section, echoed into JSON reports.
    pub echo: BTreeMap<String, BTreeMap<String, String>>,
    // [kernel]
    pub dim: usize,
    pub anisotropy: Option<Vec<f64>>,
    // [profile]
    pub profile_name: String,
    pub exponent: Option<f64>,
    // [shape]
    pub shape: ShapeSpec,
    // [domain]
    pub domain_lower: Option<Vec<f64>>,
    pub domain_upper: Option<Vec<f64>>,
    pub resolution: usize,
    pub supersample: usize,
    // [schedule]
    pub epsilon0: f64,
    pub ratio: f64,
    pub count: usize,
    pub policy: ResolutionPolicy,
    pub tolerance: f64,
    pub t_order: usize,
    pub slice_order: usize,
    pub boundary_order: usize,
    pub seed: u64,
    pub h_values: Vec<u32>,
    pub epsilon_factor: f64,
    pub perturb_amplitude: f64,
    pub perturb_frequency: f64,
    pub fixed_epsilon: Option<f64>,
    pub deficit_tolerance: f64,
    // [output]
    pub csv_path: Option<PathBuf>,
    pub json_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            echo: BTreeMap::new(),
            dim: 2,
            anisotropy: None,
            profile_name: "identity".to_string(),
            exponent: None,
            shape: ShapeSpec::Ball {
                center: None,
                radius: 0.3,
            },
            domain_lower: None,
            domain_upper: None,
            resolution: 64,
            supersample: 4,
            epsilon0: 0.125,
            ratio: 0.5,
            count: 4,
            policy: ResolutionPolicy::EpsOverK { k: 8.0 },
            tolerance: 0.02,
            t_order: 64,
            slice_order: 64,
            boundary_order: 128,
            seed: 7,
            h_values: vec![8, 16, 32, 64],
            epsilon_factor: 8.0,
            perturb_amplitude: 1.0,
            perturb_frequency: 2.0,
            fixed_epsilon: None,
            deficit_tolerance: 0.03,
            csv_path: None,
            json_path: None,
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> LabError {
    LabError::Config(format!("line {line}: {msg}"))
}

fn parse_f64(line: usize, section: &str, key: &str, v: &str) -> Result<f64, LabError> {
    v.parse()
        .map_err(|_| bad(line, format!("invalid number '{v}' for {section}.{key}")))
}

fn parse_usize(line: usize, section: &str, key: &str, v: &str) -> Result<usize, LabError> {
    v.parse()
        .map_err(|_| bad(line, format!("invalid integer '{v}' for {section}.{key}")))
}

fn parse_floats(line: usize, section: &str, key: &str, v: &str) -> Result<Vec<f64>, LabError> {
    v.split_whitespace()
        .map(|tok| {
            tok.parse().map_err(|_| {
                bad(
                    line,
                    format!("invalid number '{tok}' in list for {section}.{key}"),
                )
            })
        })
        .collect()
}

/// Parses a config file's text. Every value is accepted in any section
/// order; validation of cross-field invariants happens in
/// [`ExperimentConfig::validate`], called at the end.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, LabError> {
    let mut cfg = ExperimentConfig::default();
    // shape keys are collected raw: the shape kind may appear after its
    // parameters, so the ShapeSpec is assembled once the file is read
    let mut shape_keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| bad(line, format!("malformed section header '{content}'")))?
                .trim();
            if ![
                "kernel", "profile", "shape", "domain", "schedule", "output",
            ]
            .contains(&name)
            {
                return Err(bad(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| bad(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.as_deref() else {
            return Err(bad(line, format!("key '{key}' appears before any [section]")));
        };
        cfg.echo
            .entry(sec.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
        match (sec, key) {
            ("kernel", "dim") => cfg.dim = parse_usize(line, sec, key, value)?,
            ("kernel", "anisotropy") => {
                cfg.anisotropy = Some(parse_floats(line, sec, key, value)?)
            }
            ("profile", "name") => cfg.profile_name = value.to_string(),
            ("profile", "exponent") => cfg.exponent = Some(parse_f64(line, sec, key, value)?),
            ("shape", _) => {
                shape_keys.insert(key.to_string(), (line, value.to_string()));
            }
            ("domain", "lower") => cfg.domain_lower = Some(parse_floats(line, sec, key, value)?),
            ("domain", "upper") => cfg.domain_upper = Some(parse_floats(line, sec, key, value)?),
            ("domain", "resolution") => cfg.resolution = parse_usize(line, sec, key, value)?,
            ("domain", "supersample") => cfg.supersample = parse_usize(line, sec, key, value)?,
            ("schedule", "epsilon0") => cfg.epsilon0 = parse_f64(line, sec, key, value)?,
            ("schedule", "ratio") => cfg.ratio = parse_f64(line, sec, key, value)?,
            ("schedule", "count") => cfg.count = parse_usize(line, sec, key, value)?,
            ("schedule", "policy") => {
                cfg.policy = match value {
                    "eps-over-k" => {
                        let k = match cfg.policy {
                            ResolutionPolicy::EpsOverK { k } => k,
                            ResolutionPolicy::Fixed => 8.0,
                        };
                        ResolutionPolicy::EpsOverK { k }
                    }
                    "fixed" => ResolutionPolicy::Fixed,
                    other => {
                        return Err(bad(
                            line,
                            format!("policy must be 'eps-over-k' or 'fixed', got '{other}'"),
                        ))
                    }
                }
            }
            ("schedule", "k") => {
                let k = parse_f64(line, sec, key, value)?;
                if let ResolutionPolicy::EpsOverK { k: slot } = &mut cfg.policy {
                    *slot = k;
                }
            }
            ("schedule", "tolerance") => cfg.tolerance = parse_f64(line, sec, key, value)?,
            ("schedule", "t_order") => cfg.t_order = parse_usize(line, sec, key, value)?,
            ("schedule", "slice_order") => cfg.slice_order = parse_usize(line, sec, key, value)?,
            ("schedule", "boundary_order") => {
                cfg.boundary_order = parse_usize(line, sec, key, value)?
            }
            ("schedule", "seed") => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| bad(line, format!("invalid seed '{value}'")))?
            }
            ("schedule", "h_values") => {
                cfg.h_values = value
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse()
                            .map_err(|_| bad(line, format!("invalid h value '{tok}'")))
                    })
                    .collect::<Result<_, _>>()?
            }
            ("schedule", "epsilon_factor") => {
                cfg.epsilon_factor = parse_f64(line, sec, key, value)?
            }
            ("schedule", "perturb_amplitude") => {
                cfg.perturb_amplitude = parse_f64(line, sec, key, value)?
            }
            ("schedule", "perturb_frequency") => {
                cfg.perturb_frequency = parse_f64(line, sec, key, value)?
            }
            ("schedule", "fixed_epsilon") => {
                cfg.fixed_epsilon = Some(parse_f64(line, sec, key, value)?)
            }
            ("schedule", "deficit_tolerance") => {
                cfg.deficit_tolerance = parse_f64(line, sec, key, value)?
            }
            ("output", "csv") => cfg.csv_path = Some(PathBuf::from(value)),
            ("output", "json") => cfg.json_path = Some(PathBuf::from(value)),
            (sec, key) => return Err(bad(line, format!("unknown key '{key}' in [{sec}]"))),
        }
    }
    cfg.shape = build_shape_spec(&shape_keys)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, LabError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn build_shape_spec(
    keys: &BTreeMap<String, (usize, String)>,
) -> Result<ShapeSpec, LabError> {
    let kind = keys
        .get("kind")
        .map(|(_, v)| v.as_str())
        .unwrap_or("ball");
    let allowed: &[&str] = match kind {
        "ball" => &["kind", "center", "radius"],
        "box" => &["kind", "lower", "upper"],
        "slab" => &["kind", "normal", "offset_low", "offset_high"],
        "graph" => &["kind", "base", "amplitude", "frequency", "boundary"],
        other => {
            let (line, _) = keys["kind"];
            return Err(bad(
                line,
                format!("shape kind must be ball, box, slab or graph, got '{other}'"),
            ));
        }
    };
    for (key, (line, _)) in keys {
        if !allowed.contains(&key.as_str()) {
            return Err(bad(
                *line,
                format!("unknown key '{key}' in [shape] for kind '{kind}'"),
            ));
        }
    }
    let float = |key: &str, default: f64| -> Result<f64, LabError> {
        match keys.get(key) {
            Some((line, v)) => parse_f64(*line, "shape", key, v),
            None => Ok(default),
        }
    };
    let floats = |key: &str| -> Result<Option<Vec<f64>>, LabError> {
        match keys.get(key) {
            Some((line, v)) => Ok(Some(parse_floats(*line, "shape", key, v)?)),
            None => Ok(None),
        }
    };
    Ok(match kind {
        "ball" => ShapeSpec::Ball {
            center: floats("center")?,
            radius: float("radius", 0.3)?,
        },
        "box" => ShapeSpec::BoxShape {
            lower: floats("lower")?,
            upper: floats("upper")?,
        },
        "slab" => ShapeSpec::Slab {
            normal: floats("normal")?,
            offset_low: float("offset_low", 0.2)?,
            offset_high: float("offset_high", 0.5)?,
        },
        "graph" => ShapeSpec::Graph {
            base: float("base", 0.5)?,
            amplitude: float("amplitude", 0.1)?,
            frequency: float("frequency", 1.0)?,
            full_boundary: match keys.get("boundary").map(|(l, v)| (*l, v.as_str())) {
                None | Some((_, "top")) => false,
                Some((_, "full")) => true,
                Some((line, other)) => {
                    return Err(bad(
                        line,
                        format!("graph boundary must be 'top' or 'full', got '{other}'"),
                    ))
                }
            },
        },
        _ => unreachable!(),
    })
}

fn vector_from(
    values: &Option<Vec<f64>>,
    default: f64,
    dim: usize,
    what: &str,
) -> Result<Vector, LabError> {
    let mut out = [0.0; 3];
    match values {
        None => {
            out[..dim].fill(default);
        }
        Some(v) => {
            if v.len() != dim {
                return Err(LabError::Config(format!(
                    "{what} needs {dim} components, got {}",
                    v.len()
                )));
            }
            out[..dim].copy_from_slice(v);
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Cross-field validation: everything that can be rejected before any
    /// numerics runs, so schedule mistakes fail as config errors.
    pub fn validate(&self) -> Result<(), LabError> {
        if !(2..=3).contains(&self.dim) {
            return Err(LabError::Config(format!(
                "kernel.dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        self.build_profile()?;
        self.build_kernel()?;
        if !(self.epsilon0 > 0.0) {
            return Err(LabError::Config(format!(
                "schedule.epsilon0 must be positive, got {}",
                self.epsilon0
            )));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(LabError::Config(format!(
                "schedule.ratio must lie in (0,1) so the epsilon schedule strictly decreases, got {}",
                self.ratio
            )));
        }
        if self.count < 1 {
            return Err(LabError::Config("schedule.count must be at least 1".into()));
        }
        match self.policy {
            ResolutionPolicy::EpsOverK { k } => {
                if k < 4.0 {
                    return Err(LabError::Config(format!(
                        "schedule.k must be at least 4 (the scale gate needs epsilon >= 4h), got {k}"
                    )));
                }
            }
            ResolutionPolicy::Fixed => {
                let dom = self.fixed_domain()?;
                let min_eps = self.epsilon0 * self.ratio.powi(self.count as i32 - 1);
                let h = dom.spacing();
                if min_eps < 4.0 * h * (1.0 - 1e-12) {
                    let width = dom.upper()[0] - dom.lower()[0];
                    return Err(LabError::Config(format!(
                        "fixed resolution {} gives h = {h}, violating epsilon >= 4h at the \
                         smallest scheduled epsilon = {min_eps}; need resolution >= {}",
                        self.resolution,
                        (4.0 * width / min_eps).ceil() as usize
                    )));
                }
            }
        }
        if self.supersample < 1 {
            return Err(LabError::Config(
                "domain.supersample must be at least 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) || !(self.deficit_tolerance > 0.0) {
            return Err(LabError::Config("tolerances must be positive".into()));
        }
        if self.boundary_order < 4 {
            return Err(LabError::Config(
                "schedule.boundary_order must be at least 4".into(),
            ));
        }
        if self.h_values.is_empty() {
            return Err(LabError::Config("schedule.h_values must be nonempty".into()));
        }
        if self.h_values.iter().any(|&h| h == 0) {
            return Err(LabError::Config("schedule.h_values must be positive".into()));
        }
        if !(self.epsilon_factor > 0.0) {
            return Err(LabError::Config(
                "schedule.epsilon_factor must be positive".into(),
            ));
        }
        if let Some(eps) = self.fixed_epsilon {
            if !(eps > 0.0) {
                return Err(LabError::Config(
                    "schedule.fixed_epsilon must be positive".into(),
                ));
            }
        }
        // orders checked by DensityContext; surface them as config errors
        self.density_context()?;
        Ok(())
    }

    pub fn build_kernel(&self) -> Result<Kernel, LabError> {
        let aniso: Option<Matrix> = match &self.anisotropy {
            None => None,
            Some(entries) => {
                if entries.len() != self.dim * self.dim {
                    return Err(LabError::Config(format!(
                        "kernel.anisotropy needs {} entries (row-major {}x{}), got {}",
                        self.dim * self.dim,
                        self.dim,
                        self.dim,
                        entries.len()
                    )));
                }
                let mut m = [[0.0; 3]; 3];
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        m[i][j] = entries[i * self.dim + j];
                    }
                }
                Some(m)
            }
        };
        Ok(make_bump_kernel(self.dim, aniso)?)
    }

    pub fn build_profile(&self) -> Result<Profile, LabError> {
        if self.profile_name == "zero" {
            if self.exponent.is_some() {
                return Err(LabError::Config(
                    "profile.exponent is not accepted for the zero profile".into(),
                ));
            }
            return Ok(Profile::zero());
        }
        Ok(builtin_profile(&self.profile_name, self.exponent)?)
    }

    pub fn density_context(&self) -> Result<DensityContext, LabError> {
        Ok(DensityContext::with_orders(
            self.build_kernel()?,
            self.build_profile()?,
            self.t_order,
            self.slice_order,
        )?)
    }

    pub fn fixed_domain(&self) -> Result<Domain, LabError> {
        let lower = vector_from(&self.domain_lower, 0.0, self.dim, "domain.lower")?;
        let upper = vector_from(&self.domain_upper, 1.0, self.dim, "domain.upper")?;
        Ok(Domain::new(lower, upper, self.resolution, self.dim)?)
    }

    /// The grid used for one ε run under the resolution policy.
    pub fn domain_for_epsilon(&self, epsilon: f64) -> Result<Domain, LabError> {
        match self.policy {
            ResolutionPolicy::Fixed => self.fixed_domain(),
            ResolutionPolicy::EpsOverK { k } => {
                let lower = vector_from(&self.domain_lower, 0.0, self.dim, "domain.lower")?;
                let upper = vector_from(&self.domain_upper, 1.0, self.dim, "domain.upper")?;
                let width = upper[0] - lower[0];
                let resolution = ((width * k / epsilon).round() as usize).max(8);
                Ok(Domain::new(lower, upper, resolution, self.dim)?)
            }
        }
    }

    /// The strictly decreasing ε schedule ε₀·ratioⁱ, i = 0..count.
    pub fn epsilon_schedule(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.epsilon0 * self.ratio.powi(i as i32))
            .collect()
    }

    /// Builds the configured shape. Graph heights are the sinusoid family
    /// documented in the module header; their base rectangle is the domain
    /// cross-section.
    pub fn build_shape(&self) -> Result<Shape, LabError> {
        let dim = self.dim;
        Ok(match &self.shape {
            ShapeSpec::Ball { center, radius } => Shape::Ball {
                center: vector_from(center, 0.5, dim, "shape.center")?,
                radius: *radius,
            },
            ShapeSpec::BoxShape { lower, upper } => Shape::Box {
                lower: vector_from(lower, 0.25, dim, "shape.lower")?,
                upper: vector_from(upper, 0.75, dim, "shape.upper")?,
            },
            ShapeSpec::Slab {
                normal,
                offset_low,
                offset_high,
            } => {
                let normal = match normal {
                    None => {
                        let mut n = [0.0; 3];
                        n[0] = 1.0;
                        n
                    }
                    some => vector_from(some, 0.0, dim, "shape.normal")?,
                };
                Shape::Slab {
                    normal,
                    offset_low: *offset_low,
                    offset_high: *offset_high,
                }
            }
            ShapeSpec::Graph {
                base,
                amplitude,
                frequency,
                full_boundary,
            } => {
                let lower = vector_from(&self.domain_lower, 0.0, dim, "domain.lower")?;
                let upper = vector_from(&self.domain_upper, 1.0, dim, "domain.upper")?;
                let boundary = if *full_boundary {
                    GraphBoundary::Full
                } else {
                    GraphBoundary::TopOnly
                };
                let (b, a, f) = (*base, *amplitude, *frequency);
                if dim == 2 {
                    Shape::graph_2d(
                        lower[0],
                        upper[0],
                        move |x| b + a * (2.0 * PI * f * x).sin(),
                        move |x| a * 2.0 * PI * f * (2.0 * PI * f * x).cos(),
                        boundary,
                    )
                } else {
                    Shape::graph_3d(
                        [lower[0], lower[1]],
                        [upper[0], upper[1]],
                        move |x, y| {
                            b + a * (2.0 * PI * f * x).sin() * (2.0 * PI * f * y).sin()
                        },
                        move |x, y| {
                            let w = 2.0 * PI * f;
                            [
                                a * w * (w * x).cos() * (w * y).sin(),
                                a * w * (w * x).sin() * (w * y).cos(),
                            ]
                        },
                        boundary,
                    )
                }
            }
        })
    }
}
