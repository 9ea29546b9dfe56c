//! Interaction profiles f: [0,1] → R with f(0) = 0, nondecreasing.
//!
//! The convolution of a unit-mass nonnegative kernel with an indicator stays
//! in [0,1], so profiles never need to be defined outside that interval.
//! Convexity and smoothness are metadata — claims checked by sampling, not
//! proved — because the downstream results consume convexity only as a
//! hypothesis.

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("unknown profile name {0:?} (expected identity, power, expm1 or saturating)")]
    UnknownName(String),
    #[error("profile {0:?} does not take a parameter")]
    UnexpectedParameter(String),
    #[error("profile \"power\" requires a parameter p >= 1")]
    MissingParameter,
    #[error("power exponent must satisfy p >= 1, got {0}")]
    ExponentTooSmall(f64),
}

/// The interaction function f together with its claimed properties.
#[derive(Clone)]
pub struct Profile {
    name: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    convex_flag: bool,
    smooth_flag: bool,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile")
            .field("name", &self.name)
            .field("convex_flag", &self.convex_flag)
            .field("smooth_flag", &self.smooth_flag)
            .finish()
    }
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Claimed convexity; consumed as a hypothesis by the convexity probe.
    pub fn convex_flag(&self) -> bool {
        self.convex_flag
    }

    /// Claimed continuous differentiability.
    pub fn smooth_flag(&self) -> bool {
        self.smooth_flag
    }

    /// The zero profile f ≡ 0 (convex, smooth; makes every energy vanish).
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            eval: Arc::new(|_| 0.0),
            convex_flag: true,
            smooth_flag: true,
        }
    }

    /// A user-supplied profile with explicitly claimed flags. The claims are
    /// not validated here; run [`check_profile`] to audit them.
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        convex_flag: bool,
        smooth_flag: bool,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            convex_flag,
            smooth_flag,
        }
    }
}

/// Builds one of the built-in profiles:
///
/// * `identity`: t
/// * `power`: t^p, parameter p ≥ 1 required
/// * `expm1`: (e^t − 1)/(e − 1)
/// * `saturating`: 2t/(1+t) (concave; convexity not claimed)
pub fn builtin_profile(name: &str, parameter: Option<f64>) -> Result<Profile, ProfileError> {
    let reject_parameter = |name: &str| -> Result<(), ProfileError> {
        if parameter.is_some() {
            Err(ProfileError::UnexpectedParameter(name.into()))
        } else {
            Ok(())
        }
    };
    match name {
        "identity" => {
            reject_parameter(name)?;
            Ok(Profile {
                name: name.into(),
                eval: Arc::new(|t| t),
                convex_flag: true,
                smooth_flag: true,
            })
        }
        "power" => {
            let p = parameter.ok_or(ProfileError::MissingParameter)?;
            if p < 1.0 {
                return Err(ProfileError::ExponentTooSmall(p));
            }
            Ok(Profile {
                name: format!("power({p})"),
                eval: Arc::new(move |t| t.powf(p)),
                convex_flag: true,
                smooth_flag: true,
            })
        }
        "expm1" => {
            reject_parameter(name)?;
            let denom = std::f64::consts::E - 1.0;
            Ok(Profile {
                name: name.into(),
                eval: Arc::new(move |t| t.exp_m1() / denom),
                convex_flag: true,
                smooth_flag: true,
            })
        }
        "saturating" => {
            reject_parameter(name)?;
            Ok(Profile {
                name: name.into(),
                eval: Arc::new(|t| 2.0 * t / (1.0 + t)),
                convex_flag: false,
                smooth_flag: true,
            })
        }
        other => Err(ProfileError::UnknownName(other.into())),
    }
}

/// A single failed law found by [`check_profile`]. Violations are data, not
/// errors: callers decide what to do with them.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileViolation {
    /// f(0) differs from 0.
    NonzeroAtOrigin { value: f64 },
    /// f decreases between two consecutive grid points.
    NotMonotone { a: f64, b: f64, fa: f64, fb: f64 },
    /// Midpoint convexity fails on a grid pair while convexity is claimed.
    NotMidpointConvex { a: f64, b: f64, excess: f64 },
}

impl fmt::Display for ProfileViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonzeroAtOrigin { value } => write!(f, "f(0) = {value} instead of 0"),
            Self::NotMonotone { a, b, fa, fb } => {
                write!(f, "f decreases on [{a}, {b}]: {fa} -> {fb}")
            }
            Self::NotMidpointConvex { a, b, excess } => {
                write!(f, "midpoint convexity fails on ({a}, {b}) by {excess:.3e}")
            }
        }
    }
}

/// Audits a profile's claims on a uniform grid of `samples` points in [0,1]:
/// f(0) = 0 exactly, nondecreasing between consecutive points, and — when
/// convexity is claimed — midpoint convexity on every grid pair with slack
/// 1e−12.
pub fn check_profile(profile: &Profile, samples: usize) -> Vec<ProfileViolation> {
    assert!(samples >= 2, "need at least two samples");
    let mut violations = Vec::new();
    let at = |i: usize| i as f64 / (samples - 1) as f64;
    let values: Vec<f64> = (0..samples).map(|i| profile.eval(at(i))).collect();
    if values[0] != 0.0 {
        violations.push(ProfileViolation::NonzeroAtOrigin { value: values[0] });
    }
    for i in 0..samples - 1 {
        if values[i + 1] < values[i] {
            violations.push(ProfileViolation::NotMonotone {
                a: at(i),
                b: at(i + 1),
                fa: values[i],
                fb: values[i + 1],
            });
        }
    }
    if profile.convex_flag() {
        for i in 0..samples {
            for j in (i + 1)..samples {
                let (a, b) = (at(i), at(j));
                let mid = profile.eval(0.5 * (a + b));
                let excess = mid - 0.5 * (values[i] + values[j]);
                if excess > 1e-12 {
                    violations.push(ProfileViolation::NotMidpointConvex { a, b, excess });
                }
            }
        }
    }
    violations
}
