//! Experiment layer: plain-text configs, convergence and lower-bound
//! studies, Monte Carlo oracles, report emission, and the self-check suite
//! behind the `convperim` binary.

pub mod config;
pub mod oracle;
pub mod report;
pub mod runner;
pub mod selfcheck;

use crate::density::DensityError;
use crate::kernels::KernelError;
use crate::nonlocal::NonlocalError;
use crate::profiles::ProfileError;
use crate::shapes::{DomainError, ShapeError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit code: 2 for configuration and usage problems, 1 for
    /// runtime failures (the same code used when pass criteria fail).
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_)
            | LabError::Kernel(_)
            | LabError::Profile(_)
            | LabError::Domain(_)
            | LabError::Shape(_) => 2,
            _ => 1,
        }
    }
}
