use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument out of domain ({detail})")]
    Domain { func: &'static str, detail: String },

    #[error("invalid amplitude distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid moment set: {0}")]
    InvalidMoments(String),

    #[error("invalid power polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("quadrature did not reach tolerance {tolerance:e} after {subdivisions} subdivisions (error estimate {estimate:e})")]
    Quadrature {
        tolerance: f64,
        estimate: f64,
        subdivisions: usize,
    },

    #[error("infeasible: delivered power floor {requested} exceeds the feasibility edge {edge}")]
    Infeasible { requested: f64, edge: f64 },

    #[error("flash parameter l = {l} delivers {flash_power}, not above the target {target}; increase l")]
    IncreaseFlash { l: u32, flash_power: f64, target: f64 },

    #[error("time-sharing weight {0} is outside the open interval (0, 1)")]
    TimeshareWeight(f64),

    #[error("no Gaussian solution: delivered power floor {requested} exceeds the Gaussian family maximum {max}")]
    NoGaussianSolution { requested: f64, max: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
