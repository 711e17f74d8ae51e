use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain: {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("curvature is singular at s = {0}")]
    SingularPoint(f64),
    #[error("grid contains the singular point s = 0 (node {index})")]
    GridContainsSingularity { index: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("s = {s} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("boundary condition not supported here: {0}")]
    UnsupportedBoundary(String),
    #[error("inverse iteration did not converge for eigenpair {index} after {iterations} iterations")]
    NonConvergence { index: usize, iterations: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
