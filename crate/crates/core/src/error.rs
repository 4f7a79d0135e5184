use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("map is not expanding: lambda * beta_hat = {product} <= 1 (lambda must exceed {min_lambda})")]
    NotExpanding { product: f64, min_lambda: f64 },

    #[error("{op}: point outside domain ({detail})")]
    Domain { op: &'static str, detail: String },

    #[error("target lies in the wrong half-space for tray with sigma = {sigma}{}", step.map(|s| format!(" (pullback step {s})")).unwrap_or_default())]
    WrongHalfSpace { sigma: i64, step: Option<usize> },

    #[error("height {height} exceeds the evaluation limit {limit}")]
    Overflow { height: f64, limit: f64 },

    #[error("itinerary is not admissible between index {from} and {to}: {reason}")]
    Inadmissible { from: usize, to: usize, reason: String },

    #[error("finite-difference stencil too close to a non-smooth set: margin {distance} < {required}")]
    TooCloseToFold { distance: f64, required: f64 },

    #[error("no convergence after depth {depth}: residual {residual} > tol {tol}")]
    NoConvergence { depth: usize, residual: f64, tol: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("non-positive Jacobian determinant {det} at {at:?}")]
    NonPositiveJacobian { det: f64, at: Vec<f64> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
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
