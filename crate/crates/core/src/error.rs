use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for a graph with {n} nodes")]
    BadIndex { index: usize, n: usize },

    #[error("graph is not strongly connected (node {from} cannot reach node {to})")]
    NotStronglyConnected { from: usize, to: usize },

    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("invalid weight matrix: {0}")]
    InvalidWeights(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("no power N <= {cap} with ||(A - Y_inf)^N||_2 < 1")]
    SpectralRadiusNotLessThanOne { cap: usize },

    #[error("matrix for agent {agent} is not symmetric positive definite")]
    NotPositiveDefinite { agent: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("diagonal entry {agent} of Y became {value:e} at iteration {k}")]
    SingularDiagonal { agent: usize, k: usize, value: f64 },

    #[error("step size {alpha} outside (0, {limit})")]
    StepSizeOutOfRange { alpha: f64, limit: f64 },

    #[error("step-size bound certification failed: rho(G) = {rho} at alpha = {alpha}")]
    CertificationFailed { alpha: f64, rho: f64 },

    #[error("insufficient data for rate fit: {0}")]
    InsufficientData(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
