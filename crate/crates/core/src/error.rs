use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("vertex {0} is isolated (zero degree)")]
    IsolatedVertex(usize),
    #[error("vertex set must be a proper nonempty subset (size {size} of {n})")]
    TrivialSet { size: usize, n: usize },
    #[error("instance too large for exhaustive search: n = {n} > {max}")]
    TooLarge { n: usize, max: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid flow: {0}")]
    InvalidFlow(String),
    #[error("not a metric: {0}")]
    NotMetric(String),
    #[error(
        "solver did not converge after {iterations} iterations (feasibility residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },
    #[error("guarantee violated: {0}")]
    ContractViolation(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
