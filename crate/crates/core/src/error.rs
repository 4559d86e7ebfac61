use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("descent did not converge within {budget} steps{}", iteration_suffix(*.iteration))]
    DescentFailed {
        budget: usize,
        iteration: Option<usize>,
    },
    #[error("state has no valid neighbors")]
    NoNeighbors,
    #[error("non-finite payload at iteration {iteration}")]
    NonFinitePayload { iteration: usize },
    #[error("accumulator holds no samples")]
    EmptyAccumulator,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("node {node} has {size} parents, exceeding the indegree cap {cap}")]
    IndegreeExceeded { node: usize, size: usize, cap: usize },
    #[error("enumeration supports at most 6 nodes, got {0}")]
    TooManyNodes(usize),
    #[error("quadrature failed to converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn iteration_suffix(iteration: Option<usize>) -> String {
    match iteration {
        Some(t) => format!(" (iteration {t})"),
        None => String::new(),
    }
}

impl Error {
    /// Attach the sampler iteration to a descent failure.
    pub fn at_iteration(self, t: usize) -> Self {
        match self {
            Error::DescentFailed { budget, .. } => Error::DescentFailed {
                budget,
                iteration: Some(t),
            },
            other => other,
        }
    }
}
