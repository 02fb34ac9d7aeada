use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OsfError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Eigenvector matrix is (numerically) singular; carries the smallest eigengap found.
    #[error("ill-conditioned eigenproblem: smallest eigengap {min_gap:e}")]
    IllConditioned { min_gap: f64 },

    #[error("rank deficient: rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("simulation blew up at step {step}: {detail}")]
    Simulation { step: usize, detail: String },

    #[error("search failed: {0}")]
    SearchFailure(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl From<std::io::Error> for OsfError {
    fn from(e: std::io::Error) -> Self {
        OsfError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for OsfError {
    fn from(e: serde_json::Error) -> Self {
        OsfError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, OsfError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(OsfError::InvalidInput(msg.into()))
}
