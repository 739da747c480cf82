use thiserror::Error;

/// Errors raised across the tracking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data is well formed but numerically unusable (zero energy, free fall).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The gravity estimate collapsed to a near-zero vector.
    #[error("degenerate gravity estimate: mean acceleration norm {0:.3e} m/s^2")]
    DegenerateGravity(f64),

    /// An experiment or tool configuration is incomplete or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A trace file could not be decoded.
    #[error("malformed record {index}: {reason}")]
    Record { index: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by bad configuration rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parameter(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
