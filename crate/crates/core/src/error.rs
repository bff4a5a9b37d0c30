use thiserror::Error;

/// Error type shared across the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid secret space: {0}")]
    InvalidSpace(String),

    #[error("malformed belief: {0}")]
    MalformedBelief(String),

    #[error("belief/space mismatch: belief is for '{belief_space}', expected '{expected}'")]
    SpaceMismatch {
        belief_space: String,
        expected: String,
    },

    #[error("observation has zero likelihood under every secret (channel/transcript mismatch)")]
    ImpossibleEvidence,

    #[error("belief representation does not support this likelihood shape: {0}")]
    UnsupportedUpdate(String),

    #[error("no response rule matches query kind {0}")]
    NoMatchingRule(String),

    #[error("invalid channel configuration: {0}")]
    InvalidChannel(String),

    #[error("dp epsilon must be >= 0, got {0}")]
    InvalidEpsilon(f64),

    #[error("capacity iteration did not converge within {iterations} steps (last estimate {last_estimate} bits)")]
    CapacityNonConvergence { iterations: usize, last_estimate: f64 },

    #[error("attack planning failed: {0}")]
    Planning(String),

    #[error("transcript is missing data required for this check: {0}")]
    IncompleteTranscript(String),

    #[error("detector model not fitted: {0}")]
    UnfittedModel(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid config at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io { .. } | Error::InvalidSpace(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
