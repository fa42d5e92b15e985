use thiserror::Error;

/// Errors raised by the numerical kernels, the simulators and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("degenerate channel: all singular values are zero")]
    DegenerateChannel,

    #[error("degenerate reference: entry {index} has zero magnitude")]
    DegenerateReference { index: usize },

    #[error("degenerate alignment: the analog precoder is orthogonal to the target")]
    DegenerateAlignment,

    #[error("requested {requested} real streams but the channel rank is {rank}")]
    StreamCount { requested: usize, rank: usize },

    #[error("covariance is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{context}: {source}")]
    Trial {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Innermost error once trial context has been peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Trial { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
