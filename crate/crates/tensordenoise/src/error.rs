use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A file does not conform to one of the text formats (`tsr3`, `mat`).
    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },

    /// A numerical routine failed or the input is numerically degenerate.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The requested singular vector sits inside a cluster of (numerically)
    /// repeated singular values and is therefore not identifiable.
    #[error("singular vector {index} lies in a zero-gap cluster and is not identifiable")]
    Identifiability { index: usize },

    /// An experiment configuration is malformed or violates an invariant.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
