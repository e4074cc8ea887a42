use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data violates the contract of an operation.
    #[error("invalid input: {0}")]
    Input(String),

    /// A packet dump or table could not be parsed.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    /// The data carries no usable directional or positional information.
    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
