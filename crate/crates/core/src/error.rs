use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Arguments outside the domain of an operation.
    #[error("invalid input: {0}")]
    InputDomain(String),

    /// The request exceeds a fixed compute budget (dimension caps, node limits).
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Greedy spread-set construction could not fill a set.
    #[error("capacity exhausted: set {set_index} reached {filled} of {wanted} members")]
    Capacity {
        set_index: usize,
        filled: usize,
        wanted: usize,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::InputDomain(msg.into())
    }

    pub(crate) fn budget(msg: impl Into<String>) -> Self {
        Error::Budget(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
