use thiserror::Error;

/// Errors raised by the linkage toolkit.
///
/// Everything here is an input error except [`Error::BoundExceeded`], which
/// signals that a search ran into its configured safety valve.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid universe: {0}")]
    Universe(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("line {line}: {message}")]
    Located { line: usize, message: String },

    #[error("action `{0}` is only available in a mimicking universe")]
    MimicOnly(String),

    #[error("invalid thread specification: {0}")]
    Thread(String),

    #[error("reply oracle exhausted after {0} replies")]
    OracleExhausted(usize),

    #[error("exploration bound of {0} pairs exceeded")]
    BoundExceeded(usize),
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// Attaches a line number, keeping an existing one.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            Error::Located { .. } | Error::BoundExceeded(_) | Error::OracleExhausted(_) => self,
            other => Error::Located {
                line,
                message: other.to_string(),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
