use thiserror::Error;

/// Errors raised by the library.
///
/// `Domain` covers numeric arguments outside their mathematical domain
/// (a probability above one, an inconsistent output/run-vector triple).
/// `Usage` covers calls that violate a structural precondition, including
/// the enumeration resource limits of the exact oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
