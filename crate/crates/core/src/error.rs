use thiserror::Error;

/// Errors raised by the model, solver and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested combination is outside what is modelled (e.g. first-price with atoms).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical routine failed to converge or bracket a root.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Inputs that must describe the same scenario disagree.
    #[error("mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
