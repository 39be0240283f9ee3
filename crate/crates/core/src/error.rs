use thiserror::Error;

/// Failure modes shared by every solver and reduction in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed or inconsistent input (unknown ids, bad parameters, wrong graph kind).
    #[error("input error: {0}")]
    Input(String),
    /// The instance has no feasible solution under the requested constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A hard size cap (bitmask width, enumeration cap) was exceeded.
    #[error("instance too large: {0}")]
    TooLarge(String),
    /// A caller handed in something that violates a documented precondition,
    /// e.g. an infeasible solution to a lifting routine.
    #[error("contract violated: {0}")]
    Contract(String),
    /// Line-numbered diagnostic from the text formats.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
