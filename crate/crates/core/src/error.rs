use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps these onto exit codes: parse and range problems are user
/// input errors, cap violations are resource errors, and `Consistency`
/// marks a failed internal identity that must never be silently absorbed.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("invalid parameter in `{atom}`: {msg}")]
    Range { atom: String, msg: String },

    #[error("{what}: size {size} exceeds cap {cap}")]
    CapExceeded { what: String, size: String, cap: String },

    #[error("invalid sequence spec: {0}")]
    Spec(String),

    #[error("instantiation at n={n} failed: {msg}")]
    Instantiation { n: u64, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn cap(what: impl Into<String>, size: impl ToString, cap: impl ToString) -> Self {
        Error::CapExceeded {
            what: what.into(),
            size: size.to_string(),
            cap: cap.to_string(),
        }
    }
}
