use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("input shape mismatch: {0}")]
    InputShape(String),
    #[error("frame misuse: expected a {expected} frame cloud")]
    FrameMisuse { expected: &'static str },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown id `{0}`")]
    Lookup(String),
    #[error("invalid operation: {0}")]
    InvalidOperation(String),
    #[error("kind error: {0}")]
    Kind(String),
    #[error("parse error: {0}")]
    Parse(String),
}
