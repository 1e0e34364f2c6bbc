use std::io;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed image: {0}")]
    Format(String),
    #[error("unsupported maxval {0}, only 8-bit (maxval 255) images are supported")]
    UnsupportedDepth(u32),
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Length { expected: usize, actual: usize },
    #[error("STL-10 container length {0} is not a multiple of 27648")]
    Container(usize),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("enumeration too large: {0}")]
    Capacity(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
