use thiserror::Error;

use crate::partitions::AddressPattern;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A field feature is too small for the sample pitch.
    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("capacity exceeded: {what} requires {required}, only {available} available")]
    Capacity {
        what: &'static str,
        required: u128,
        available: u128,
    },

    #[error("pattern not addressable by a {sub_m}x{sub_n} sub-array: spans {rows} rows and {cols} columns")]
    NotAddressable {
        sub_m: u32,
        sub_n: u32,
        rows: u32,
        cols: u32,
    },

    #[error("catalog miss: no patch for canonical pattern {0}")]
    CatalogMiss(AddressPattern),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// True for errors caused by bad user input (configuration or document
    /// syntax) rather than by the computation itself.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Config(_))
    }
}
