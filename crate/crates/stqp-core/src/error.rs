use thiserror::Error;

/// Errors raised by the checked entry points of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("{0}")]
    Invalid(&'static str),
    #[error("n = {n} exceeds the exact-solver limit of {limit}; use the edge census for larger instances")]
    TooLarge { n: usize, limit: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain { name, value, domain }
}
