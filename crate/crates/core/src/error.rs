use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A request exceeds a documented capacity (sieve length, transform size, node budget).
    #[error("{what} {requested} exceeds the supported limit {limit}")]
    Capacity {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("{what} = {value} is out of range ({allowed})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        allowed: String,
    },

    #[error("{0}")]
    Domain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn out_of_range(what: &'static str, value: f64, allowed: impl Into<String>) -> Error {
    Error::OutOfRange {
        what,
        value,
        allowed: allowed.into(),
    }
}
