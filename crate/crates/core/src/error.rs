use thiserror::Error;

/// Errors raised by the library. Every public operation validates its
/// preconditions and reports violations through one of these variants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("width mismatch: expected {expected} bits, found {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("unknown {kind} family `{name}`")]
    UnknownFamily { kind: &'static str, name: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} is out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("operation `{0}` needs a tabulated function; this one is predicate-only")]
    NotTabulated(&'static str),

    #[error("{what} has {count} states, over the configured cap of {cap}")]
    CapExceeded {
        what: String,
        count: usize,
        cap: usize,
    },

    #[error("malformed truth-table file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            detail: format!("{p} is not in [0, 1]"),
        })
    }
}

pub(crate) fn nonnegative_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "time",
            detail: format!("{t} is negative or not finite"),
        })
    }
}
