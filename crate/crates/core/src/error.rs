use std::path::PathBuf;

/// Errors produced by the simulator and its analysis tools.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time must be strictly increasing: got {got} after {last}")]
    NonMonotoneTime { last: f64, got: f64 },

    #[error("numerical blow-up at t = {time:.3} s: {what} = {value:e}")]
    BlowUp {
        time: f64,
        what: &'static str,
        value: f64,
    },

    #[error("steering balance violated at t = {time:.3} s: column {column:e}, arm {arm:e} N·m")]
    Residual { time: f64, column: f64, arm: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("batch has no runs")]
    EmptyBatch,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(what: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
