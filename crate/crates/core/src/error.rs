use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel size: {0}")]
    InvalidChannelSize(String),

    #[error("dimension mismatch: expected {expected} subcarriers, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative power {value} at subcarrier {index}")]
    NegativePower { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite coefficient")]
    NonFinite,

    #[error("degenerate polynomial: leading and linear coefficients are both zero")]
    DegeneratePolynomial,

    #[error("empty input")]
    EmptyInput,

    #[error("unbounded inner minimizer: zero power price with positive weighted gain")]
    UnboundedInner,

    #[error("oracle supports at most {max} subcarriers, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
