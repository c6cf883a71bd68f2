use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("coordinate {index} = {value} lies outside [-{bound}, {bound}]")]
    OutOfRange { index: usize, value: f64, bound: f64 },

    #[error("empty range: lo = {lo} > hi = {hi}")]
    EmptyRange { lo: i64, hi: i64 },

    #[error("no flip probability in [1/2, 1) satisfies the privacy constraint at epsilon1 = {epsilon1}")]
    InfeasibleBudget { epsilon1: f64 },

    #[error("normalizing factor is not positive (log-odds {log_odds}, log ratio {log_ratio})")]
    NonPositiveNormalizer { log_odds: f64, log_ratio: f64 },

    #[error("enumeration of {levels}^{dim} outcomes exceeds the cap of {cap}")]
    EnumerationTooLarge { levels: usize, dim: usize, cap: usize },

    #[error("non-finite gradient from client {client} in round {round}")]
    NonFiniteGradient { client: usize, round: usize },

    #[error("message from round {found} mixed into round {expected}")]
    MixedRound { expected: usize, found: usize },

    #[error("no client estimates were received")]
    NoEstimates,

    #[error("{path}: bad IDX magic number {magic:#010x}")]
    BadMagic { path: PathBuf, magic: u32 },

    #[error("{path}: truncated IDX file (needed {needed} bytes, found {found})")]
    Truncated { path: PathBuf, needed: usize, found: usize },

    #[error("{path}: label {label} at position {position} is outside 0..{classes}")]
    LabelOutOfRange { path: PathBuf, position: usize, label: u8, classes: usize },

    #[error("dataset file {0} does not exist")]
    MissingDataset(PathBuf),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed wire data: {0}")]
    Wire(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
