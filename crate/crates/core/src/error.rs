use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix entry ({row}, {col}) = {value} is not a finite non-negative real")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rank {rank} exceeds min(rows, cols) = {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("layer {layer} has an empty divergence trace")]
    EmptyTrace { layer: usize },

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("need at least {needed} layers, got {found}")]
    TooFewLayers { needed: usize, found: usize },

    #[error("k = {k} is invalid for {n} points")]
    InvalidK { k: usize, n: usize },

    #[error("label vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} is not below class count {k}")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: expected {expected} fields, found {found}", path.display())]
    Ragged {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{}:{line}: field {field} is negative ({value})", path.display())]
    NegativeEntry {
        path: PathBuf,
        line: usize,
        field: usize,
        value: f64,
    },

    #[error("{}:{line}: field {field} is not a finite number: {token:?}", path.display())]
    NonNumeric {
        path: PathBuf,
        line: usize,
        field: usize,
        token: String,
    },

    #[error("{}: malformed CSV: {message}", path.display())]
    Csv { path: PathBuf, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed PGM header: {0}")]
    PgmHeader(String),

    #[error("truncated PGM payload: expected {expected} samples, found {found}")]
    PgmTruncated { expected: usize, found: usize },

    #[error("unsupported audio: {0}")]
    UnsupportedAudio(String),

    #[error("wav decode error: {0}")]
    Wav(#[from] hound::Error),

    #[error("sample {sample} has {found} features, expected {expected}")]
    FeatureMismatch {
        sample: String,
        expected: usize,
        found: usize,
    },

    #[error("label {0:?} is not one of the declared classes")]
    UnknownLabel(String),
}

impl Error {
    /// True for failures caused by input files rather than configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Ragged { .. }
                | Error::NegativeEntry { .. }
                | Error::NonNumeric { .. }
                | Error::Csv { .. }
                | Error::EmptyInput(_)
                | Error::PgmHeader(_)
                | Error::PgmTruncated { .. }
                | Error::UnsupportedAudio(_)
                | Error::Wav(_)
                | Error::FeatureMismatch { .. }
                | Error::UnknownLabel(_)
        )
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::RankTooLarge { .. }
                | Error::TooFewLayers { .. }
                | Error::InvalidK { .. }
        )
    }
}
