use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate dataset: {0}")]
    Degenerate(String),
    #[error("stratification: stratum {stratum} has only {size} patient(s)")]
    Stratification { stratum: &'static str, size: usize },
    #[error("censoring calibration: {0}")]
    Calibration(String),
    #[error("undefined censoring weight at t = {0}")]
    UndefinedWeight(f64),
    #[error("evaluation range: {0}")]
    Range(String),
    #[error("no comparable pairs")]
    NoComparablePairs,
    #[error("point ({ibs}, {complexity}) lies beyond the reference point")]
    BeyondReference { ibs: f64, complexity: f64 },
    #[error("configuration: {0}")]
    Config(String),
    #[error("expression parse: {0}")]
    Parse(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
}

pub type Result<T> = core::result::Result<T, Error>;
