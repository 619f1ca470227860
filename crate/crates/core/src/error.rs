use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("noise sample {index} has modulus {modulus} which is not below sigma = {sigma}")]
    NoiseBound {
        index: usize,
        modulus: f64,
        sigma: f64,
    },

    #[error("nodes {0} and {1} coincide")]
    DegenerateNodes(usize, usize),

    #[error("rotated nodes collide at step {step}: {detail}")]
    DegenerateRotation { step: f64, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("measurement has no sample at {0}")]
    MissingSample(String),

    #[error("direction {index} is not unit norm (|v| = {norm})")]
    NonUnitDirection { index: usize, norm: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("bisection bracket [{lo}, {hi}] does not straddle the transition")]
    NonBracketing { lo: f64, hi: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
