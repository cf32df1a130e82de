use thiserror::Error;

/// Errors raised by the numerical kernels, solvers and persistence layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: expected {expected} values, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shell index {q} outside [{min}, {max}]")]
    ShellOutOfRange { q: i32, min: i32, max: i32 },

    #[error("velocity is not certified divergence-free (max |div v| = {divergence:e}, max |v| = {magnitude:e})")]
    NotDivergenceFree { divergence: f64, magnitude: f64 },

    #[error("CFL violation at t = {t}: max|v| = {max_velocity}, dt = {dt} exceeds {limit}")]
    Cfl {
        t: f64,
        max_velocity: f64,
        dt: f64,
        limit: f64,
    },

    #[error("solution became non-finite at t = {t}")]
    Blowup { t: f64 },

    #[error("history is empty")]
    EmptyHistory,

    #[error("outside the estimate's hypotheses: {0}")]
    Hypothesis(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
