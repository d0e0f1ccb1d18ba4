use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("ensemble is infeasible: {0}")]
    Infeasible(String),

    #[error("graph construction failed (seed {seed}): {reason}")]
    Construction { seed: u64, reason: String },

    #[error("parity part of the check matrix is singular (rank deficit {deficit})")]
    RankDeficient { deficit: usize },

    #[error("observation has zero probability under both hypotheses (position {position})")]
    ZeroProbabilityObservation { position: usize },

    #[error("density quantization failure: negative mass {mass:e} in check-node output")]
    Quantization { mass: f64 },

    #[error("threshold search endpoints do not bracket (good end converged: {good_converged}, bad end converged: {bad_converged})")]
    NotBracketed {
        good_converged: bool,
        bad_converged: bool,
    },

    #[error("no sweep point has BER below {level:e}")]
    NoCrossing { level: f64 },

    #[error("malformed input in {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
