use thiserror::Error;

/// Errors raised by the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("covariance is indefinite (min eigenvalue {min_eigenvalue:.3e}, trace {trace:.3e})")]
    Indefinite { min_eigenvalue: f64, trace: f64 },

    #[error("matrix is singular after diagonal loading (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("operation requires Rayleigh fading but link (ap {ap}, ue {ue}) has a LoS component")]
    RicianNotSupported { ap: usize, ue: usize },

    #[error("precoder for ap {ap}, ue {ue} has zero average power")]
    ZeroPrecoderPower { ap: usize, ue: usize },

    #[error("report has no rows")]
    EmptyReport,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
