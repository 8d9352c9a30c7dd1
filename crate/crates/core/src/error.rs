use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation hit a pole of its closed form (zero distance, zero FOV).
    #[error("singularity: {0}")]
    Singular(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A least-squares problem did not have enough independent columns.
    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("noise calibration failed: {0}")]
    Calibration(String),

    #[error("model has not been trained")]
    Untrained,

    #[error("detection failed: {0}")]
    Detection(String),

    /// The FFT matvec left an imaginary residue larger than rounding allows.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
