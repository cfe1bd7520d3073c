use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("block contains no design points")]
    EmptyBlock,
    #[error("no rectangle containing the query point intersects the data")]
    NoFeasibleBlock,
    #[error("declared density bound {bound} looks wrong: calibration acceptance rate {rate:.5} is below {floor:.5}")]
    MisdeclaredDensityBound { bound: f64, rate: f64, floor: f64 },
    #[error("non-vanishing critical mixed derivatives: the limit constant does not factor; use the full sup-inf sampler")]
    MixedDerivativesPresent,
    #[error("rate objective is tied at dimension {0}; the effective dimension is not unique")]
    DegenerateBoundary(usize),
    #[error("noise level must be positive")]
    ZeroNoise,
    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),
    #[error("non-finite value in simulated field")]
    NonFiniteField,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code: 2 for configuration/input errors, 3 for numerical
    /// failures, 1 for everything else (I/O and the like).
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidDesign(_)
            | Error::InvalidProfile(_)
            | Error::InvalidConfig(_)
            | Error::ZeroNoise => 2,
            Error::EmptyBlock
            | Error::NoFeasibleBlock
            | Error::MisdeclaredDensityBound { .. }
            | Error::MixedDerivativesPresent
            | Error::DegenerateBoundary(_)
            | Error::DegenerateFit(_)
            | Error::NonFiniteField => 3,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        }
    }
}
