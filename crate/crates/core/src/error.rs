use thiserror::Error;

/// Errors produced by the localization library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A UAV lies on the vertical axis through the evaluation point, so the
    /// azimuth is undefined.
    #[error("degenerate geometry: sensor {sensor} lies on the vertical axis through the point")]
    DegenerateGeometry { sensor: usize },
    #[error("identical points: sensor {sensor} coincides with the evaluated position")]
    IdenticalPoints { sensor: usize },
    #[error("invalid elevation {0} rad: must lie strictly inside (-pi/2, pi/2)")]
    InvalidElevation(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("length mismatch: {measurements} measurements for {uavs} UAVs")]
    LengthMismatch { measurements: usize, uavs: usize },
    #[error("insufficient sensors: M = {0}, at least M >= 2 is required")]
    InsufficientSensors(usize),
    #[error("rank-deficient normal matrix (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },
    #[error("total least squares solution at infinity (homogeneous coordinate {0:.3e})")]
    DegenerateTls(f64),
    #[error("tangent singularity at sensor {sensor}: angle too close to +-pi/2")]
    TangentSingularity { sensor: usize },
    #[error("zero noise variance: {0}")]
    ZeroNoise(&'static str),
    #[error("singular Fisher information (condition number {condition:.3e})")]
    SingularFisher { condition: f64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
