use thiserror::Error;

/// Errors produced anywhere in the sensing pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("scene has no propagation paths")]
    EmptyScene,
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error("principal component index {index} out of range for {available} subcarriers")]
    InvalidIndex { index: usize, available: usize },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid semantic code: {0}")]
    InvalidCode(String),
    #[error("label {0:?} has no training codes")]
    EmptyClass(String),
    #[error("invalid fading spec: {0}")]
    InvalidSpec(String),
    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },
    #[error("invalid market: {0}")]
    InvalidMarket(String),
    #[error("award coefficients are degenerate (sum {0:e})")]
    DegenerateCoefficients(f64),
    #[error("schema mismatch at line {line}: {message}")]
    SchemaMismatch { line: usize, message: String },
    #[error("config invalid: {0}")]
    ConfigInvalid(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("{stage} failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Tag an error with the pipeline stage that raised it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Whether the error stems from user-supplied configuration.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::ConfigInvalid(_) | Error::InvalidConfig(_) => true,
            Error::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
