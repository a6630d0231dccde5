use thiserror::Error;

/// Errors produced by the tracking engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate point configuration")]
    Degenerate,
    #[error("estimation failed: {inliers} inliers, {required} required")]
    EstimationFailed { inliers: usize, required: usize },
    #[error("point projects to the line at infinity")]
    SingularProjection,
    #[error("singular homography")]
    SingularHomography,
    #[error("pose estimation failed: {0}")]
    PoseFailed(&'static str),
    #[error("point behind camera")]
    BehindCamera,
    #[error("too few features: found {found}, need {required}")]
    TooFewFeatures { found: usize, required: usize },
    #[error("too few tracking points: found {found}, need {required}")]
    TooFewPoints { found: usize, required: usize },
    #[error("tracking lost")]
    TrackingLost,
    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
