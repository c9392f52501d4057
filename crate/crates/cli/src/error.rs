use omnidepth::aha::AhaError;
use omnidepth::fusion::FusionError;
use omnidepth::geometry::GeometryError;
use omnidepth::io::FormatError;
use omnidepth::loss::LossError;
use omnidepth::metrics::MetricsError;
use omnidepth::scene::SceneError;
use std::fmt;

/// Exit-code table: 2 config/data, 3 I/O, 4 shape, 5 empty mask.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Shape(String),
    EmptyMask(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Shape(_) => 4,
            CliError::EmptyMask(_) => 5,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        CliError::Shape(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Shape(m) => write!(f, "{m}"),
            CliError::EmptyMask(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::RasterMismatch { .. } | GeometryError::BadGrid { .. } => {
                CliError::Shape(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::GridMismatch(..) => CliError::Shape(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AhaError> for CliError {
    fn from(e: AhaError) -> Self {
        match e {
            AhaError::FrameCount { .. } | AhaError::BadFrameSize { .. } => {
                CliError::Shape(e.to_string())
            }
            AhaError::Checkpoint(m) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::EmptyMask => CliError::EmptyMask(e.to_string()),
            MetricsError::ShapeMismatch(_) => CliError::Shape(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<LossError> for CliError {
    fn from(e: LossError) -> Self {
        CliError::Config(e.to_string())
    }
}
