//! Classified command failures and their exit codes.

use std::fmt;

use anchorkit::lenskit::LensError;
use anchorkit::probekit::ProbeError;
use anchorkit::scorer::ScoreError;
use anchorkit::shapegen::ShapeError;
use anchorkit::taskforge::TaskError;
use anchorkit::tensorstore::StoreError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Anything not covered below.
    Runtime,
    /// Invalid config file or flag values.
    Config,
    /// Missing or unreadable inputs.
    Path,
    /// Malformed or corrupted input data.
    Format,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Runtime => 1,
            FailureKind::Config => 2,
            FailureKind::Path => 3,
            FailureKind::Format => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(FailureKind::Config, message)
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    /// One JSON object, for `--json-errors`.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind,
            "exit_code": self.kind.exit_code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} error: {}", self.kind, self.message)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        let kind = match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => FailureKind::Path,
            _ => FailureKind::Runtime,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new(FailureKind::Format, e.to_string())
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io(io) => io.into(),
            other => Failure::new(FailureKind::Format, other.to_string()),
        }
    }
}

impl From<ShapeError> for Failure {
    fn from(e: ShapeError) -> Self {
        match e {
            ShapeError::Io(io) => io.into(),
            ShapeError::InvalidParameter { .. } | ShapeError::UnknownShape { .. } => Failure::config(e.to_string()),
            other => Failure::new(FailureKind::Runtime, other.to_string()),
        }
    }
}

impl From<TaskError> for Failure {
    fn from(e: TaskError) -> Self {
        match e {
            TaskError::Shape(s) => s.into(),
            TaskError::Config(_) | TaskError::UnknownNameSet(_) => Failure::config(e.to_string()),
            other => Failure::new(FailureKind::Runtime, other.to_string()),
        }
    }
}

impl From<ProbeError> for Failure {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Store(s) => s.into(),
            ProbeError::LayerCountMismatch { .. } | ProbeError::DimMismatch(..) => {
                Failure::new(FailureKind::Format, e.to_string())
            }
            other => Failure::new(FailureKind::Runtime, other.to_string()),
        }
    }
}

impl From<LensError> for Failure {
    fn from(e: LensError) -> Self {
        match e {
            LensError::Store(s) => s.into(),
            LensError::UnknownNormMode(_) => Failure::config(e.to_string()),
            LensError::DimMismatch { .. } | LensError::LayerCount { .. } | LensError::EntityCount { .. } => {
                Failure::new(FailureKind::Format, e.to_string())
            }
            other => Failure::new(FailureKind::Runtime, other.to_string()),
        }
    }
}

impl From<ScoreError> for Failure {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::Io(io) => io.into(),
            ScoreError::UnknownFormat(_) => Failure::config(e.to_string()),
            ScoreError::Record { .. } | ScoreError::Table(_) | ScoreError::DuplicateId(_) | ScoreError::MixedModes(..) => {
                Failure::new(FailureKind::Format, e.to_string())
            }
            ScoreError::Empty => Failure::new(FailureKind::Runtime, e.to_string()),
        }
    }
}
