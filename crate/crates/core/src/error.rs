use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SpaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SpaError {
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error("missing data at channel indices {indices:?}; prediction refused")]
    MissingData { indices: Vec<usize> },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// No direction separates the two classes (the correlation vector is zero).
    #[error("degenerate objective: correlation vector is identically zero")]
    DegenerateObjective,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("pipeline order: {0}")]
    PipelineOrder(String),

    #[error("undefined metric: {0} has a zero denominator")]
    UndefinedMetric(&'static str),

    #[error("fold degenerate: {0}")]
    FoldDegenerate(String),

    #[error("{path}: unsupported file version {found:?} (expected {expected:?})")]
    Version {
        path: String,
        found: String,
        expected: String,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<SpaError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SpaError {
    pub(crate) fn parse(path: &str, row: usize, message: impl Into<String>) -> Self {
        SpaError::Parse {
            path: path.to_string(),
            row,
            message: message.into(),
        }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        SpaError::Parameter(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SpaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Name of the pipeline stage that failed, if the error was tagged with one.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            SpaError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    /// The innermost error, with stage tags removed.
    pub fn root(&self) -> &SpaError {
        match self {
            SpaError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| SpaError::Stage {
            stage,
            source: Box::new(source),
        })
    }
}
