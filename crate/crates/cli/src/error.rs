use evolime_core::analysis::AnalysisError;
use evolime_core::classifier::ClassifierError;
use evolime_core::imaging::ImagingError;
use evolime_core::lime::LimeError;
use evolime_core::moo::MooError;
use evolime_core::segmentation::SegmentationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Classifier(ClassifierError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 0 success, 1 usage or validation, 2 classifier failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 1,
            CliError::Classifier(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::NotFound(_)
            | ImagingError::Io { .. }
            | ImagingError::MalformedPng { .. }
            | ImagingError::UnsupportedFormat { .. }
            | ImagingError::MalformedGrid { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SegmentationError> for CliError {
    fn from(e: SegmentationError) -> Self {
        match e {
            SegmentationError::Imaging(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        CliError::Classifier(e)
    }
}

impl From<LimeError> for CliError {
    fn from(e: LimeError) -> Self {
        match e {
            LimeError::Classifier(c) => CliError::Classifier(c),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<MooError> for CliError {
    fn from(e: MooError) -> Self {
        match e {
            MooError::Lime(l) => l.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Validation(e.to_string())
    }
}
