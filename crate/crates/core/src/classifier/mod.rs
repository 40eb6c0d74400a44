//! The black-box boundary: anything that maps a batch of images to class probabilities.

mod builtin;
mod external;
pub mod protocol;

pub use builtin::{BlobClassifier, BlobSettings, ConstantClassifier, Region};
pub use external::{ExternalClassifier, ExternalSettings};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::Image;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("failed to start classifier {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("classifier timed out after {0:.1}s")]
    Timeout(f64),
    #[error("protocol violation on line {line}: {reason}")]
    Protocol { line: usize, reason: String },
    #[error("classifier process failed: {0}")]
    Process(String),
    #[error("invalid prediction for image {index}: {reason}")]
    InvalidPrediction { index: usize, reason: String },
    #[error("invalid batch: {0}")]
    Batch(String),
    #[error("invalid classifier configuration: {0}")]
    Spec(String),
}

/// Class probabilities for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    probabilities: Vec<f64>,
}

impl Prediction {
    /// Checks finiteness, the unit interval and that the sum is within 1e-6 of 1.
    pub fn new(probabilities: Vec<f64>) -> Result<Self, String> {
        if probabilities.len() < 2 {
            return Err(format!("{} classes, need at least 2", probabilities.len()));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || !(0.0..=1.0).contains(*p)) {
            return Err(format!("probability {p} outside [0, 1]"));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(format!("probabilities sum to {sum}"));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn class_count(&self) -> usize {
        self.probabilities.len()
    }
}

/// Anything that predicts class probabilities for a batch of equally sized images.
pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;
    fn class_count(&self) -> usize;
    /// Raw predictions, one per image, in order. Use [`predict_batch`] for validation.
    fn predict(&self, images: &[Image]) -> Result<Vec<Prediction>, ClassifierError>;
}

/// Validated batch prediction: checks the batch shape and every returned prediction.
pub fn predict_batch(
    classifier: &dyn Classifier,
    images: &[Image],
) -> Result<Vec<Prediction>, ClassifierError> {
    let first = images
        .first()
        .ok_or_else(|| ClassifierError::Batch("empty batch".into()))?;
    if let Some(i) = images
        .iter()
        .position(|im| im.width() != first.width() || im.height() != first.height())
    {
        return Err(ClassifierError::Batch(format!("image {i} has different dimensions")));
    }
    let preds = classifier.predict(images)?;
    if preds.len() != images.len() {
        return Err(ClassifierError::Batch(format!(
            "{} predictions for {} images",
            preds.len(),
            images.len()
        )));
    }
    for (index, p) in preds.iter().enumerate() {
        if p.class_count() != classifier.class_count() {
            return Err(ClassifierError::InvalidPrediction {
                index,
                reason: format!("{} classes, expected {}", p.class_count(), classifier.class_count()),
            });
        }
    }
    Ok(preds)
}

/// How to obtain a classifier for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassifierSpec {
    BuiltinBlob(BlobSettings),
    BuiltinConstant { probabilities: Vec<f64> },
    External(ExternalSettings),
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::BuiltinBlob(BlobSettings::default())
    }
}

impl ClassifierSpec {
    /// Two-class constant classifier with P(class 1) = `p1`.
    pub fn constant_binary(p1: f64) -> Self {
        ClassifierSpec::BuiltinConstant {
            probabilities: vec![1.0 - p1, p1],
        }
    }

    /// Instantiates the classifier; for the external kind this spawns the process
    /// and completes the handshake.
    pub fn connect(&self) -> Result<Box<dyn Classifier>, ClassifierError> {
        Ok(match self {
            ClassifierSpec::BuiltinBlob(s) => Box::new(BlobClassifier::new(s.clone())),
            ClassifierSpec::BuiltinConstant { probabilities } => {
                Box::new(ConstantClassifier::new(probabilities.clone())?)
            }
            ClassifierSpec::External(s) => Box::new(ExternalClassifier::spawn(s)?),
        })
    }

    /// One-shot convenience: connect, predict, and drop the session.
    pub fn predict_batch(&self, images: &[Image]) -> Result<Vec<Prediction>, ClassifierError> {
        let classifier = self.connect()?;
        predict_batch(classifier.as_ref(), images)
    }
}
