//! Perturbation explanations of one classification for one segmentation.
//!
//! Segments are switched off at random (filled with `mask_fill`), the classifier
//! scores every perturbed image, and a kernel-weighted ridge regression of the
//! target-class probability on the on/off bits yields one weight per segment.

mod ridge;

pub use ridge::{fit_weighted_ridge, RidgeError, RidgeFit};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{predict_batch, Classifier, ClassifierError};
use crate::imaging::{FloatGrid, Image, Rgb};
use crate::rng::SplitMix64;
use crate::segmentation::{segment_sizes, SegmentMap};

#[derive(Debug, Error)]
pub enum LimeError {
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("segmentation has {0} segment(s); at least 2 are needed")]
    DegenerateSegmentation(usize),
    #[error("target class {target} out of range for {classes} classes")]
    TargetClass { target: usize, classes: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mask length {got}, expected {expected}")]
    MaskLength { got: usize, expected: usize },
    #[error("image is {0}x{1} but segment map is {2}x{3}")]
    Dimensions(usize, usize, usize, usize),
    #[error(transparent)]
    Ridge(#[from] RidgeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    /// Perturbed images per explanation, counting the unperturbed one.
    pub n_samples: usize,
    pub kernel_width: f64,
    pub ridge_alpha: f64,
    pub mask_fill: Rgb,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            n_samples: 200,
            kernel_width: 0.25,
            ridge_alpha: 1.0,
            mask_fill: [0, 0, 0],
        }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<(), LimeError> {
        if self.n_samples < 2 {
            return Err(LimeError::Config(format!("n_samples {} < 2", self.n_samples)));
        }
        if !(self.kernel_width > 0.0 && self.kernel_width.is_finite()) {
            return Err(LimeError::Config(format!("kernel_width {} must be > 0", self.kernel_width)));
        }
        if !(self.ridge_alpha >= 0.0 && self.ridge_alpha.is_finite()) {
            return Err(LimeError::Config(format!("ridge_alpha {} must be >= 0", self.ridge_alpha)));
        }
        Ok(())
    }
}

/// On/off bits per segment for every perturbed sample. Row 0 keeps every segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationMatrix {
    rows: usize,
    segments: usize,
    bits: Vec<u8>,
}

impl PerturbationMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.segments..(i + 1) * self.segments]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks(self.segments)
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.segments, |i, j| {
            f64::from(self.bits[i * self.segments + j])
        })
    }
}

/// Row 0 all ones; every later bit is the top bit of the next [`SplitMix64`]
/// output seeded with `seed`, drawn in row-major order.
pub fn generate_masks(segments: usize, n_samples: usize, seed: u64) -> PerturbationMatrix {
    assert!(segments >= 1, "need at least one segment");
    let mut rng = SplitMix64::new(seed);
    let mut bits = vec![1u8; segments];
    bits.extend((segments..n_samples * segments).map(|_| u8::from(rng.next_bit())));
    PerturbationMatrix {
        rows: n_samples,
        segments,
        bits,
    }
}

/// Keeps pixels whose segment bit is 1 and fills the rest.
pub fn apply_mask(image: &Image, segmap: &SegmentMap, mask: &[u8], fill: Rgb) -> Result<Image, LimeError> {
    if image.width() != segmap.width() || image.height() != segmap.height() {
        return Err(LimeError::Dimensions(
            image.width(),
            image.height(),
            segmap.width(),
            segmap.height(),
        ));
    }
    if mask.len() != segmap.segment_count() {
        return Err(LimeError::MaskLength {
            got: mask.len(),
            expected: segmap.segment_count(),
        });
    }
    let mut out = image.clone();
    for (p, &label) in out.pixels_mut().iter_mut().zip(segmap.labels()) {
        if mask[label as usize] == 0 {
            *p = fill;
        }
    }
    Ok(out)
}

/// `sqrt(exp(-d^2 / width^2))` with `d` the cosine distance from `mask` to the all-ones mask.
pub fn kernel_weight(mask: &[u8], kernel_width: f64) -> f64 {
    assert!(!mask.is_empty(), "mask must be nonempty");
    let ones = mask.iter().filter(|&&b| b != 0).count();
    let d = 1.0 - (ones as f64 / mask.len() as f64).sqrt();
    (-(d * d) / (kernel_width * kernel_width)).exp().sqrt()
}

/// Per-segment weights for one classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Clamped R² of the surrogate, in [0, 1].
    pub score: f64,
    pub seed: u64,
    pub segmap: SegmentMap,
    pub pixel_grid: FloatGrid,
}

impl Explanation {
    /// Placeholder for segmentations with fewer than two segments: zero weights, zero score.
    pub fn degenerate(segmap: SegmentMap, seed: u64) -> Self {
        let weights = vec![0.0; segmap.segment_count()];
        let pixel_grid = FloatGrid::zeros(segmap.width(), segmap.height());
        Self {
            weights,
            intercept: 0.0,
            score: 0.0,
            seed,
            segmap,
            pixel_grid,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.segmap.segment_count() < 2
    }

    /// Segment with the largest signed weight; ties go to the smaller segment, then the smaller label.
    pub fn most_relevant_segment(&self) -> u32 {
        let sizes = segment_sizes(&self.segmap);
        let mut best = 0usize;
        for j in 1..self.weights.len() {
            let (wj, wb) = (self.weights[j], self.weights[best]);
            if wj > wb || (wj == wb && sizes[j] < sizes[best]) {
                best = j;
            }
        }
        best as u32
    }
}

fn lift_weights(segmap: &SegmentMap, weights: &[f64]) -> FloatGrid {
    let values = segmap.labels().iter().map(|&l| weights[l as usize]).collect();
    FloatGrid::new(segmap.width(), segmap.height(), values).expect("weights are finite")
}

/// Explains `classifier`'s probability for `target_class` on `image` over the segments of `segmap`.
pub fn explain(
    image: &Image,
    segmap: &SegmentMap,
    classifier: &dyn Classifier,
    target_class: usize,
    cfg: &LimeConfig,
    seed: u64,
) -> Result<Explanation, LimeError> {
    cfg.validate()?;
    if target_class >= classifier.class_count() {
        return Err(LimeError::TargetClass {
            target: target_class,
            classes: classifier.class_count(),
        });
    }
    let k = segmap.segment_count();
    if k < 2 {
        return Err(LimeError::DegenerateSegmentation(k));
    }
    let masks = generate_masks(k, cfg.n_samples, seed);
    let perturbed = masks
        .iter_rows()
        .map(|row| apply_mask(image, segmap, row, cfg.mask_fill))
        .collect::<Result<Vec<_>, _>>()?;
    let y: Vec<f64> = predict_batch(classifier, &perturbed)?
        .iter()
        .map(|p| p.probabilities()[target_class])
        .collect();
    let w: Vec<f64> = masks
        .iter_rows()
        .map(|row| kernel_weight(row, cfg.kernel_width))
        .collect();
    let fit = fit_weighted_ridge(&masks.to_matrix(), &y, &w, cfg.ridge_alpha)?;
    let pixel_grid = lift_weights(segmap, &fit.coefficients);
    Ok(Explanation {
        weights: fit.coefficients,
        intercept: fit.intercept,
        score: fit.r_squared.clamp(0.0, 1.0),
        seed,
        segmap: segmap.clone(),
        pixel_grid,
    })
}

/// Three minimization objectives, each in [0, 1]:
/// `1 - score`, `1 - clamp(largest weight, 0, 1)`, relative area of the most relevant segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalVector(pub [f64; 3]);

impl GoalVector {
    pub const WORST: GoalVector = GoalVector([1.0, 1.0, 1.0]);

    pub fn new(values: [f64; 3]) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64; 3] {
        &self.0
    }

    pub fn in_unit_cube(&self) -> bool {
        self.0.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Fixed-point form with 6 decimals, used to compare fronts.
    pub fn quantized(&self) -> [i64; 3] {
        self.0.map(|v| (v * 1e6).round() as i64)
    }
}

impl std::ops::Index<usize> for GoalVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn goals(expl: &Explanation) -> GoalVector {
    if expl.is_degenerate() {
        return GoalVector::WORST;
    }
    let best = expl.most_relevant_segment();
    let largest = expl.weights[best as usize];
    let area = segment_sizes(&expl.segmap)[best as usize] as f64 / expl.segmap.pixel_count() as f64;
    GoalVector([
        1.0 - expl.score.clamp(0.0, 1.0),
        1.0 - largest.clamp(0.0, 1.0),
        area,
    ])
}
