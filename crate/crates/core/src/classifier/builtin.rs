use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifierError, Prediction};
use crate::imaging::{Image, Rgb};

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    /// Centered square of side `side`, shrunk to fit the image.
    pub fn centered(image_width: usize, image_height: usize, side: usize) -> Self {
        let width = side.min(image_width);
        let height = side.min(image_height);
        Self {
            x: (image_width - width) / 2,
            y: (image_height - height) / 2,
            width,
            height,
        }
    }

    /// Intersection with the image bounds.
    fn clipped(&self, w: usize, h: usize) -> Self {
        let x = self.x.min(w);
        let y = self.y.min(h);
        Self {
            x,
            y,
            width: self.width.min(w - x),
            height: self.height.min(h - y),
        }
    }
}

/// Two-class analytic classifier: P(class 1) is a logistic of the fraction of
/// "green" pixels inside a center region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobSettings {
    /// Region to inspect; `None` means the central 32x32 square.
    pub center: Option<Region>,
    /// A pixel matches when green exceeds both red and blue by at least this much.
    pub green_margin: u8,
    /// Logistic gain `a`.
    pub gain: f64,
    /// Logistic offset `b`.
    pub offset: f64,
}

impl Default for BlobSettings {
    fn default() -> Self {
        Self {
            center: None,
            green_margin: 30,
            gain: 10.0,
            offset: 0.2,
        }
    }
}

pub const DEFAULT_CENTER_SIDE: usize = 32;

impl BlobSettings {
    pub fn matches(&self, p: Rgb) -> bool {
        let m = self.green_margin as i32;
        let (r, g, b) = (p[0] as i32, p[1] as i32, p[2] as i32);
        g - r >= m && g - b >= m
    }

    pub fn region_for(&self, image: &Image) -> Region {
        let (w, h) = (image.width(), image.height());
        self.center
            .unwrap_or_else(|| Region::centered(w, h, DEFAULT_CENTER_SIDE))
            .clipped(w, h)
    }

    /// Fraction of region pixels satisfying the color predicate.
    pub fn matching_fraction(&self, image: &Image) -> f64 {
        let r = self.region_for(image);
        if r.width == 0 || r.height == 0 {
            return 0.0;
        }
        let hits = (r.y..r.y + r.height)
            .flat_map(|y| (r.x..r.x + r.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.matches(image.get(x, y)))
            .count();
        hits as f64 / (r.width * r.height) as f64
    }

    pub fn class1_probability(&self, image: &Image) -> f64 {
        let f = self.matching_fraction(image);
        1.0 / (1.0 + (-self.gain * (f - self.offset)).exp())
    }
}

#[derive(Debug, Clone)]
pub struct BlobClassifier {
    settings: BlobSettings,
}

impl BlobClassifier {
    pub fn new(settings: BlobSettings) -> Self {
        Self { settings }
    }

    pub fn settings(&self) -> &BlobSettings {
        &self.settings
    }
}

impl Classifier for BlobClassifier {
    fn name(&self) -> &str {
        "builtin-blob"
    }

    fn class_count(&self) -> usize {
        2
    }

    fn predict(&self, images: &[Image]) -> Result<Vec<Prediction>, ClassifierError> {
        images
            .iter()
            .enumerate()
            .map(|(index, im)| {
                let p1 = self.settings.class1_probability(im);
                Prediction::new(vec![1.0 - p1, p1])
                    .map_err(|reason| ClassifierError::InvalidPrediction { index, reason })
            })
            .collect()
    }
}

/// Ignores its input.
#[derive(Debug, Clone)]
pub struct ConstantClassifier {
    prediction: Prediction,
}

impl ConstantClassifier {
    pub fn new(probabilities: Vec<f64>) -> Result<Self, ClassifierError> {
        let prediction = Prediction::new(probabilities).map_err(ClassifierError::Spec)?;
        Ok(Self { prediction })
    }
}

impl Classifier for ConstantClassifier {
    fn name(&self) -> &str {
        "builtin-constant"
    }

    fn class_count(&self) -> usize {
        self.prediction.class_count()
    }

    fn predict(&self, images: &[Image]) -> Result<Vec<Prediction>, ClassifierError> {
        Ok(vec![self.prediction.clone(); images.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::predict_batch;

    fn logistic(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    #[test]
    fn default_region_is_central_32() {
        let img = Image::filled(96, 96, [0; 3]).unwrap();
        let r = BlobSettings::default().region_for(&img);
        assert_eq!((r.x, r.y, r.width, r.height), (32, 32, 32, 32));
        let small = Image::filled(10, 40, [0; 3]).unwrap();
        let r = BlobSettings::default().region_for(&small);
        assert_eq!((r.x, r.y, r.width, r.height), (0, 4, 10, 32));
    }

    #[test]
    fn zero_matches_gives_logistic_of_offset() {
        let s = BlobSettings::default();
        let img = Image::filled(96, 96, [0; 3]).unwrap();
        let expect = 1.0 / (1.0 + (s.gain * s.offset).exp());
        assert!((s.class1_probability(&img) - expect).abs() < 1e-15);
        assert!((expect - 0.11920292202211755).abs() < 1e-12);
    }

    #[test]
    fn quarter_matching_center() {
        // 64x64 image, central 32x32 region; paint the top-left 16x16 of the region green.
        let img = Image::from_fn(64, 64, |x, y| {
            if (16..32).contains(&x) && (16..32).contains(&y) {
                [10, 200, 10]
            } else {
                [120, 100, 90]
            }
        })
        .unwrap();
        let s = BlobSettings::default();
        // brute-force count over the region
        let mut hits = 0;
        for y in 16..48 {
            for x in 16..48 {
                let [r, g, b] = img.get(x, y);
                if g as i32 - r as i32 >= 30 && g as i32 - b as i32 >= 30 {
                    hits += 1;
                }
            }
        }
        assert_eq!(hits, 256);
        let f = hits as f64 / 1024.0;
        let p1 = s.class1_probability(&img);
        assert!((p1 - logistic(10.0 * (f - 0.2))).abs() < 1e-15);
        assert!((p1 - 0.6225).abs() < 1e-4);
    }

    #[test]
    fn predicate_margin_is_inclusive() {
        let s = BlobSettings::default();
        assert!(s.matches([10, 40, 10]));
        assert!(!s.matches([11, 40, 10]));
        assert!(!s.matches([0, 255, 226]));
    }

    #[test]
    fn concatenated_batch_matches_single_calls() {
        let c = BlobClassifier::new(BlobSettings::default());
        let imgs: Vec<Image> = (0..5u8)
            .map(|k| Image::from_fn(40, 40, |x, y| if (x + y) % (k as usize + 2) == 0 { [0, 200, 0] } else { [9, 9, 9] }).unwrap())
            .collect();
        let batch = predict_batch(&c, &imgs).unwrap();
        for (i, im) in imgs.iter().enumerate() {
            assert_eq!(predict_batch(&c, std::slice::from_ref(im)).unwrap()[0], batch[i]);
        }
    }
}
