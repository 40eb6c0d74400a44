use std::collections::HashSet;
use std::path::{Path, PathBuf};

use evolime_core::classifier::ClassifierSpec;
use evolime_core::imaging::HeatmapScale;
use evolime_core::lime::LimeConfig;
use evolime_core::moo::GaConfig;
use evolime_core::segmentation::SegmentationParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEEDS: [u64; 4] = [42, 43, 44, 45];

fn default_segmentation() -> SegmentationParams {
    SegmentationParams::new(100.0, 0.5, 50).expect("in range")
}

/// Everything a run needs. Relative paths resolve against the working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub image: Option<PathBuf>,
    pub classifier: ClassifierSpec,
    pub target_class: usize,
    pub ga: GaConfig,
    pub lime: LimeConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Parameters for `segment` and `explain`.
    #[serde(default = "default_segmentation")]
    pub segmentation: SegmentationParams,
    pub heatmap_scale: HeatmapScale,
    pub rsd_thresholds: Vec<f64>,
    pub rsd_report_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            image: None,
            classifier: ClassifierSpec::default(),
            target_class: 1,
            ga: GaConfig::default(),
            lime: LimeConfig::default(),
            seeds: DEFAULT_SEEDS.to_vec(),
            output_dir: PathBuf::from("evolime-out"),
            segmentation: default_segmentation(),
            heatmap_scale: HeatmapScale::Auto,
            rsd_thresholds: vec![0.1, 0.3, 0.5, 0.8],
            rsd_report_threshold: 0.5,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.seeds.is_empty() {
            return bad("no seeds configured".into());
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return bad(format!("seed {dup} listed twice"));
        }
        self.ga.validate()?;
        self.lime.validate()?;
        if self.rsd_thresholds.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("rsd thresholds must be finite and >= 0".into());
        }
        if self.rsd_thresholds.windows(2).any(|w| w[1] < w[0]) {
            return bad("rsd thresholds must be ascending".into());
        }
        if !(self.rsd_report_threshold >= 0.0 && self.rsd_report_threshold.is_finite()) {
            return bad(format!("rsd_report_threshold {} must be >= 0", self.rsd_report_threshold));
        }
        Ok(())
    }

    pub fn image_path(&self) -> Result<&Path, CliError> {
        self.image
            .as_deref()
            .ok_or_else(|| CliError::Usage("no input image: pass --image or set \"image\" in the config".into()))
    }
}
