use std::path::{Path, PathBuf};

use evolime_core::classifier::Classifier;
use evolime_core::imaging::{load_png, render_heatmap, save_png, write_float_grid, Image};
use evolime_core::moo::{evolve, GaConfig, RunRecord};
use rayon::prelude::*;

use super::{ensure_dir, write_json, write_text};
use crate::config::RunConfig;
use crate::CliError;

pub const HV_CSV_HEADER: &str = "generation,hypervolume,front_size,evaluations";

pub struct EvolveSummary {
    pub run_dirs: Vec<(u64, PathBuf)>,
    pub records: Vec<RunRecord>,
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// One evolution per configured seed, seeds in parallel.
///
/// The classifier is connected (and an external one spawned) before any
/// evolution starts, so a broken classifier fails fast.
pub fn evolve_all(cfg: &RunConfig) -> Result<EvolveSummary, CliError> {
    let image_path = cfg.image_path()?;
    let image = load_png(image_path)?;
    let classifier = cfg.classifier.connect()?;
    if cfg.target_class >= classifier.class_count() {
        return Err(CliError::Validation(format!(
            "target class {} out of range for {} classes",
            cfg.target_class,
            classifier.class_count()
        )));
    }
    ensure_dir(&cfg.output_dir)?;
    write_text(&cfg.output_dir.join("config.json"), &cfg.to_json())?;

    let results: Vec<Result<(u64, PathBuf, RunRecord), CliError>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let dir = seed_dir(&cfg.output_dir, seed);
            run_seed(cfg, &image, image_path, classifier.as_ref(), seed, &dir).map(|r| (seed, dir, r))
        })
        .collect();
    let mut summary = EvolveSummary {
        run_dirs: Vec::new(),
        records: Vec::new(),
    };
    for r in results {
        let (seed, dir, record) = r?;
        summary.run_dirs.push((seed, dir));
        summary.records.push(record);
    }
    Ok(summary)
}

fn run_seed(
    cfg: &RunConfig,
    image: &Image,
    image_path: &Path,
    classifier: &dyn Classifier,
    seed: u64,
    dir: &Path,
) -> Result<RunRecord, CliError> {
    let ga = GaConfig { seed, ..cfg.ga.clone() };
    let outcome = evolve(image, classifier, cfg.target_class, &ga, &cfg.lime)?;
    let mut record = outcome.record;

    let front_dir = dir.join("front");
    if front_dir.exists() {
        std::fs::remove_dir_all(&front_dir).map_err(|e| CliError::io(&front_dir, e))?;
    }
    ensure_dir(&front_dir)?;
    for (i, expl) in outcome.front_explanations.iter().enumerate() {
        let rel = format!("front/{i:03}.evexmap");
        write_float_grid(&expl.pixel_grid, &dir.join(&rel))?;
        record.front_grid_paths.push(rel);
    }
    write_float_grid(&outcome.averaged, &dir.join("average.evexmap"))?;
    save_png(&render_heatmap(&outcome.averaged, cfg.heatmap_scale), &dir.join("average.png"))?;
    write_text(&dir.join("hv.csv"), &hv_csv(&record))?;

    record.classifier = Some(cfg.classifier.clone());
    record.image_path = Some(image_path.display().to_string());
    record.averaged_grid_path = Some("average.evexmap".into());
    write_json(&dir.join("run.json"), &record)?;
    Ok(record)
}

fn hv_csv(record: &RunRecord) -> String {
    let mut out = format!("{HV_CSV_HEADER}\n");
    for g in &record.generations {
        out.push_str(&format!("{},{},{},{}\n", g.generation, g.hypervolume, g.front_size, g.evaluations));
    }
    out
}
