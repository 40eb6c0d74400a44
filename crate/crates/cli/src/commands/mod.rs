mod evolve;
mod rsd;

use std::path::{Path, PathBuf};

use evolime_core::imaging::{load_png, overlay_boundaries, render_heatmap, save_png, write_atomic, write_float_grid};
use evolime_core::lime::{explain, goals, GoalVector, LimeError};
use evolime_core::segmentation::{felzenszwalb, SegmentationParams};
use serde::Serialize;

pub use evolve::{evolve_all, EvolveSummary};
pub use rsd::{hv_curve_csv, rsd_report, RsdArtifacts};

use crate::config::RunConfig;
use crate::{Cli, CliError, Command, SingleImage};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    if !cli.seeds.is_empty() {
        cfg.seeds = cli.seeds.clone();
    }
    match cli.command {
        Command::Init => {
            cfg.validate()?;
            let path = cli.out.unwrap_or_else(|| PathBuf::from("evolime.json"));
            write_text(&path, &cfg.to_json())?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Segment(args) => {
            let out = cli.out.unwrap_or_else(|| cfg.output_dir.clone());
            apply_single(&mut cfg, &args)?;
            segment(&cfg, &out)
        }
        Command::Explain(args) => {
            let out = cli.out.unwrap_or_else(|| cfg.output_dir.clone());
            apply_single(&mut cfg, &args)?;
            cfg.validate()?;
            explain_once(&cfg, cfg.seeds[0], &out)
        }
        Command::Evolve { image } => {
            if let Some(image) = image {
                cfg.image = Some(image);
            }
            if let Some(out) = cli.out {
                cfg.output_dir = out;
            }
            cfg.validate()?;
            let summary = evolve_all(&cfg)?;
            for (seed, dir) in &summary.run_dirs {
                println!("seed {seed}: {}", dir.display());
            }
            Ok(())
        }
        Command::Rsd {
            runs,
            thresholds,
            report_threshold,
        } => {
            if !thresholds.is_empty() {
                cfg.rsd_thresholds = thresholds;
            }
            if let Some(t) = report_threshold {
                cfg.rsd_report_threshold = t;
            }
            cfg.validate()?;
            let out = cli.out.unwrap_or_else(|| cfg.output_dir.join("rsd"));
            let artifacts = rsd_report(&runs, &cfg.rsd_thresholds, cfg.rsd_report_threshold, &out)?;
            println!("{}", artifacts.report.display());
            Ok(())
        }
        Command::HvCurve { run } => {
            let csv = hv_curve_csv(&run)?;
            match cli.out {
                Some(path) => write_text(&path, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
    }
}

fn apply_single(cfg: &mut RunConfig, args: &SingleImage) -> Result<(), CliError> {
    if let Some(image) = &args.image {
        cfg.image = Some(image.clone());
    }
    if let Some(t) = args.target_class {
        cfg.target_class = t;
    }
    if args.scale.is_some() || args.sigma.is_some() || args.min_size.is_some() {
        let base = cfg.segmentation;
        cfg.segmentation = SegmentationParams::new(
            args.scale.unwrap_or(base.scale()),
            args.sigma.unwrap_or(base.sigma()),
            args.min_size.unwrap_or(base.min_size() as i64),
        )?;
    }
    Ok(())
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    Ok(write_atomic(path, text.as_bytes())?)
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

/// Writes `segments.evexseg` and `segments.png` (input with boundaries drawn).
pub fn segment(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let image = load_png(cfg.image_path()?)?;
    let segmap = felzenszwalb(&image, &cfg.segmentation);
    ensure_dir(out)?;
    segmap.write(&out.join("segments.evexseg"))?;
    save_png(&overlay_boundaries(&image, &segmap)?, &out.join("segments.png"))?;
    println!("{} segments", segmap.segment_count());
    Ok(())
}

#[derive(Serialize)]
struct ExplanationRecord<'a> {
    image: String,
    seed: u64,
    target_class: usize,
    classifier: &'a str,
    segmentation: SegmentationParams,
    segments: usize,
    score: f64,
    intercept: f64,
    weights: &'a [f64],
    most_relevant_segment: u32,
    goals: GoalVector,
    grid: &'static str,
    segment_map: &'static str,
    heatmap: &'static str,
}

/// Writes `explanation.json`, `explanation.evexmap`, `segments.evexseg` and `heatmap.png`.
pub fn explain_once(cfg: &RunConfig, seed: u64, out: &Path) -> Result<(), CliError> {
    let image_path = cfg.image_path()?;
    let image = load_png(image_path)?;
    let classifier = cfg.classifier.connect()?;
    let segmap = felzenszwalb(&image, &cfg.segmentation);
    let expl = explain(&image, &segmap, classifier.as_ref(), cfg.target_class, &cfg.lime, seed).map_err(
        |e| match e {
            LimeError::DegenerateSegmentation(n) => CliError::Validation(format!(
                "segmentation produced {n} segment(s); try a smaller scale or min_size"
            )),
            other => other.into(),
        },
    )?;
    ensure_dir(out)?;
    let record = ExplanationRecord {
        image: image_path.display().to_string(),
        seed,
        target_class: cfg.target_class,
        classifier: classifier.name(),
        segmentation: cfg.segmentation,
        segments: segmap.segment_count(),
        score: expl.score,
        intercept: expl.intercept,
        weights: &expl.weights,
        most_relevant_segment: expl.most_relevant_segment(),
        goals: goals(&expl),
        grid: "explanation.evexmap",
        segment_map: "segments.evexseg",
        heatmap: "heatmap.png",
    };
    write_float_grid(&expl.pixel_grid, &out.join(record.grid))?;
    segmap.write(&out.join(record.segment_map))?;
    save_png(&render_heatmap(&expl.pixel_grid, cfg.heatmap_scale), &out.join(record.heatmap))?;
    write_json(&out.join("explanation.json"), &record)?;
    println!("score {:.4}, {} segments", expl.score, segmap.segment_count());
    Ok(())
}
