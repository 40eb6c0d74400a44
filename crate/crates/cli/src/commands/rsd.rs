use std::path::{Path, PathBuf};

use evolime_core::analysis::{pixel_rsd, sweep_csv, threshold_sweep, HeatMapStack, RsdSummary, SweepPoint};
use evolime_core::imaging::{
    read_float_grid, render_grayscale, render_heatmap, save_png, write_float_grid, FloatGrid, HeatmapScale,
};
use evolime_core::moo::RunRecord;
use serde::Serialize;

use super::{ensure_dir, write_json, write_text};
use crate::CliError;

/// RSD values at or above this render black.
pub const RSD_DISPLAY_CAP: f64 = 1.0;

fn find_runs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut found = Vec::new();
    for p in inputs {
        if p.is_file() {
            found.push(p.clone());
        } else if p.join("run.json").is_file() {
            found.push(p.join("run.json"));
        } else if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| CliError::io(p, e))?;
            let mut nested: Vec<PathBuf> = entries
                .filter_map(|e| e.ok())
                .map(|e| e.path().join("run.json"))
                .filter(|r| r.is_file())
                .collect();
            if nested.is_empty() {
                return Err(CliError::io(p, "no run records found"));
            }
            nested.sort();
            found.extend(nested);
        } else {
            return Err(CliError::io(p, "no such file or directory"));
        }
    }
    Ok(found)
}

pub fn load_record(path: &Path) -> Result<RunRecord, CliError> {
    let path = if path.is_dir() { path.join("run.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("run record {}: {e}", path.display())))
}

fn load_average(run: &Path, record: &RunRecord) -> Result<FloatGrid, CliError> {
    let rel = record
        .averaged_grid_path
        .as_deref()
        .ok_or_else(|| CliError::Validation(format!("{} names no averaged grid", run.display())))?;
    let base = run.parent().unwrap_or(Path::new("."));
    Ok(read_float_grid(&base.join(rel))?)
}

#[derive(Serialize)]
struct Report<'a> {
    runs: Vec<String>,
    seeds: &'a [u64],
    sd_convention: &'static str,
    display_cap: f64,
    report: RsdSummary,
    sweep: &'a [SweepPoint],
    files: Files,
}

#[derive(Serialize)]
struct Files {
    mean: &'static str,
    sd: &'static str,
    rsd: &'static str,
    excluded: &'static str,
    sweep: &'static str,
    thresholded: Vec<String>,
}

pub struct RsdArtifacts {
    pub report: PathBuf,
    pub sweep: Vec<SweepPoint>,
    pub summary: RsdSummary,
}

/// Loads the averaged grid of every run and writes SD, mean and RSD maps,
/// one thresholded RSD image per sweep threshold, `sweep.csv` and `report.json`.
pub fn rsd_report(
    inputs: &[PathBuf],
    thresholds: &[f64],
    report_threshold: f64,
    out: &Path,
) -> Result<RsdArtifacts, CliError> {
    let runs = find_runs(inputs)?;
    if runs.len() < 2 {
        return Err(CliError::Validation(format!("need at least 2 runs, got {}", runs.len())));
    }
    let mut grids = Vec::new();
    let mut seeds = Vec::new();
    for run in &runs {
        let record = load_record(run)?;
        let grid = load_average(run, &record)?;
        if (grid.width(), grid.height()) != (record.image_width, record.image_height) {
            return Err(CliError::Validation(format!("{}: grid does not match image size", run.display())));
        }
        seeds.push(record.seed);
        grids.push(grid);
    }
    let stack = HeatMapStack::new(grids, seeds)?;
    let report = pixel_rsd(&stack, report_threshold)?;
    let sweep = threshold_sweep(&stack, thresholds)?;

    ensure_dir(out)?;
    let files = Files {
        mean: "mean.evexmap",
        sd: "sd.evexmap",
        rsd: "rsd.evexmap",
        excluded: "rsd_excluded.evexmap",
        sweep: "sweep.csv",
        thresholded: thresholds.iter().map(|t| format!("rsd_t{t}.png")).collect(),
    };
    write_float_grid(&report.mean, &out.join(files.mean))?;
    write_float_grid(&report.sd, &out.join(files.sd))?;
    write_float_grid(&report.rsd, &out.join(files.rsd))?;
    let flags = report.excluded.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect();
    let flags = FloatGrid::new(report.sd.width(), report.sd.height(), flags)?;
    write_float_grid(&flags, &out.join(files.excluded))?;

    save_png(&render_heatmap(&report.mean, HeatmapScale::Auto), &out.join("mean.png"))?;
    let sd_cap = match report.sd.max_abs() {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    save_png(&render_grayscale(&report.sd, sd_cap, None)?, &out.join("sd.png"))?;
    save_png(
        &render_grayscale(&report.rsd, RSD_DISPLAY_CAP, Some(&report.excluded))?,
        &out.join("rsd.png"),
    )?;
    for (t, name) in thresholds.iter().zip(&files.thresholded) {
        let r = pixel_rsd(&stack, *t)?;
        save_png(&render_grayscale(&r.rsd, RSD_DISPLAY_CAP, Some(&r.excluded))?, &out.join(name))?;
    }
    write_text(&out.join(files.sweep), &sweep_csv(&sweep))?;

    let summary = report.summary();
    let report_path = out.join("report.json");
    write_json(
        &report_path,
        &Report {
            runs: runs.iter().map(|r| r.display().to_string()).collect(),
            seeds: stack.seeds(),
            sd_convention: "population",
            display_cap: RSD_DISPLAY_CAP,
            report: summary.clone(),
            sweep: &sweep,
            files,
        },
    )?;
    Ok(RsdArtifacts {
        report: report_path,
        sweep,
        summary,
    })
}

/// `generation,hypervolume,archive_hypervolume,front_size,evaluations`, one row per generation.
pub fn hv_curve_csv(run: &Path) -> Result<String, CliError> {
    let record = load_record(run)?;
    if record.generations.is_empty() {
        return Err(CliError::Validation(format!("{}: record has no generations", run.display())));
    }
    if let Some(w) = record
        .generations
        .windows(2)
        .find(|w| w[1].archive_hypervolume < w[0].archive_hypervolume)
    {
        return Err(CliError::Validation(format!(
            "{}: archive hypervolume decreases at generation {}",
            run.display(),
            w[1].generation
        )));
    }
    let mut out = String::from("generation,hypervolume,archive_hypervolume,front_size,evaluations\n");
    for g in &record.generations {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            g.generation, g.hypervolume, g.archive_hypervolume, g.front_size, g.evaluations
        ));
    }
    Ok(out)
}
