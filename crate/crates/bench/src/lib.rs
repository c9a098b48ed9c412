//! Benchmark runner for graph-spherical geodesic distances.
//!
//! [`run_experiment`] validates a [`config::ExperimentConfig`], runs it, and
//! writes CSV tables plus `manifest.json` under the configured output
//! directory. The individual runners in [`experiments`] return in-memory
//! reports and can be used without touching the file system.

pub mod config;
pub mod error;
pub mod experiments;
pub mod ingest;
pub mod output;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{Estimator, Experiment, ExperimentConfig};
pub use error::{BenchError, Result};
pub use report::{AppReport, ErrorReport};

#[derive(Debug, Clone)]
pub enum RunReport {
    Errors(ErrorReport),
    Apps(AppReport),
}

impl RunReport {
    pub fn warnings(&self) -> &[String] {
        match self {
            RunReport::Errors(r) => &r.warnings,
            RunReport::Apps(r) => &r.warnings,
        }
    }

    pub fn wall_clock_seconds(&self) -> f64 {
        match self {
            RunReport::Errors(r) => r.wall_clock.as_secs_f64(),
            RunReport::Apps(r) => r.wall_clock.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: RunReport,
    /// Every file written, manifest last.
    pub files: Vec<PathBuf>,
}

/// Runs the experiment and writes its outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.out.as_path();
    guard_input(cfg, dir)?;
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;

    let (report, mut files) = match cfg.experiment {
        Experiment::LocalError => {
            let r = experiments::run_local_error(cfg)?;
            let files = output::write_local(dir, &r)?;
            (RunReport::Errors(r), files)
        }
        Experiment::GlobalError | Experiment::NoisySweep => {
            let r = if cfg.experiment == Experiment::GlobalError {
                experiments::run_global_error(cfg, Some(dir))?
            } else {
                experiments::run_noisy_sweep(cfg, Some(dir))?
            };
            let files = output::write_errors(dir, &r)?;
            (RunReport::Errors(r), files)
        }
        Experiment::Clustering | Experiment::Ckde | Experiment::Regression => {
            let r = match cfg.experiment {
                Experiment::Clustering => experiments::run_clustering(cfg)?,
                Experiment::Ckde => experiments::run_ckde(cfg)?,
                _ => experiments::run_regression(cfg)?,
            };
            let files = output::write_metrics(dir, &r)?;
            (RunReport::Apps(r), files)
        }
    };
    files.extend(list_sgdm(dir)?);
    let manifest = output::write_manifest(dir, cfg, &files, report.warnings(), report.wall_clock_seconds())?;
    files.push(manifest);
    Ok(RunSummary { report, files })
}

/// Refuses output directories that would overwrite the input file.
fn guard_input(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let Some(input) = &cfg.input.path else {
        return Ok(());
    };
    let input = input.canonicalize().map_err(|e| BenchError::io(input, e))?;
    if let Ok(dir) = dir.canonicalize() {
        if input.parent() == Some(dir.as_path()) {
            let name = input.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let reserved = ["manifest.json", "metrics.csv", "metrics_summary.csv", "errors.csv"];
            if reserved.contains(&name) {
                return Err(BenchError::config(format!(
                    "input {} would be overwritten by the outputs; choose another --out",
                    input.display()
                )));
            }
        }
    }
    Ok(())
}

fn list_sgdm(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| BenchError::io(&d, e))? {
            let path = entry.map_err(|e| BenchError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "sgdm") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}
