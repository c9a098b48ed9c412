//! Files under the output directory.
//!
//! CSV cells hold floats in Rust's shortest round-trip form, so values read
//! back bit-exact and identical runs produce identical bytes.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::report::{AppReport, ErrorReport, Quantiles};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: csv::Error| BenchError::Input(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

/// `errors.csv` and `errors_summary.csv` for global and sweep runs.
pub fn write_errors(dir: &Path, report: &ErrorReport) -> Result<Vec<PathBuf>> {
    let rows: Vec<Vec<String>> = report
        .errors
        .iter()
        .map(|e| {
            let status = if e.excluded {
                "excluded"
            } else {
                "ok"
            };
            vec![
                e.group.clone(),
                e.seed.to_string(),
                e.estimator.to_string(),
                e.n.to_string(),
                e.k.to_string(),
                e.components.to_string(),
                status.into(),
                fmt_opt(e.frobenius),
            ]
        })
        .collect();
    let errors = dir.join("errors.csv");
    write_csv(
        &errors,
        &["group", "seed", "estimator", "n", "k", "components", "status", "frobenius"],
        &rows,
    )?;
    let summary: Vec<Vec<String>> = report
        .summary()
        .into_iter()
        .map(|s| {
            vec![
                s.group,
                s.estimator.to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.sd),
                s.count.to_string(),
                s.excluded.to_string(),
            ]
        })
        .collect();
    let summary_path = dir.join("errors_summary.csv");
    write_csv(&summary_path, &["group", "estimator", "mean", "sd", "count", "excluded"], &summary)?;
    Ok(vec![errors, summary_path])
}

/// `pairs.csv` and `slopes.csv` for local-error runs.
pub fn write_local(dir: &Path, report: &ErrorReport) -> Result<Vec<PathBuf>> {
    let pairs: Vec<Vec<String>> = report
        .pairs
        .iter()
        .map(|p| {
            vec![
                p.seed.to_string(),
                p.index.to_string(),
                fmt_f64(p.gap),
                fmt_f64(p.euclidean),
                fmt_f64(p.spherical),
                fmt_f64(p.spherical_fitted),
            ]
        })
        .collect();
    let pairs_path = dir.join("pairs.csv");
    write_csv(
        &pairs_path,
        &["seed", "index", "gap", "err_euclidean", "err_spherical", "err_spherical_fitted"],
        &pairs,
    )?;
    let slopes: Vec<Vec<String>> = report
        .slopes
        .iter()
        .map(|s| {
            vec![
                s.seed.to_string(),
                s.local.to_string(),
                fmt_opt(s.slope.map(|v| v.slope)),
                fmt_opt(s.slope.map(|v| v.half_width)),
                s.slope.map_or(0, |v| v.pairs).to_string(),
                fmt_f64(s.max_error),
            ]
        })
        .collect();
    let slopes_path = dir.join("slopes.csv");
    write_csv(
        &slopes_path,
        &["seed", "local", "slope", "half_width", "pairs", "max_error"],
        &slopes,
    )?;
    Ok(vec![pairs_path, slopes_path])
}

/// `metrics.csv` (one row per replication and estimator) and `metrics_summary.csv`.
pub fn write_metrics(dir: &Path, report: &AppReport) -> Result<Vec<PathBuf>> {
    let names = report.metric_names();
    let mut header = vec!["replication", "seed", "estimator"];
    header.extend(&names);
    header.push("flagged");
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.replication.to_string(), r.seed.to_string(), r.estimator.to_string()];
            row.extend(r.values.iter().map(|(_, v)| fmt_f64(*v)));
            row.push(r.flagged.clone().unwrap_or_default());
            row
        })
        .collect();
    let metrics = dir.join("metrics.csv");
    write_csv(&metrics, &header, &rows)?;

    let summary: Vec<Vec<String>> = report
        .summary()
        .into_iter()
        .map(|(e, m, q)| {
            let mut row = vec![e.to_string(), m.to_string(), report.flagged(e).to_string()];
            match q {
                Some(Quantiles {
                    min,
                    q1,
                    median,
                    q3,
                    max,
                    mean,
                    count,
                }) => {
                    row.push(count.to_string());
                    row.extend([min, q1, median, q3, max, mean].map(fmt_f64));
                }
                None => {
                    row.push("0".into());
                    row.extend(std::iter::repeat_n(String::new(), 6));
                }
            }
            row
        })
        .collect();
    let summary_path = dir.join("metrics_summary.csv");
    write_csv(
        &summary_path,
        &["estimator", "metric", "flagged", "count", "min", "q1", "median", "q3", "max", "mean"],
        &summary,
    )?;
    Ok(vec![metrics, summary_path])
}

#[derive(Serialize)]
struct Versions {
    spherelet_bench: &'static str,
    spherelet_core: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: String,
    config_hash: String,
    seeds: &'a [u64],
    versions: Versions,
    config: &'a ExperimentConfig,
    files: Vec<String>,
    warnings: &'a [String],
    wall_clock_seconds: f64,
}

pub fn write_manifest(
    dir: &Path,
    cfg: &ExperimentConfig,
    files: &[PathBuf],
    warnings: &[String],
    wall_clock_seconds: f64,
) -> Result<PathBuf> {
    let mut names: Vec<String> = files
        .iter()
        .map(|f| f.strip_prefix(dir).unwrap_or(f).to_string_lossy().replace('\\', "/"))
        .collect();
    names.sort();
    let manifest = Manifest {
        experiment: cfg.experiment.to_string(),
        config_hash: cfg.hash(),
        seeds: &cfg.seeds,
        versions: Versions {
            spherelet_bench: env!("CARGO_PKG_VERSION"),
            spherelet_core: spherelet::VERSION,
        },
        config: cfg,
        files: names,
        warnings,
        wall_clock_seconds,
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
    Ok(path)
}
