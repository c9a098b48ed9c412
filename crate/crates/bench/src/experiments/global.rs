use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use spherelet::distance::DistanceMatrix;
use spherelet::synth::{circle, euler_spiral_sampled, sample_interval, ManifoldSample};

use super::{disconnected_warning, estimate, range_label, save_sgdm};
use crate::config::{ExperimentConfig, Manifold};
use crate::error::{BenchError, Result};
use crate::report::{ErrorReport, MatrixError};

struct Group {
    label: String,
    manifold: Manifold,
}

fn groups(cfg: &ExperimentConfig) -> Vec<Group> {
    match cfg.manifold {
        Manifold::EulerSpiral { lo, hi } => {
            let ranges = if cfg.global.ranges.is_empty() {
                vec![[lo, hi]]
            } else {
                cfg.global.ranges.clone()
            };
            ranges
                .into_iter()
                .map(|[a, b]| Group {
                    label: range_label(a, b),
                    manifold: Manifold::EulerSpiral { lo: a, hi: b },
                })
                .collect()
        }
        ref m => vec![Group {
            label: "full".into(),
            manifold: m.clone(),
        }],
    }
}

fn generate(cfg: &ExperimentConfig, manifold: &Manifold, seed: u64) -> Result<ManifoldSample> {
    match *manifold {
        Manifold::EulerSpiral { lo, hi } => Ok(euler_spiral_sampled(cfg.n, lo, hi, cfg.sampling.into(), seed)?),
        Manifold::Circle { radius } => {
            Ok(circle(&sample_interval(cfg.n, 0.0, 2.0 * PI, cfg.sampling.into(), seed)?, radius)?)
        }
        _ => Err(BenchError::config("global error needs analytic ground truth")),
    }
}

/// Frobenius errors of every selected estimator against the analytic geodesics,
/// per range and seed.
///
/// With `save` set, the matrices of the first replication are written there as
/// `distances_{kind}.sgdm`, and with `save_all_distances` every replication goes
/// under `distances/`.
pub fn run_global_error(cfg: &ExperimentConfig, save: Option<&Path>) -> Result<ErrorReport> {
    cfg.validate()?;
    let start = Instant::now();
    let groups = groups(cfg);
    let jobs: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..cfg.seeds.len()).map(move |s| (g, s)))
        .collect();
    let results: Vec<(Vec<MatrixError>, Vec<String>)> = jobs
        .par_iter()
        .map(|&(g, s)| {
            let group = &groups[g];
            let seed = cfg.seeds[s];
            let sample = generate(cfg, &group.manifold, seed)?;
            let truth = sample.ground_truth.as_ref().expect("generator has ground truth");
            let mut rows = Vec::new();
            let mut warnings = Vec::new();
            let mut mats: Vec<DistanceMatrix> = Vec::new();
            for &e in &cfg.estimators {
                let m = estimate(&sample.cloud, e, cfg.k, cfg.d, cfg.fit.into())?;
                let components = m.component_count();
                if components > 1 {
                    warnings.push(disconnected_warning(&format!("range {} seed {seed}", group.label), e, components));
                }
                rows.push(MatrixError {
                    group: group.label.clone(),
                    seed,
                    estimator: e,
                    n: cfg.n,
                    k: cfg.k,
                    frobenius: truth.frobenius_error(&m)?,
                    components,
                    excluded: false,
                });
                mats.push(m);
            }
            if rows.iter().any(|r| r.components > 1) {
                rows.iter_mut().for_each(|r| r.excluded = true);
            }
            if let Some(dir) = save {
                let mut targets = Vec::new();
                if g == 0 && s == 0 {
                    targets.push(dir.to_path_buf());
                }
                if cfg.global.save_all_distances {
                    targets.push(dir.join("distances").join(format!("range{g}_seed{seed}")));
                }
                for prefix in targets {
                    for m in std::iter::once(truth).chain(&mats) {
                        save_sgdm(&prefix.join(format!("distances_{}.sgdm", m.kind().tag())), m)?;
                    }
                }
            }
            Ok((rows, warnings))
        })
        .collect::<Result<_>>()?;

    let mut report = ErrorReport::default();
    for (rows, warnings) in results {
        report.errors.extend(rows);
        report.warnings.extend(warnings);
    }
    report.wall_clock = start.elapsed();
    Ok(report)
}
