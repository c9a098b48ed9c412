use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;
use spherelet::rng::{child_seed, rng_from_seed};
use spherelet::synth::{add_noise, circle, euler_spiral_sampled, reference_distances, sample_interval, torus_uniform};

use super::{disconnected_warning, estimate, save_sgdm};
use crate::config::{ExperimentConfig, Manifold};
use crate::error::{BenchError, Result};
use crate::report::{ErrorReport, MatrixError};

/// Subsample sweep against a dense-sample reference.
///
/// Per seed, a dense sample of `dense_n` noisy points gets graph-Euclidean
/// distances with `dense_k` neighbors; these serve as the reference. Each
/// subsample size then draws points without replacement from the dense set and
/// compares every estimator with the matching block of the reference.
pub fn run_noisy_sweep(cfg: &ExperimentConfig, save: Option<&Path>) -> Result<ErrorReport> {
    cfg.validate()?;
    let start = Instant::now();
    let dense_n = cfg.sweep.dense_n;
    let results: Vec<(Vec<MatrixError>, Vec<String>)> = cfg
        .seeds
        .par_iter()
        .enumerate()
        .map(|(seed_pos, &seed)| {
            let clean = match cfg.manifold {
                Manifold::EulerSpiral { lo, hi } => euler_spiral_sampled(dense_n, lo, hi, cfg.sampling.into(), seed)?,
                Manifold::Circle { radius } => {
                    circle(&sample_interval(dense_n, 0.0, 2.0 * PI, cfg.sampling.into(), seed)?, radius)?
                }
                Manifold::Torus { major, minor } => torus_uniform(dense_n, major, minor, seed)?,
                Manifold::Ellipses { .. } => return Err(BenchError::config("noisy sweep does not support ellipses")),
            };
            let dense = add_noise(&clean, cfg.noise_sigma, child_seed(seed, 1))?;
            let all: Vec<usize> = (0..dense_n).collect();
            let reference = match reference_distances(&dense, cfg.sweep.dense_k, &all) {
                Ok(r) => r,
                Err(e @ spherelet::Error::Validation(_)) => {
                    return Ok((Vec::new(), vec![format!("seed {seed}: dense reference unusable ({e}); seed excluded")]));
                }
                Err(e) => return Err(e.into()),
            };

            let mut rows = Vec::new();
            let mut warnings = Vec::new();
            for (si, &m) in cfg.sweep.sizes.iter().enumerate() {
                let mut rng = rng_from_seed(child_seed(seed, 2 + si as u64));
                let mut sub = sample(&mut rng, dense_n, m).into_vec();
                sub.sort_unstable();
                let truth = reference.submatrix(&sub)?;
                let cloud = dense.cloud.select(&sub)?;
                let k = cfg.sweep_k(m);
                let group = format!("m={m}");
                let first_row = rows.len();
                let mut mats = Vec::new();
                for &e in &cfg.estimators {
                    let est = estimate(&cloud, e, k, cfg.d, cfg.fit.into())?;
                    let components = est.component_count();
                    if components > 1 {
                        warnings.push(disconnected_warning(&format!("size {m} seed {seed}"), e, components));
                    }
                    rows.push(MatrixError {
                        group: group.clone(),
                        seed,
                        estimator: e,
                        n: m,
                        k,
                        frobenius: truth.frobenius_error(&est)?,
                        components,
                        excluded: false,
                    });
                    mats.push(est);
                }
                if rows[first_row..].iter().any(|r| r.components > 1) {
                    rows[first_row..].iter_mut().for_each(|r| r.excluded = true);
                }
                let last_size = si + 1 == cfg.sweep.sizes.len();
                if let (Some(dir), true, true) = (save, seed_pos == 0, last_size) {
                    save_sgdm(&dir.join("distances_reference.sgdm"), &truth)?;
                    for est in &mats {
                        save_sgdm(&dir.join(format!("distances_{}.sgdm", est.kind().tag())), est)?;
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
