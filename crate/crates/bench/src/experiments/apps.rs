use std::time::Instant;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use spherelet::apps::{
    bandwidth_cv, clustering_metrics, conditional_log_density, k_medoids_restarts, kernel_regression,
    BandwidthGrid, KernelBandwidths, SelectedBandwidth,
};
use spherelet::distance::{euclidean_distances_to, DistanceMatrix, GeodesicEstimator, LocalParams};
use spherelet::geometry::PointCloud;
use spherelet::rng::{child_seed, rng_from_seed};
use spherelet::synth::{add_noise, concentric_ellipses, euler_spiral_sampled};
use spherelet::Error as CoreError;

use super::estimate;
use crate::config::{Estimator, ExperimentConfig, Manifold};
use crate::error::{BenchError, Result};
use crate::ingest::{ingest_csv, Dataset};
use crate::report::{AppReport, AppRow};

/// Finite stand-in for unreachable pairs: ten times the largest finite distance.
///
/// k-medoids needs finite dissimilarities; this keeps separate components far
/// apart without letting one of them dominate the cost.
pub fn unreachable_penalty(m: &DistanceMatrix) -> f64 {
    let top = m.max_finite();
    10.0 * if top > 0.0 { top } else { 1.0 }
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<Option<Dataset>> {
    cfg.input
        .path
        .as_ref()
        .map(|p| ingest_csv(p, &cfg.input))
        .transpose()
}

/// k-medoids on every selected estimator's distances, scored against the true labels.
pub fn run_clustering(cfg: &ExperimentConfig) -> Result<AppReport> {
    cfg.validate()?;
    let start = Instant::now();
    let dataset = load_dataset(cfg)?;
    let per_rep: Vec<(Vec<AppRow>, Vec<String>)> = cfg
        .seeds
        .par_iter()
        .enumerate()
        .map(|(rep, &seed)| {
            let (cloud, truth) = match &dataset {
                Some(d) => (d.cloud.clone(), d.label_codes().expect("validated label column")),
                None => {
                    let Manifold::Ellipses { eccentricity, scale_ratio } = cfg.manifold else {
                        return Err(BenchError::config("synthetic clustering uses the ellipses generator"));
                    };
                    let e = concentric_ellipses(cfg.n / 2, eccentricity, cfg.noise_sigma, scale_ratio, cfg.sampling.into(), seed)?;
                    (e.cloud, e.labels.expect("ellipses are labeled"))
                }
            };
            if cfg.clusters > cloud.len() {
                return Err(BenchError::Config(format!("K = {} exceeds the {} points", cfg.clusters, cloud.len())));
            }
            let mut rows = Vec::new();
            let mut warnings = Vec::new();
            for &e in &cfg.estimators {
                let dist = estimate(&cloud, e, cfg.k, cfg.d, cfg.fit.into())?;
                let components = dist.component_count();
                let dist = if dist.all_finite() {
                    dist
                } else {
                    warnings.push(format!(
                        "replication {rep}: {e} graph has {components} components; unreachable pairs set to {:e}",
                        unreachable_penalty(&dist)
                    ));
                    dist.with_unreachable_as(unreachable_penalty(&dist))?
                };
                let fit = k_medoids_restarts(&dist, cfg.clusters, child_seed(seed, 100), cfg.apps.restarts, cfg.apps.max_iter)?;
                let s = clustering_metrics(&truth, &fit.labels)?;
                rows.push(AppRow {
                    replication: rep,
                    seed,
                    estimator: e,
                    values: vec![
                        ("ari", s.ari),
                        ("nmi", s.nmi),
                        ("homogeneity", s.homogeneity),
                        ("completeness", s.completeness),
                        ("v_measure", s.v_measure),
                        ("fms", s.fms),
                        ("cost", fit.final_cost),
                        ("components", components as f64),
                    ],
                    flagged: None,
                });
            }
            Ok((rows, warnings))
        })
        .collect::<Result<_>>()?;
    Ok(collect(per_rep, start))
}

/// One replication's train/test data with responses.
struct Split {
    train: PointCloud,
    train_y: Vec<f64>,
    test: PointCloud,
    test_y: Vec<f64>,
}

fn split(cfg: &ExperimentConfig, dataset: Option<&Dataset>, seed: u64) -> Result<Split> {
    let (cloud, y) = match dataset {
        Some(d) => (d.cloud.clone(), d.responses.clone().expect("validated response column")),
        None => {
            let Manifold::EulerSpiral { lo, hi } = cfg.manifold else {
                return Err(BenchError::config("synthetic responses use the euler_spiral generator"));
            };
            let clean = euler_spiral_sampled(cfg.n, lo, hi, cfg.sampling.into(), seed)?;
            let noisy = add_noise(&clean, cfg.noise_sigma, child_seed(seed, 7))?;
            let mut rng = rng_from_seed(child_seed(seed, 8));
            let y = noisy
                .params
                .iter()
                .map(|p| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    (2.0 * p[0]).sin() + cfg.apps.response_sigma * e
                })
                .collect();
            (noisy.cloud, y)
        }
    };
    let n = cloud.len();
    let n_train = (cfg.apps.train_fraction * n as f64).round() as usize;
    if n_train <= cfg.k || n_train == n || n_train < cfg.apps.folds {
        return Err(BenchError::Config(format!(
            "{n_train} training points out of {n} cannot support k = {} and {} folds",
            cfg.k, cfg.apps.folds
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(child_seed(seed, 9)));
    let (tr, te) = order.split_at(n_train);
    Ok(Split {
        train: cloud.select(tr)?,
        train_y: tr.iter().map(|&i| y[i]).collect(),
        test: cloud.select(te)?,
        test_y: te.iter().map(|&i| y[i]).collect(),
    })
}

/// Training distances plus a way to measure distances from new points.
enum Metric {
    Euclidean(PointCloud, DistanceMatrix),
    Graph(GeodesicEstimator),
}

impl Metric {
    fn build(cfg: &ExperimentConfig, e: Estimator, train: &PointCloud) -> Result<Self> {
        Ok(match e {
            Estimator::D => Metric::Euclidean(train.clone(), DistanceMatrix::euclidean(train)),
            Estimator::EG => Metric::Graph(GeodesicEstimator::fit(train, &LocalParams::euclidean(cfg.k))?),
            Estimator::SG => Metric::Graph(GeodesicEstimator::fit(
                train,
                &LocalParams::spherical(cfg.k, cfg.d, cfg.fit.into()),
            )?),
        })
    }

    fn train(&self) -> &DistanceMatrix {
        match self {
            Metric::Euclidean(_, d) => d,
            Metric::Graph(g) => g.distances(),
        }
    }

    fn to(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Metric::Euclidean(c, _) => euclidean_distances_to(x, c)?,
            Metric::Graph(g) => g.out_of_sample(x)?,
        })
    }
}

fn run_supervised(
    cfg: &ExperimentConfig,
    score: impl Fn(&Split, &Metric, u64) -> Result<(Vec<(&'static str, f64)>, Option<String>)> + Sync,
) -> Result<AppReport> {
    cfg.validate()?;
    let start = Instant::now();
    let dataset = load_dataset(cfg)?;
    let per_rep: Vec<(Vec<AppRow>, Vec<String>)> = cfg
        .seeds
        .par_iter()
        .enumerate()
        .map(|(rep, &seed)| {
            let data = split(cfg, dataset.as_ref(), seed)?;
            let mut rows = Vec::new();
            let mut warnings = Vec::new();
            for &e in &cfg.estimators {
                let metric = Metric::build(cfg, e, &data.train)?;
                let components = metric.train().component_count();
                if components > 1 {
                    warnings.push(format!("replication {rep}: {e} training graph has {components} components"));
                }
                let (values, flagged) = score(&data, &metric, child_seed(seed, 10))?;
                if let Some(why) = &flagged {
                    warnings.push(format!("replication {rep}: {e} flagged: {why}"));
                }
                rows.push(AppRow {
                    replication: rep,
                    seed,
                    estimator: e,
                    values,
                    flagged,
                });
            }
            Ok((rows, warnings))
        })
        .collect::<Result<_>>()?;
    Ok(collect(per_rep, start))
}

/// Nadaraya–Watson regression with a cross-validated bandwidth; held-out RMSE.
pub fn run_regression(cfg: &ExperimentConfig) -> Result<AppReport> {
    let grid = BandwidthGrid::Regression(cfg.apps.regression_grid.values()?);
    run_supervised(cfg, |data, metric, cv_seed| {
        let cv = bandwidth_cv(metric.train(), &data.train_y, &grid, cfg.apps.folds, cv_seed)?;
        let SelectedBandwidth::Regression(h) = cv.best else {
            unreachable!("regression grid selects a regression bandwidth")
        };
        let mut sse = 0.0;
        for (i, x) in data.test.points().enumerate() {
            match kernel_regression(&data.train_y, &metric.to(x)?, h) {
                Ok(m) => sse += (m - data.test_y[i]).powi(2),
                Err(CoreError::NoEffectiveNeighbors) => {
                    return Ok((vec![("rmse", f64::NAN), ("bandwidth", h)], Some(format!("no effective neighbors at test point {i}"))))
                }
                Err(e) => return Err(e.into()),
            }
        }
        let rmse = (sse / data.test_y.len() as f64).sqrt();
        Ok((vec![("rmse", rmse), ("bandwidth", h)], None))
    })
}

/// Conditional kernel density with cross-validated bandwidths; held-out sum of
/// log-likelihood. Replications where some test point gets zero density are flagged.
pub fn run_ckde(cfg: &ExperimentConfig) -> Result<AppReport> {
    let h1 = cfg.apps.h1_grid.values()?;
    let h2 = cfg.apps.h2_grid.values()?;
    let candidates = h1
        .iter()
        .flat_map(|&a| h2.iter().map(move |&b| KernelBandwidths::new(a, b)))
        .collect::<spherelet::Result<Vec<_>>>()?;
    let grid = BandwidthGrid::Conditional(candidates);
    run_supervised(cfg, |data, metric, cv_seed| {
        let cv = bandwidth_cv(metric.train(), &data.train_y, &grid, cfg.apps.folds, cv_seed)?;
        let SelectedBandwidth::Conditional(bw) = cv.best else {
            unreachable!("conditional grid selects a bandwidth pair")
        };
        let mut total = 0.0;
        let mut flagged = None;
        for (i, x) in data.test.points().enumerate() {
            match conditional_log_density(&data.train_y, &metric.to(x)?, data.test_y[i], bw) {
                Ok(v) if v.is_finite() => total += v,
                Ok(_) | Err(CoreError::NoEffectiveNeighbors) => {
                    flagged = Some(format!("zero density at test point {i}"));
                    total = f64::NEG_INFINITY;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok((vec![("loglik_sum", total), ("h1", bw.h1), ("h2", bw.h2)], flagged))
    })
}

fn collect(per_rep: Vec<(Vec<AppRow>, Vec<String>)>, start: Instant) -> AppReport {
    let mut report = AppReport::default();
    for (rows, warnings) in per_rep {
        report.rows.extend(rows);
        report.warnings.extend(warnings);
    }
    report.wall_clock = start.elapsed();
    report
}
