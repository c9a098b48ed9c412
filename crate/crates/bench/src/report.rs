//! In-memory results of an experiment, before they are written to disk.

use std::collections::BTreeMap;
use std::time::Duration;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::Estimator;
use crate::error::BenchError;

/// Errors at or below this level are floating-point noise and are left out of slope fits.
pub const SLOPE_ERROR_FLOOR: f64 = 1e-13;

/// Fewest neighbor pairs a local-error run accepts.
pub const MIN_LOCAL_PAIRS: usize = 5;

/// Ordinary least-squares slope of `log error` against `log gap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope {
    pub slope: f64,
    /// Half-width of the 95% confidence interval.
    pub half_width: f64,
    /// Pairs that entered the fit.
    pub pairs: usize,
}

/// Fits the log-log slope over pairs with error above [`SLOPE_ERROR_FLOOR`].
/// `None` when fewer than three pairs remain or all gaps coincide.
pub fn log_log_slope(gaps: &[f64], errors: &[f64]) -> Option<Slope> {
    let pts: Vec<(f64, f64)> = gaps
        .iter()
        .zip(errors)
        .filter(|(g, e)| **g > 0.0 && **e > SLOPE_ERROR_FLOOR)
        .map(|(g, e)| (g.ln(), e.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (rss / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .expect("at least one degree of freedom")
        .inverse_cdf(0.975);
    Some(Slope {
        slope,
        half_width: t * se,
        pairs: n,
    })
}

/// One (group, seed, estimator) matrix error.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixError {
    /// Range like `[0,1]` or subsample size like `m=50`.
    pub group: String,
    pub seed: u64,
    pub estimator: Estimator,
    /// Points in the compared matrices.
    pub n: usize,
    /// Neighborhood size used.
    pub k: usize,
    /// `‖GD − Est‖` over the full matrix; `None` when the estimate is disconnected.
    pub frobenius: Option<f64>,
    /// Connected components of the estimate (1 for `D`).
    pub components: usize,
    /// Set for every estimator of a seed in which some graph was disconnected,
    /// so all estimators are averaged over the same seeds.
    pub excluded: bool,
}

/// Errors of local distances from one base point.
#[derive(Debug, Clone, PartialEq)]
pub struct PairError {
    pub seed: u64,
    pub index: usize,
    /// True geodesic gap `s`.
    pub gap: f64,
    pub euclidean: f64,
    /// Error on the exact osculating sphere.
    pub spherical: f64,
    /// Error on the sphere fitted to the ball.
    pub spherical_fitted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub seed: u64,
    /// `euclidean`, `spherical` or `spherical_fitted`.
    pub local: &'static str,
    pub slope: Option<Slope>,
    pub max_error: f64,
}

/// Mean and sample standard deviation of one group and estimator over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    pub group: String,
    pub estimator: Estimator,
    pub mean: f64,
    pub sd: f64,
    /// Seeds with a connected estimate.
    pub count: usize,
    /// Seeds excluded for disconnection.
    pub excluded: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ErrorReport {
    pub errors: Vec<MatrixError>,
    pub pairs: Vec<PairError>,
    /// Only filled by local-error runs.
    pub slopes: Vec<SlopeRow>,
    pub warnings: Vec<String>,
    pub wall_clock: Duration,
}

impl ErrorReport {
    /// Per-group summaries in first-appearance order of the groups.
    pub fn summary(&self) -> Vec<ErrorSummary> {
        let mut order: Vec<String> = Vec::new();
        let mut cells: BTreeMap<(usize, Estimator), (Vec<f64>, usize)> = BTreeMap::new();
        for e in &self.errors {
            let g = match order.iter().position(|g| *g == e.group) {
                Some(g) => g,
                None => {
                    order.push(e.group.clone());
                    order.len() - 1
                }
            };
            let cell = cells.entry((g, e.estimator)).or_default();
            match e.frobenius {
                Some(v) if !e.excluded => cell.0.push(v),
                _ => cell.1 += 1,
            }
        }
        cells
            .into_iter()
            .map(|((g, estimator), (values, excluded))| {
                let (mean, sd) = mean_sd(&values);
                ErrorSummary {
                    group: order[g].clone(),
                    estimator,
                    mean,
                    sd,
                    count: values.len(),
                    excluded,
                }
            })
            .collect()
    }

    pub fn summary_for(&self, group: &str, estimator: Estimator) -> Option<ErrorSummary> {
        self.summary()
            .into_iter()
            .find(|s| s.group == group && s.estimator == estimator)
    }

    pub fn slope(&self, seed: u64, local: &str) -> Option<&SlopeRow> {
        self.slopes.iter().find(|s| s.seed == seed && s.local == local)
    }
}

/// NaN mean when empty; zero spread for a single value.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Boxplot statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
            count: v.len(),
        })
    }
}

/// One replication of an application run for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct AppRow {
    pub replication: usize,
    pub seed: u64,
    pub estimator: Estimator,
    /// Metric name and value, in a fixed per-task order.
    pub values: Vec<(&'static str, f64)>,
    /// Set when the replication produced a non-finite score and is excluded from summaries.
    pub flagged: Option<String>,
}

impl AppRow {
    pub fn value(&self, metric: &str) -> Option<f64> {
        self.values.iter().find(|(m, _)| *m == metric).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Default)]
pub struct AppReport {
    pub rows: Vec<AppRow>,
    pub warnings: Vec<String>,
    pub wall_clock: Duration,
}

impl AppReport {
    /// Values of one metric for one estimator over unflagged replications.
    pub fn metric(&self, estimator: Estimator, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator && r.flagged.is_none())
            .filter_map(|r| r.value(metric))
            .collect()
    }

    pub fn flagged(&self, estimator: Estimator) -> usize {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator && r.flagged.is_some())
            .count()
    }

    pub fn metric_names(&self) -> Vec<&'static str> {
        self.rows
            .first()
            .map(|r| r.values.iter().map(|(m, _)| *m).collect())
            .unwrap_or_default()
    }

    /// `(estimator, metric, quantiles)` over unflagged replications.
    pub fn summary(&self) -> Vec<(Estimator, &'static str, Option<Quantiles>)> {
        let mut estimators: Vec<Estimator> = self.rows.iter().map(|r| r.estimator).collect();
        estimators.sort_unstable();
        estimators.dedup();
        let mut out = Vec::new();
        for e in estimators {
            for m in self.metric_names() {
                out.push((e, m, Quantiles::of(&self.metric(e, m))));
            }
        }
        out
    }
}

pub(crate) fn too_few_pairs(found: usize) -> BenchError {
    BenchError::Config(format!(
        "the neighborhood ball holds {found} pairs; at least {MIN_LOCAL_PAIRS} are needed to fit a slope (enlarge the radius or n)"
    ))
}
