//! K-fold cross-validation of kernel bandwidths over a precomputed distance matrix.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::kde::{conditional_log_density, kernel_regression, KernelBandwidths};
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvObjective {
    /// Mean held-out `log f̂(yᵢ | xᵢ)`, maximized.
    LogLikelihood,
    /// Held-out root mean squared error of the regression estimate, minimized.
    Rmse,
}

/// Candidate bandwidths, in declared order.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthGrid {
    Conditional(Vec<KernelBandwidths>),
    Regression(Vec<f64>),
}

impl BandwidthGrid {
    pub fn objective(&self) -> CvObjective {
        match self {
            BandwidthGrid::Conditional(_) => CvObjective::LogLikelihood,
            BandwidthGrid::Regression(_) => CvObjective::Rmse,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            BandwidthGrid::Conditional(g) => g.len(),
            BandwidthGrid::Regression(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Geometric grid of `count` regression bandwidths from `lo` to `hi`.
    pub fn geometric(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
            return Err(Error::validation("geometric grid needs 0 < lo ≤ hi and count ≥ 1"));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let ratio = (hi / lo).ln() / (count - 1) as f64;
        Ok((0..count).map(|i| lo * (ratio * i as f64).exp()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectedBandwidth {
    Conditional(KernelBandwidths),
    Regression(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best: SelectedBandwidth,
    pub best_index: usize,
    /// Score of every candidate in grid order; non-finite when some held-out point
    /// had no effective neighbors.
    pub scores: Vec<f64>,
    pub objective: CvObjective,
}

/// Fold of every point: a seeded shuffle dealt round-robin into `folds` groups.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Selects the candidate with the best pooled held-out score. Ties go to the
/// earliest candidate.
pub fn bandwidth_cv(
    dist: &DistanceMatrix,
    y: &[f64],
    grid: &BandwidthGrid,
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    let n = dist.len();
    if y.len() != n {
        return Err(Error::validation(format!(
            "{} responses for a {n}-point distance matrix",
            y.len()
        )));
    }
    if grid.is_empty() {
        return Err(Error::validation("bandwidth grid is empty"));
    }
    if folds < 2 {
        return Err(Error::validation(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::validation(format!(
            "{folds} folds for {n} points leaves a fold without training data"
        )));
    }
    match grid {
        BandwidthGrid::Conditional(g) => g.iter().try_for_each(|b| b.validate())?,
        BandwidthGrid::Regression(g) => {
            if g.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
                return Err(Error::validation("regression bandwidths must be positive"));
            }
        }
    }

    let fold = fold_assignment(n, folds, seed);
    let mut train_sets: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (f, train) in train_sets.iter_mut().enumerate() {
        train.extend((0..n).filter(|&i| fold[i] != f));
        if train.is_empty() {
            return Err(Error::validation(format!("fold {f} has no training points")));
        }
    }

    let held_out = |i: usize| -> (Vec<f64>, Vec<f64>) {
        let train = &train_sets[fold[i]];
        let d = train.iter().map(|&j| dist.get(i, j)).collect();
        let ty = train.iter().map(|&j| y[j]).collect();
        (d, ty)
    };

    let objective = grid.objective();
    let scores: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|c| -> Result<f64> {
            let mut acc = 0.0;
            for i in 0..n {
                let (d, ty) = held_out(i);
                let value = match grid {
                    BandwidthGrid::Conditional(g) => conditional_log_density(&ty, &d, y[i], g[c]),
                    BandwidthGrid::Regression(g) => {
                        kernel_regression(&ty, &d, g[c]).map(|m| (m - y[i]) * (m - y[i]))
                    }
                };
                match value {
                    Ok(v) => acc += v,
                    Err(Error::NoEffectiveNeighbors) => {
                        return Ok(match objective {
                            CvObjective::LogLikelihood => f64::NEG_INFINITY,
                            CvObjective::Rmse => f64::INFINITY,
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(match objective {
                CvObjective::LogLikelihood => acc / n as f64,
                CvObjective::Rmse => (acc / n as f64).sqrt(),
            })
        })
        .collect::<Result<_>>()?;

    let mut best_index = None;
    for (c, &s) in scores.iter().enumerate() {
        if s.is_nan() || s.is_infinite() {
            continue;
        }
        let better = match best_index {
            None => true,
            Some(b) => match objective {
                CvObjective::LogLikelihood => s > scores[b],
                CvObjective::Rmse => s < scores[b],
            },
        };
        if better {
            best_index = Some(c);
        }
    }
    let best_index = best_index.ok_or(Error::NoEffectiveNeighbors)?;
    let best = match grid {
        BandwidthGrid::Conditional(g) => SelectedBandwidth::Conditional(g[best_index]),
        BandwidthGrid::Regression(g) => SelectedBandwidth::Regression(g[best_index]),
    };
    Ok(CvResult {
        best,
        best_index,
        scores,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointCloud;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn line(n: usize) -> (DistanceMatrix, Vec<f64>) {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64 / n as f64]).collect();
        let d = DistanceMatrix::euclidean(&PointCloud::from_rows(&rows).unwrap());
        let y = rows.iter().map(|r| (6.0 * r[0]).sin()).collect();
        (d, y)
    }

    #[test]
    fn folds_are_balanced_and_deterministic() {
        let f = fold_assignment(23, 5, 3);
        assert_eq!(f, fold_assignment(23, 5, 3));
        for k in 0..5 {
            let size = f.iter().filter(|&&x| x == k).count();
            assert!(size == 4 || size == 5);
        }
    }

    #[test]
    fn single_candidate_and_ties() {
        let (d, y) = line(20);
        let r = bandwidth_cv(&d, &y, &BandwidthGrid::Regression(vec![0.3]), 4, 0).unwrap();
        assert_eq!(r.best, SelectedBandwidth::Regression(0.3));
        let r = bandwidth_cv(&d, &y, &BandwidthGrid::Regression(vec![0.3, 0.3]), 4, 0).unwrap();
        assert_eq!(r.best_index, 0);
        let b = KernelBandwidths::new(0.1, 0.2).unwrap();
        let r = bandwidth_cv(&d, &y, &BandwidthGrid::Conditional(vec![b, b]), 4, 0).unwrap();
        assert_eq!(r.best_index, 0);
        assert_eq!(r.objective, CvObjective::LogLikelihood);
    }

    #[test]
    fn rejects_bad_configuration() {
        let (d, y) = line(5);
        let grid = BandwidthGrid::Regression(vec![1.0]);
        assert!(bandwidth_cv(&d, &y, &grid, 1, 0).is_err());
        assert!(bandwidth_cv(&d, &y, &grid, 6, 0).is_err());
        assert!(bandwidth_cv(&d, &y, &BandwidthGrid::Regression(vec![]), 2, 0).is_err());
        assert!(bandwidth_cv(&d, &y[..4], &grid, 2, 0).is_err());
        assert!(bandwidth_cv(&d, &y, &BandwidthGrid::Regression(vec![-1.0]), 2, 0).is_err());
    }

    /// Direct re-scoring of one regression candidate, written independently of the
    /// fold bookkeeping above.
    fn naive_rmse(d: &DistanceMatrix, y: &[f64], fold: &[usize], h: f64) -> f64 {
        let n = y.len();
        let mut sse = 0.0;
        for i in 0..n {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..n {
                if fold[j] != fold[i] {
                    let w = (-(d.get(i, j) * d.get(i, j)) / h).exp();
                    num += w * y[j];
                    den += w;
                }
            }
            sse += (num / den - y[i]).powi(2);
        }
        (sse / n as f64).sqrt()
    }

    #[test]
    fn scores_match_naive_evaluation() {
        let (d, y) = line(30);
        let grid = vec![0.001, 0.01, 0.1, 1.0];
        let r = bandwidth_cv(&d, &y, &BandwidthGrid::Regression(grid.clone()), 5, 9).unwrap();
        let fold = fold_assignment(30, 5, 9);
        for (c, h) in grid.iter().enumerate() {
            assert!((r.scores[c] - naive_rmse(&d, &y, &fold, *h)).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_generating_bandwidth() {
        // Responses are a Gaussian-bump smoother with known squared length scale plus
        // unit noise; CV should land within one grid step of it.
        let grid = BandwidthGrid::geometric(4f64.powi(-4), 4f64.powi(2), 7).unwrap();
        let truth_index = 2;
        let h_true = grid[truth_index];
        let n = 120;
        let mut hits = 0;
        for rep in 0..100u64 {
            let mut rng = rng_from_seed(1000 + rep);
            let xs: Vec<[f64; 1]> = (0..n).map(|_| [rng.random_range(0.0..4.0)]).collect();
            let centers: Vec<f64> = (0..16).map(|i| i as f64 * 0.25).collect();
            let coef: Vec<f64> = centers.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = xs
                .iter()
                .map(|x| {
                    let f: f64 = centers
                        .iter()
                        .zip(&coef)
                        .map(|(c, a)| a * (-(x[0] - c).powi(2) / h_true).exp())
                        .sum();
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    f + noise
                })
                .collect();
            let d = DistanceMatrix::euclidean(&PointCloud::from_rows(&xs).unwrap());
            let r = bandwidth_cv(&d, &y, &BandwidthGrid::Regression(grid.clone()), 5, rep).unwrap();
            if r.best_index.abs_diff(truth_index) <= 1 {
                hits += 1;
            }
        }
        assert!(hits >= 80, "{hits}/100");
    }
}
