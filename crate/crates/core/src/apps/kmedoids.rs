use rand::seq::index::sample;
use rayon::prelude::*;

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Cluster of every point, in `0..K`.
    pub labels: Vec<usize>,
    /// Medoid of every cluster, ascending by point index.
    pub medoid_indices: Vec<usize>,
    pub final_cost: f64,
    /// Swap sweeps performed.
    pub iterations: usize,
}

/// Sum of distances from every point to its nearest medoid, with the assignment.
pub fn assign(dist: &DistanceMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let n = dist.len();
    let mut labels = vec![0; n];
    let mut cost = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        if let Some(pos) = medoids.iter().position(|&m| m == i) {
            *label = pos;
            continue;
        }
        let (best, d) = medoids
            .iter()
            .enumerate()
            .map(|(l, &m)| (l, dist.get(i, m)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        *label = best;
        cost += d;
    }
    (labels, cost)
}

/// PAM-style k-medoids: random initial medoids, then best-improvement swaps
/// between a medoid and a non-medoid until no swap lowers the total cost.
pub fn k_medoids(
    dist: &DistanceMatrix,
    clusters: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusteringResult> {
    let n = dist.len();
    if clusters == 0 || clusters > n {
        return Err(Error::validation(format!(
            "number of clusters K = {clusters} must satisfy 1 ≤ K ≤ n = {n}"
        )));
    }
    if !dist.all_finite() {
        return Err(Error::validation(
            "distance matrix has unreachable pairs; increase k to connect the graph",
        ));
    }

    let mut rng = rng_from_seed(seed);
    let mut medoids: Vec<usize> = sample(&mut rng, n, clusters).into_vec();
    medoids.sort_unstable();
    let mut is_medoid = vec![false; n];
    for &m in &medoids {
        is_medoid[m] = true;
    }

    let (_, mut cost) = assign(dist, &medoids);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (nearest, second) = nearest_two(dist, &medoids);
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..clusters {
            for candidate in 0..n {
                if is_medoid[candidate] {
                    continue;
                }
                let swapped = swap_cost(dist, &medoids, &nearest, &second, slot, candidate);
                let current_best = best.map_or(cost, |b| b.2);
                if swapped < current_best {
                    best = Some((slot, candidate, swapped));
                }
            }
        }
        match best {
            // Guard against accepting swaps that only win by rounding noise.
            Some((slot, candidate, new_cost)) if new_cost < cost - 1e-12 * cost.abs().max(1.0) => {
                is_medoid[medoids[slot]] = false;
                is_medoid[candidate] = true;
                medoids[slot] = candidate;
                let (_, recomputed) = assign(dist, &medoids);
                cost = recomputed;
                debug_assert!((recomputed - new_cost).abs() <= 1e-9 * (1.0 + new_cost));
            }
            _ => break,
        }
    }

    medoids.sort_unstable();
    let (labels, final_cost) = assign(dist, &medoids);
    Ok(ClusteringResult {
        labels,
        medoid_indices: medoids,
        final_cost,
        iterations,
    })
}

/// Runs [`k_medoids`] from `restarts` independently seeded starts and keeps the cheapest.
pub fn k_medoids_restarts(
    dist: &DistanceMatrix,
    clusters: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
) -> Result<ClusteringResult> {
    let restarts = restarts.max(1);
    let runs: Vec<ClusteringResult> = (0..restarts)
        .into_par_iter()
        .map(|r| k_medoids(dist, clusters, child_seed(seed, r as u64), max_iter))
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.final_cost < best.final_cost { run } else { best })
        .expect("at least one restart"))
}

/// For each point: (slot of nearest medoid, its distance) and the second-nearest distance.
fn nearest_two(dist: &DistanceMatrix, medoids: &[usize]) -> (Vec<(usize, f64)>, Vec<f64>) {
    let n = dist.len();
    let mut nearest = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        let mut first = (usize::MAX, f64::INFINITY);
        let mut runner_up = f64::INFINITY;
        for (slot, &m) in medoids.iter().enumerate() {
            let d = dist.get(i, m);
            if d < first.1 {
                runner_up = first.1;
                first = (slot, d);
            } else if d < runner_up {
                runner_up = d;
            }
        }
        nearest.push(first);
        second.push(runner_up);
    }
    (nearest, second)
}

fn swap_cost(
    dist: &DistanceMatrix,
    medoids: &[usize],
    nearest: &[(usize, f64)],
    second: &[f64],
    slot: usize,
    candidate: usize,
) -> f64 {
    debug_assert!(slot < medoids.len());
    let mut total = 0.0;
    for i in 0..dist.len() {
        let to_candidate = dist.get(i, candidate);
        let keep = if nearest[i].0 == slot {
            second[i]
        } else {
            nearest[i].1
        };
        total += if i == candidate { 0.0 } else { to_candidate.min(keep) };
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::DistanceKind;
    use crate::geometry::PointCloud;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DistanceMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..2).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        DistanceMatrix::euclidean(&PointCloud::from_rows(&rows).unwrap())
    }

    fn brute_force_cost(dist: &DistanceMatrix, k: usize) -> f64 {
        fn rec(dist: &DistanceMatrix, k: usize, start: usize, chosen: &mut Vec<usize>, best: &mut f64) {
            if chosen.len() == k {
                *best = best.min(assign(dist, chosen).1);
                return;
            }
            for m in start..dist.len() {
                chosen.push(m);
                rec(dist, k, m + 1, chosen, best);
                chosen.pop();
            }
        }
        let mut best = f64::INFINITY;
        rec(dist, k, 0, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn every_point_its_own_medoid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = random_matrix(&mut rng, 6);
        let r = k_medoids(&d, 6, 1, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.final_cost, 0.0);
        assert_eq!(r.labels, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn separated_clusters_split_for_any_seed() {
        let mut rows = Vec::new();
        for c in 0..2 {
            for i in 0..5 {
                rows.push(vec![100.0 * c as f64 + 0.2 * i as f64, 0.1 * (i % 2) as f64]);
            }
        }
        let d = DistanceMatrix::euclidean(&PointCloud::from_rows(&rows).unwrap());
        for seed in 0..50 {
            let r = k_medoids(&d, 2, seed, DEFAULT_MAX_ITER).unwrap();
            assert!(r.labels[..5].iter().all(|&l| l == r.labels[0]));
            assert!(r.labels[5..].iter().all(|&l| l == r.labels[5]));
            assert_ne!(r.labels[0], r.labels[5]);
            assert!((r.final_cost - brute_force_cost(&d, 2)).abs() < 1e-9);
        }
    }

    #[test]
    fn single_start_usually_optimal_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut hits = 0;
        for trial in 0..100 {
            let n = 3 + trial % 6;
            let d = random_matrix(&mut rng, n);
            let r = k_medoids(&d, 2, trial as u64, DEFAULT_MAX_ITER).unwrap();
            if (r.final_cost - brute_force_cost(&d, 2)).abs() <= 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}");
    }

    #[test]
    fn invariants_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..30 {
            let d = random_matrix(&mut rng, 20);
            let k = 1 + trial % 5;
            let r = k_medoids_restarts(&d, k, trial as u64, 3, DEFAULT_MAX_ITER).unwrap();
            for (l, &m) in r.medoid_indices.iter().enumerate() {
                assert_eq!(r.labels[m], l);
            }
            let recomputed: f64 = (0..20)
                .map(|i| d.get(i, r.medoid_indices[r.labels[i]]))
                .sum();
            assert!((recomputed - r.final_cost).abs() <= 1e-9);
            assert!(r.iterations <= DEFAULT_MAX_ITER);
        }
    }

    #[test]
    fn local_minimum_under_single_swaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = random_matrix(&mut rng, 25);
        let r = k_medoids(&d, 3, 9, DEFAULT_MAX_ITER).unwrap();
        for slot in 0..3 {
            for h in 0..25 {
                if r.medoid_indices.contains(&h) {
                    continue;
                }
                let mut meds = r.medoid_indices.clone();
                meds[slot] = h;
                assert!(assign(&d, &meds).1 >= r.final_cost - 1e-9);
            }
        }
    }

    #[test]
    fn rescaling_distances_scales_cost_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = random_matrix(&mut rng, 15);
        let scaled = DistanceMatrix::from_values(
            15,
            d.values().iter().map(|v| v * 3.5).collect(),
            DistanceKind::GlobalEuclidean,
        )
        .unwrap();
        let a = k_medoids(&d, 3, 11, DEFAULT_MAX_ITER).unwrap();
        let b = k_medoids(&scaled, 3, 11, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(a.labels, b.labels);
        assert!((b.final_cost - 3.5 * a.final_cost).abs() <= 1e-9 * b.final_cost);
    }

    #[test]
    fn rejects_unreachable_and_bad_k() {
        let inf = f64::INFINITY;
        let d = DistanceMatrix::from_values(2, vec![0.0, inf, inf, 0.0], DistanceKind::GraphEuclidean)
            .unwrap();
        let err = k_medoids(&d, 1, 0, 10).unwrap_err();
        assert!(err.to_string().contains("increase k"));
        let d = d.with_unreachable_as(1.0).unwrap();
        assert!(k_medoids(&d, 3, 0, 10).is_err());
        assert!(k_medoids(&d, 0, 0, 10).is_err());
    }
}
