use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud};

/// Exact k-nearest-neighbor graph; `neighbors[i]` is sorted by (distance, index).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    neighbors: Vec<Vec<(usize, f64)>>,
    k: usize,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// `(index, euclidean distance)` pairs for vertex `i`, nearest first.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn neighbor_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[i].iter().map(|&(j, _)| j)
    }
}

/// Brute-force kNN by Euclidean distance, ties broken by lower index.
pub fn knn(cloud: &PointCloud, k: usize) -> Result<NeighborGraph> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(Error::validation(format!(
            "neighborhood size k = {k} must satisfy 1 ≤ k < n = {n}"
        )));
    }
    let neighbors = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = cloud.point(i);
            let mut row: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, euclidean(xi, cloud.point(j))))
                .collect();
            let by_distance =
                |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
            row.select_nth_unstable_by(k - 1, by_distance);
            row.truncate(k);
            row.sort_by(by_distance);
            row
        })
        .collect();
    Ok(NeighborGraph { neighbors, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn collinear_example() {
        let cloud = PointCloud::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let g = knn(&cloud, 1).unwrap();
        let firsts: Vec<usize> = (0..3).map(|i| g.neighbors(i)[0].0).collect();
        assert_eq!(firsts, vec![1, 0, 1]);
    }

    #[test]
    fn complete_graph_when_k_is_n_minus_one() {
        let cloud = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [5.0, 5.0]]).unwrap();
        let g = knn(&cloud, 3).unwrap();
        for i in 0..4 {
            let mut idx: Vec<usize> = g.neighbor_indices(i).collect();
            idx.sort_unstable();
            let expect: Vec<usize> = (0..4).filter(|&j| j != i).collect();
            assert_eq!(idx, expect);
        }
    }

    #[test]
    fn ties_prefer_lower_index() {
        let cloud = PointCloud::from_rows(&[[0.0], [-1.0], [1.0], [2.0]]).unwrap();
        let g = knn(&cloud, 1).unwrap();
        assert_eq!(g.neighbors(0)[0].0, 1);
    }

    #[test]
    fn rejects_k_too_large() {
        let cloud = PointCloud::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(knn(&cloud, 2).is_err());
        assert!(knn(&cloud, 0).is_err());
    }

    #[test]
    fn matches_exhaustive_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let g = knn(&cloud, 10).unwrap();
        for i in 0..200 {
            let mut all: Vec<(f64, usize)> = (0..200)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = rows[i]
                        .iter()
                        .zip(&rows[j])
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    (d, j)
                })
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect: Vec<usize> = all.iter().take(10).map(|&(_, j)| j).collect();
            assert_eq!(g.neighbor_indices(i).collect::<Vec<_>>(), expect);
        }
    }
}
