//! Pairwise distance estimation: local Euclidean and spherical distances over a
//! kNN graph, globalized by shortest paths.

mod graph;
mod io;
mod knn;
mod local;
mod oos;

pub use graph::graph_closure;
pub use io::{read_csv, read_sgdm, write_csv, write_sgdm, SGDM_MAGIC, SGDM_VERSION};
pub use knn::{knn, NeighborGraph};
pub use local::{
    local_distance_matrix, spherical_distance, LocalContext, LocalDiagnostics, LocalMode,
    LocalParams,
};
pub use oos::{euclidean_distances_to, out_of_sample_distances, GeodesicEstimator};

use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud};

/// Sentinel for pairs with no connecting path.
pub const UNREACHABLE: f64 = f64::INFINITY;

/// Which estimator produced a [`DistanceMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    LocalEuclidean,
    LocalSpherical,
    /// Straight-line distances between all pairs (`D`).
    GlobalEuclidean,
    /// Shortest paths over local Euclidean edges (`EG`).
    GraphEuclidean,
    /// Shortest paths over local spherical edges (`SG`).
    GraphSpherical,
    /// Known true geodesic distances (`GD`).
    Geodesic,
}

impl DistanceKind {
    pub fn is_graph(self) -> bool {
        matches!(self, DistanceKind::GraphEuclidean | DistanceKind::GraphSpherical)
    }

    /// Short tag used in file names and reports.
    pub fn tag(self) -> &'static str {
        match self {
            DistanceKind::LocalEuclidean => "local_euclidean",
            DistanceKind::LocalSpherical => "local_spherical",
            DistanceKind::GlobalEuclidean => "D",
            DistanceKind::GraphEuclidean => "EG",
            DistanceKind::GraphSpherical => "SG",
            DistanceKind::Geodesic => "GD",
        }
    }
}

/// Symmetric `n×n` matrix of nonnegative distances; [`UNREACHABLE`] marks missing pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Vec<f64>,
    n: usize,
    kind: DistanceKind,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal and nonnegativity.
    pub fn from_values(n: usize, values: Vec<f64>, kind: DistanceKind) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::validation(format!(
                "expected {} entries for a {n}×{n} matrix, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if v.is_nan() || v < 0.0 {
                    return Err(Error::validation(format!(
                        "entry ({i}, {j}) = {v} is negative or NaN"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::validation(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { values, n, kind })
    }

    pub(crate) fn from_parts_unchecked(n: usize, values: Vec<f64>, kind: DistanceKind) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { values, n, kind }
    }

    /// Straight-line distances between every pair of points.
    pub fn euclidean(cloud: &PointCloud) -> Self {
        let n = cloud.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = euclidean(cloud.point(i), cloud.point(j));
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self::from_parts_unchecked(n, values, DistanceKind::GlobalEuclidean)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_reachable(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_finite()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_finite(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }

    /// Connected components of the graph of finite entries.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for (j, v) in self.row(i).iter().enumerate() {
                    if v.is_finite() && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }

    /// Frobenius norm of `self − other`; `None` if either has unreachable entries.
    pub fn frobenius_error(&self, other: &DistanceMatrix) -> Result<Option<f64>> {
        if self.n != other.n {
            return Err(Error::validation(format!(
                "cannot compare {}×{} with {}×{}",
                self.n, self.n, other.n, other.n
            )));
        }
        if !self.all_finite() || !other.all_finite() {
            return Ok(None);
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(Some(sum.sqrt()))
    }

    /// Restriction to the given indices, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::validation(format!(
                "index {bad} out of range for {}×{} matrix",
                self.n, self.n
            )));
        }
        let m = indices.len();
        let mut values = Vec::with_capacity(m * m);
        for &i in indices {
            for &j in indices {
                values.push(self.get(i, j));
            }
        }
        Ok(Self::from_parts_unchecked(m, values, self.kind))
    }

    /// Copy with every unreachable entry replaced by `penalty`.
    ///
    /// Used by consumers such as clustering that need a finite dissimilarity and
    /// treat "disconnected" as "very far".
    pub fn with_unreachable_as(&self, penalty: f64) -> Result<Self> {
        if !(penalty.is_finite() && penalty >= 0.0) {
            return Err(Error::validation("penalty must be finite and nonnegative"));
        }
        let values = self
            .values
            .iter()
            .map(|&v| if v.is_finite() { v } else { penalty })
            .collect();
        Ok(Self::from_parts_unchecked(self.n, values, self.kind))
    }

    /// Largest violation of `d(i,j) ≤ d(i,l) + d(l,j)` over all reachable triples.
    pub fn max_triangle_violation(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for l in 0..n {
                let a = self.get(i, l);
                if !a.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let b = self.get(l, j);
                    if b.is_finite() {
                        worst = worst.max(self.get(i, j) - a - b);
                    }
                }
            }
        }
        worst
    }
}
