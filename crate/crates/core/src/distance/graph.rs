use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::{DistanceKind, DistanceMatrix, UNREACHABLE};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest paths over the finite entries of a local matrix.
///
/// Runs Dijkstra from every source. Pairs in different components stay
/// [`UNREACHABLE`]. Local kinds map to their graph counterparts; other kinds
/// keep their kind.
pub fn graph_closure(local: &DistanceMatrix) -> Result<DistanceMatrix> {
    let n = local.len();
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, adj) in adjacency.iter_mut().enumerate() {
        for (j, &w) in local.row(i).iter().enumerate() {
            if w.is_nan() || w < 0.0 {
                return Err(Error::validation(format!(
                    "edge ({i}, {j}) has invalid weight {w}"
                )));
            }
            if i != j && w.is_finite() {
                adj.push((j, w));
            }
        }
    }

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| dijkstra(&adjacency, s))
        .collect();

    // Forward and backward searches can differ in the last ulp; keep the shorter.
    let mut values = vec![UNREACHABLE; n * n];
    for i in 0..n {
        values[i * n + i] = 0.0;
        for j in i + 1..n {
            let v = rows[i][j].min(rows[j][i]);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    let kind = match local.kind() {
        DistanceKind::LocalEuclidean => DistanceKind::GraphEuclidean,
        DistanceKind::LocalSpherical => DistanceKind::GraphSpherical,
        other => other,
    };
    Ok(DistanceMatrix::from_parts_unchecked(n, values, kind))
}

fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![UNREACHABLE; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(Entry { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adjacency[u] {
            let candidate = d + w;
            if candidate < dist[v] {
                dist[v] = candidate;
                heap.push(Entry {
                    dist: candidate,
                    vertex: v,
                });
            }
        }
    }
    dist
}
