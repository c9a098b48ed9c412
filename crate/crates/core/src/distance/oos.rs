use super::graph::graph_closure;
use super::local::{build_local, LocalContext, LocalDiagnostics, LocalParams};
use super::DistanceMatrix;
use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud};

/// Distances from a new point `x` to every training point through the graph.
///
/// With `i0` the nearest training point, returns `d(x, x_i0) + graph(i0, i)`,
/// where the first hop uses the spherelet fitted at `i0` (or the chord).
pub fn out_of_sample_distances(
    x: &[f64],
    train: &PointCloud,
    graph_dist: &DistanceMatrix,
    context: &LocalContext,
) -> Result<Vec<f64>> {
    if x.len() != train.dim() {
        return Err(Error::validation(format!(
            "query has dimension {}, training data has {}",
            x.len(),
            train.dim()
        )));
    }
    if graph_dist.len() != train.len() {
        return Err(Error::validation(format!(
            "distance matrix is {}×{} but there are {} training points",
            graph_dist.len(),
            graph_dist.len(),
            train.len()
        )));
    }
    let nearest = nearest_index(x, train);
    let first_hop = context.distance_to(x, train.point(nearest), nearest);
    Ok(graph_dist
        .row(nearest)
        .iter()
        .map(|g| first_hop + g)
        .collect())
}

/// Straight-line distances from `x` to every point of `cloud`.
pub fn euclidean_distances_to(x: &[f64], cloud: &PointCloud) -> Result<Vec<f64>> {
    if x.len() != cloud.dim() {
        return Err(Error::validation(format!(
            "query has dimension {}, cloud has {}",
            x.len(),
            cloud.dim()
        )));
    }
    Ok(cloud.points().map(|p| euclidean(x, p)).collect())
}

fn nearest_index(x: &[f64], cloud: &PointCloud) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, p) in cloud.points().enumerate() {
        let d = euclidean(x, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// A fitted graph-distance estimator over a training cloud.
#[derive(Debug, Clone)]
pub struct GeodesicEstimator {
    cloud: PointCloud,
    params: LocalParams,
    local: DistanceMatrix,
    global: DistanceMatrix,
    context: LocalContext,
    diagnostics: LocalDiagnostics,
}

impl GeodesicEstimator {
    /// Builds local distances and closes them over the kNN graph.
    pub fn fit(cloud: &PointCloud, params: &LocalParams) -> Result<Self> {
        let (local, context, diagnostics) = build_local(cloud, params)?;
        let global = graph_closure(&local)?;
        Ok(Self {
            cloud: cloud.clone(),
            params: *params,
            local,
            global,
            context,
            diagnostics,
        })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn params(&self) -> &LocalParams {
        &self.params
    }

    pub fn local(&self) -> &DistanceMatrix {
        &self.local
    }

    /// Graph (`EG` or `SG`) distances between training points.
    pub fn distances(&self) -> &DistanceMatrix {
        &self.global
    }

    pub fn context(&self) -> &LocalContext {
        &self.context
    }

    pub fn diagnostics(&self) -> &LocalDiagnostics {
        &self.diagnostics
    }

    pub fn into_distances(self) -> DistanceMatrix {
        self.global
    }

    pub fn out_of_sample(&self, x: &[f64]) -> Result<Vec<f64>> {
        out_of_sample_distances(x, &self.cloud, &self.global, &self.context)
    }
}
