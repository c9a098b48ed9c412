//! Experiment runners. Each returns an in-memory report; [`crate::run_experiment`]
//! writes it out.

mod apps;
mod global;
mod local;
mod sweep;

use std::path::Path;

use spherelet::distance::{graph_closure, local_distance_matrix, write_sgdm, DistanceMatrix, LocalParams};
use spherelet::geometry::PointCloud;
use spherelet::sphere_fit::FitVariant;

pub use apps::{run_ckde, run_clustering, run_regression, unreachable_penalty};
pub use global::run_global_error;
pub use local::run_local_error;
pub use sweep::run_noisy_sweep;

use crate::config::Estimator;
use crate::error::{BenchError, Result};

/// Builds one global estimator's matrix.
pub fn estimate(cloud: &PointCloud, estimator: Estimator, k: usize, d: usize, fit: FitVariant) -> Result<DistanceMatrix> {
    Ok(match estimator {
        Estimator::D => DistanceMatrix::euclidean(cloud),
        Estimator::EG => graph_closure(&local_distance_matrix(cloud, &LocalParams::euclidean(k))?.0)?,
        Estimator::SG => graph_closure(&local_distance_matrix(cloud, &LocalParams::spherical(k, d, fit))?.0)?,
    })
}

pub(crate) fn save_sgdm(path: &Path, m: &DistanceMatrix) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| BenchError::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_sgdm(m, &mut out)?;
    use std::io::Write;
    out.flush().map_err(|e| BenchError::io(path, e))
}

/// `"[0,1]"` for arc-length ranges.
pub(crate) fn range_label(lo: f64, hi: f64) -> String {
    format!("[{lo},{hi}]")
}

pub(crate) fn disconnected_warning(context: &str, estimator: Estimator, components: usize) -> String {
    format!("{context}: {estimator} graph has {components} components; seed excluded (increase k to connect it)")
}
