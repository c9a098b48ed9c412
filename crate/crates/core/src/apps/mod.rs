//! Consumers of a distance matrix: k-medoids clustering, kernel conditional
//! density estimation, kernel regression and their evaluation.

mod cv;
mod kde;
mod kmedoids;
mod metrics;

pub use cv::{bandwidth_cv, fold_assignment, BandwidthGrid, CvObjective, CvResult, SelectedBandwidth};
pub use kde::{conditional_kde, conditional_log_density, kernel_regression, KernelBandwidths};
pub use kmedoids::{
    assign, k_medoids, k_medoids_restarts, ClusteringResult, DEFAULT_MAX_ITER, DEFAULT_RESTARTS,
};
pub use metrics::{clustering_metrics, ClusteringScores};
