//! Geodesic distances on sampled manifolds from locally fitted spheres.
//!
//! Points sampled near an unknown manifold are connected in a k-nearest-neighbor
//! graph. Each point gets a locally fitted sphere, edges are weighted by the
//! closed-form great-circle distance on that sphere, and shortest paths turn
//! these local estimates into a global geodesic distance matrix. The
//! [`apps`] module uses the resulting metric for k-medoids clustering,
//! conditional kernel density estimation and kernel regression.
//!
//! ```
//! use spherelet::distance::{GeodesicEstimator, LocalParams};
//! use spherelet::geometry::PointCloud;
//! use spherelet::sphere_fit::FitVariant;
//!
//! let rows: Vec<[f64; 2]> = (0..50)
//!     .map(|i| { let t = 0.1 * i as f64; [t.cos(), t.sin()] })
//!     .collect();
//! let cloud = PointCloud::from_rows(&rows).unwrap();
//! let est = GeodesicEstimator::fit(&cloud, &LocalParams::spherical(3, 1, FitVariant::Centered)).unwrap();
//! assert!((est.distances().get(0, 49) - 4.9).abs() < 1e-9);
//! ```

pub mod apps;
pub mod distance;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod rng;
pub mod sphere_fit;
pub mod synth;

pub use error::{Error, Result};

/// Version of this library, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
