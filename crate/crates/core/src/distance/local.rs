use rayon::prelude::*;

use super::knn::{knn, NeighborGraph};
use super::{DistanceKind, DistanceMatrix, UNREACHABLE};
use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud};
use crate::sphere_fit::{fit, FitVariant, Spherelet};

/// Projections closer than this multiple of the radius to the center are singular.
const SINGULAR_PROJECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalMode {
    Euclidean,
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalParams {
    /// Neighborhood size.
    pub k: usize,
    /// Intrinsic dimension (spherical mode only).
    pub d: usize,
    pub mode: LocalMode,
    pub fit: FitVariant,
}

impl LocalParams {
    pub fn euclidean(k: usize) -> Self {
        Self {
            k,
            d: 1,
            mode: LocalMode::Euclidean,
            fit: FitVariant::Centered,
        }
    }

    pub fn spherical(k: usize, d: usize, fit: FitVariant) -> Self {
        Self {
            k,
            d,
            mode: LocalMode::Spherical,
            fit,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k >= n {
            return Err(Error::validation(format!(
                "k = {} must be smaller than the sample size {n}",
                self.k
            )));
        }
        if self.mode == LocalMode::Spherical {
            if self.d == 0 {
                return Err(Error::validation("intrinsic dimension d must be at least 1"));
            }
            if self.k < self.d + 2 {
                return Err(Error::validation(format!(
                    "spherical distances need k ≥ d + 2 = {}, got k = {}",
                    self.d + 2,
                    self.k
                )));
            }
        }
        Ok(())
    }
}

/// What happened while building a local matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalDiagnostics {
    /// Rows whose sphere fit was degenerate and fell back to Euclidean distances.
    pub degenerate_rows: Vec<usize>,
    /// Rows whose fitted sphere was flat (chord distances used).
    pub flat_rows: usize,
    /// Pairs whose spherical projection was singular and fell back to Euclidean.
    pub singular_pairs: usize,
}

/// The per-point state a local matrix was built from, reused for out-of-sample queries.
#[derive(Debug, Clone)]
pub struct LocalContext {
    pub graph: NeighborGraph,
    /// Fitted spherelet per point (`None` in Euclidean mode or after a degenerate fit).
    pub spherelets: Vec<Option<Spherelet>>,
    pub mode: LocalMode,
}

impl LocalContext {
    /// Local distance from `x` to training point `i`, using the spherelet at `i` when available.
    pub fn distance_to(&self, x: &[f64], anchor: &[f64], i: usize) -> f64 {
        match self.spherelets.get(i).and_then(Option::as_ref) {
            Some(s) => spherical_distance(x, anchor, s).unwrap_or_else(|_| euclidean(x, anchor)),
            None => euclidean(x, anchor),
        }
    }
}

/// Geodesic distance between the projections of `x` and `y` onto the spherelet.
///
/// Flat spherelets return the chord length `‖x − y‖`.
pub fn spherical_distance(x: &[f64], y: &[f64], sph: &Spherelet) -> Result<f64> {
    let dim = sph.subspace().ambient_dim();
    if x.len() != dim || y.len() != dim {
        return Err(Error::validation(format!(
            "points must have dimension {dim}"
        )));
    }
    if sph.is_flat() {
        return Ok(euclidean(x, y));
    }
    let r = sph.radius();
    let u = sph.offset_coords(x)?;
    let v = sph.offset_coords(y)?;
    let (nu, nv) = (u.norm(), v.norm());
    if nu <= SINGULAR_PROJECTION_TOL * r || nv <= SINGULAR_PROJECTION_TOL * r {
        return Err(Error::ProjectionSingular);
    }
    let a = u / nu;
    let b = v / nv;
    // Same angle as arccos(a·b), without the precision loss near 0 and π.
    let angle = 2.0 * (&a - &b).norm().atan2((&a + &b).norm());
    Ok(r * angle)
}

struct RowOutcome {
    entries: Vec<(usize, f64)>,
    spherelet: Option<Spherelet>,
    degenerate: bool,
    singular: usize,
}

pub(crate) fn build_local(
    cloud: &PointCloud,
    params: &LocalParams,
) -> Result<(DistanceMatrix, LocalContext, LocalDiagnostics)> {
    let n = cloud.len();
    params.validate(n)?;
    let graph = knn(cloud, params.k)?;

    let rows: Vec<RowOutcome> = (0..n)
        .into_par_iter()
        .map(|i| row_outcome(cloud, &graph, params, i))
        .collect::<Result<_>>()?;

    let mut diagnostics = LocalDiagnostics::default();
    let mut directed = vec![UNREACHABLE; n * n];
    for (i, row) in rows.iter().enumerate() {
        directed[i * n + i] = 0.0;
        for &(j, dist) in &row.entries {
            directed[i * n + j] = dist;
        }
        if row.degenerate {
            diagnostics.degenerate_rows.push(i);
        }
        if row.spherelet.as_ref().is_some_and(Spherelet::is_flat) {
            diagnostics.flat_rows += 1;
        }
        diagnostics.singular_pairs += row.singular;
    }

    let values = symmetrize(n, &directed);
    let kind = match params.mode {
        LocalMode::Euclidean => DistanceKind::LocalEuclidean,
        LocalMode::Spherical => DistanceKind::LocalSpherical,
    };
    let context = LocalContext {
        graph,
        spherelets: rows.into_iter().map(|r| r.spherelet).collect(),
        mode: params.mode,
    };
    Ok((
        DistanceMatrix::from_parts_unchecked(n, values, kind),
        context,
        diagnostics,
    ))
}

fn row_outcome(
    cloud: &PointCloud,
    graph: &NeighborGraph,
    params: &LocalParams,
    i: usize,
) -> Result<RowOutcome> {
    let euclid_row = || -> Vec<(usize, f64)> { graph.neighbors(i).to_vec() };
    if params.mode == LocalMode::Euclidean {
        return Ok(RowOutcome {
            entries: euclid_row(),
            spherelet: None,
            degenerate: false,
            singular: 0,
        });
    }

    let xi = cloud.point(i);
    let mut members: Vec<usize> = graph.neighbor_indices(i).collect();
    if params.fit == FitVariant::Uncentered {
        // The mean-centered fit uses the whole neighborhood including x_i itself.
        members.insert(0, i);
    }
    let hood = cloud.select(&members)?;
    let spherelet = match fit(params.fit, &hood, xi, params.d) {
        Ok(s) => s,
        Err(Error::DegenerateNeighborhood { .. }) => {
            return Ok(RowOutcome {
                entries: euclid_row(),
                spherelet: None,
                degenerate: true,
                singular: 0,
            })
        }
        Err(e) => return Err(e),
    };

    let mut singular = 0;
    let entries = graph
        .neighbors(i)
        .iter()
        .map(|&(j, chord)| {
            let dist = match spherical_distance(xi, cloud.point(j), &spherelet) {
                Ok(d) => d,
                Err(Error::ProjectionSingular) => {
                    singular += 1;
                    chord
                }
                Err(e) => return Err(e),
            };
            Ok((j, dist))
        })
        .collect::<Result<_>>()?;
    Ok(RowOutcome {
        entries,
        spherelet: Some(spherelet),
        degenerate: false,
        singular,
    })
}

/// Mean of both directions where both are known; the known one where only one is.
fn symmetrize(n: usize, directed: &[f64]) -> Vec<f64> {
    let mut out = vec![UNREACHABLE; n * n];
    for i in 0..n {
        out[i * n + i] = 0.0;
        for j in i + 1..n {
            let a = directed[i * n + j];
            let b = directed[j * n + i];
            let v = match (a.is_finite(), b.is_finite()) {
                (true, true) => 0.5 * (a + b),
                (true, false) => a,
                (false, true) => b,
                (false, false) => UNREACHABLE,
            };
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    out
}

/// Local distance matrix over the kNN graph; non-neighbor pairs are unreachable.
pub fn local_distance_matrix(
    cloud: &PointCloud,
    params: &LocalParams,
) -> Result<(DistanceMatrix, LocalDiagnostics)> {
    let (m, _, diag) = build_local(cloud, params)?;
    Ok((m, diag))
}
