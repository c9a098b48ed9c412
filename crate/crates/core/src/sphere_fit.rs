//! Local sphere ("spherelet") fitting.
//!
//! Both fits first pick the `d + 1` principal directions of the neighborhood,
//! then solve the algebraic least-squares problem for the center inside that
//! subspace. Working in subspace coordinates keeps the normal matrix
//! `(d+1)×(d+1)` and generically invertible; in ambient coordinates it would
//! have rank at most `d + 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{euclidean, symmetric_eigendecomposition, PointCloud, Subspace};

/// Normal matrices with a larger condition number are treated as degenerate.
pub const MAX_CONDITION: f64 = 1e12;
/// Fitted radius above this multiple of the neighborhood diameter marks a flat spherelet.
pub const FLAT_RADIUS_RATIO: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitVariant {
    /// Sphere constrained to pass through the base point.
    Centered,
    /// Sphere fitted about the neighborhood mean; better suited to noisy data.
    Uncentered,
}

/// A `d`-sphere inside a `(d+1)`-dimensional affine subspace of the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct Spherelet {
    subspace: Subspace,
    center: Vec<f64>,
    center_coords: DVector<f64>,
    radius: f64,
    base_point: Vec<f64>,
    variant: FitVariant,
    flat: bool,
}

impl Spherelet {
    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The anchor point: the fitted base point, or the neighborhood mean for the uncentered fit.
    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn variant(&self) -> FitVariant {
        self.variant
    }

    /// Intrinsic dimension `d` of the sphere.
    pub fn dim(&self) -> usize {
        self.subspace.sphere_dim()
    }

    /// True when the radius is so large relative to the data that the sphere is
    /// numerically indistinguishable from a plane; distances then use chords.
    pub fn is_flat(&self) -> bool {
        self.flat
    }

    /// The circle through `base` centered at `center`, in the plane spanned by
    /// `base − center` and `tangent`. Used to evaluate distances on a known
    /// osculating circle rather than a fitted one.
    pub fn circle(base: &[f64], center: &[f64], tangent: &[f64]) -> Result<Self> {
        let dim = base.len();
        if center.len() != dim || tangent.len() != dim {
            return Err(Error::validation("base, center and tangent must share a dimension"));
        }
        let radius = euclidean(base, center);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::validation("circle radius must be positive and finite"));
        }
        let radial = DVector::from_iterator(dim, base.iter().zip(center).map(|(b, c)| (b - c) / radius));
        let t = DVector::from_column_slice(tangent);
        let t = &t - &radial * radial.dot(&t);
        let t_norm = t.norm();
        if !(t_norm > 1e-12) {
            return Err(Error::validation("tangent must not be parallel to the radius"));
        }
        let basis = DMatrix::from_columns(&[radial, t / t_norm]);
        let subspace = Subspace::new(basis, base)?;
        let center_coords = subspace.coordinates(center)?;
        Ok(Spherelet {
            subspace,
            center: center.to_vec(),
            center_coords,
            radius,
            base_point: base.to_vec(),
            variant: FitVariant::Centered,
            flat: false,
        })
    }

    /// Subspace coordinates of `x − c`, i.e. `Vᵀ(x − c)`.
    pub(crate) fn offset_coords(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.subspace.coordinates(x)? - &self.center_coords)
    }
}

/// Centered k-osculating sphere at `base_point`.
///
/// `neighborhood` holds the `k` neighbors of the base point, not the base point itself.
pub fn fit_centered(neighborhood: &PointCloud, base_point: &[f64], d: usize) -> Result<Spherelet> {
    let k = neighborhood.len();
    let dim = neighborhood.dim();
    check_dims(d, dim, k, d + 2)?;
    if base_point.len() != dim {
        return Err(Error::validation(format!(
            "base point has dimension {}, neighborhood has {dim}",
            base_point.len()
        )));
    }

    let subspace = principal_subspace(neighborhood, base_point, d)?;
    let coords: Vec<DVector<f64>> = neighborhood
        .points()
        .map(|p| subspace.coordinates(p))
        .collect::<Result<_>>()?;

    // y = x maps to the coordinate origin, so H = Σ z zᵀ and f = Σ ‖z‖² z.
    let m = d + 1;
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut f = DVector::<f64>::zeros(m);
    for z in &coords {
        h += z * z.transpose();
        f += z * z.norm_squared();
    }
    let center_coords = solve_normal(&h, &(f * 0.5))?;
    let radius = center_coords.norm();
    build(
        subspace,
        center_coords,
        radius,
        base_point.to_vec(),
        FitVariant::Centered,
        neighborhood,
        Some(base_point),
    )
}

/// Uncentered k-osculating sphere about the neighborhood mean.
pub fn fit_uncentered(neighborhood: &PointCloud, d: usize) -> Result<Spherelet> {
    let n = neighborhood.len();
    let dim = neighborhood.dim();
    check_dims(d, dim, n, d + 3)?;

    let mean = neighborhood.mean();
    let subspace = principal_subspace(neighborhood, &mean, d)?;
    let coords: Vec<DVector<f64>> = neighborhood
        .points()
        .map(|p| subspace.coordinates(p))
        .collect::<Result<_>>()?;

    let m = d + 1;
    let nf = n as f64;
    let coord_mean = coords
        .iter()
        .fold(DVector::<f64>::zeros(m), |acc, z| acc + z)
        / nf;
    let mean_sq = coords.iter().map(|z| z.norm_squared()).sum::<f64>() / nf;
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut f = DVector::<f64>::zeros(m);
    for z in &coords {
        let dz = z - &coord_mean;
        h += &dz * dz.transpose();
        f += &dz * (z.norm_squared() - mean_sq);
    }
    let center_coords = solve_normal(&h, &(f * 0.5))?;
    let radius = coords.iter().map(|z| (z - &center_coords).norm()).sum::<f64>() / nf;
    build(
        subspace,
        center_coords,
        radius,
        mean,
        FitVariant::Uncentered,
        neighborhood,
        None,
    )
}

/// Dispatches on the variant; `base_point` is ignored by the uncentered fit.
pub fn fit(
    variant: FitVariant,
    neighborhood: &PointCloud,
    base_point: &[f64],
    d: usize,
) -> Result<Spherelet> {
    match variant {
        FitVariant::Centered => fit_centered(neighborhood, base_point, d),
        FitVariant::Uncentered => fit_uncentered(neighborhood, d),
    }
}

fn check_dims(d: usize, dim: usize, count: usize, min_count: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::validation("sphere dimension d must be at least 1"));
    }
    if d + 1 > dim {
        return Err(Error::validation(format!(
            "a {d}-sphere needs ambient dimension at least {}, got {dim}",
            d + 1
        )));
    }
    if count < min_count {
        return Err(Error::validation(format!(
            "fitting a {d}-sphere needs at least {min_count} points, got {count}"
        )));
    }
    Ok(())
}

/// Top `d + 1` eigenvectors of the scatter of `cloud` about `origin`.
fn principal_subspace(cloud: &PointCloud, origin: &[f64], d: usize) -> Result<Subspace> {
    let dim = cloud.dim();
    let mut sigma = DMatrix::<f64>::zeros(dim, dim);
    for p in cloud.points() {
        let v = DVector::from_iterator(dim, p.iter().zip(origin).map(|(a, b)| a - b));
        sigma += &v * v.transpose();
    }
    sigma /= cloud.len() as f64;
    let eig = symmetric_eigendecomposition(&sigma, d + 1)?;
    Subspace::new(eig.vectors, origin)
}

/// Solves `H w = rhs` for the symmetric positive semi-definite normal matrix `H`.
fn solve_normal(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let eig = symmetric_eigendecomposition(h, h.nrows())?;
    let largest = eig.values[0];
    let smallest = *eig.values.last().expect("non-empty spectrum");
    let condition = if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    };
    if !(largest > 0.0) || condition > MAX_CONDITION {
        return Err(Error::DegenerateNeighborhood { condition });
    }
    if let Some(chol) = h.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    h.clone()
        .full_piv_lu()
        .solve(rhs)
        .ok_or(Error::DegenerateNeighborhood { condition })
}

fn build(
    subspace: Subspace,
    center_coords: DVector<f64>,
    radius: f64,
    base_point: Vec<f64>,
    variant: FitVariant,
    neighborhood: &PointCloud,
    extra: Option<&[f64]>,
) -> Result<Spherelet> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::DegenerateNeighborhood {
            condition: f64::INFINITY,
        });
    }
    let center = subspace.embed(&center_coords).as_slice().to_vec();
    let mut diameter = neighborhood.diameter();
    if let Some(b) = extra {
        for p in neighborhood.points() {
            diameter = diameter.max(euclidean(p, b));
        }
    }
    let flat = radius > FLAT_RADIUS_RATIO * diameter;
    Ok(Spherelet {
        subspace,
        center,
        center_coords,
        radius,
        base_point,
        variant,
        flat,
    })
}
