//! Dense linear-algebra and geometric primitives shared by the rest of the crate.
//!
//! Ambient dimensions here are small (tens at most), so everything is dense
//! and eigenproblems are solved with cyclic Jacobi rotations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance on `|a_ij - a_ji|` (scaled by `1 + max|a|`) accepted as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Frobenius tolerance on `VᵀV - I` for a basis to count as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

/// `n` points in `R^D`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("point dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::validation("point cloud must contain at least one point"));
        }
        if data.len() % dim != 0 {
            return Err(Error::validation(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite coordinate at point {}, axis {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::validation(format!(
                    "point {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false: a cloud holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// New cloud holding the given points in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::validation(format!(
                    "index {i} out of range for cloud of {} points",
                    self.len()
                )));
            }
            data.extend_from_slice(self.point(i));
        }
        Self::from_flat(data, self.dim)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(euclidean(self.point(i), self.point(j)));
            }
        }
        best
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Affine subspace `origin + span(basis)` with a column-orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
    origin: DVector<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>, origin: &[f64]) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::validation(format!(
                "basis must have between 1 and {} columns, got {}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if origin.len() != basis.nrows() {
            return Err(Error::validation(format!(
                "origin has dimension {}, basis has {} rows",
                origin.len(),
                basis.nrows()
            )));
        }
        let gram = basis.transpose() * &basis;
        let defect = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).norm();
        if defect > ORTHONORMAL_TOL {
            return Err(Error::validation(format!(
                "basis is not orthonormal (‖VᵀV − I‖ = {defect:e})"
            )));
        }
        Ok(Self {
            basis,
            origin: DVector::from_column_slice(origin),
        })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn origin(&self) -> &[f64] {
        self.origin.as_slice()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Number of basis vectors (`d + 1` for a `d`-sphere's host subspace).
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Intrinsic dimension of a sphere living in this subspace.
    pub fn sphere_dim(&self) -> usize {
        self.rank() - 1
    }

    /// Coordinates `Vᵀ(x − origin)`.
    pub fn coordinates(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let centered = DVector::from_column_slice(x) - &self.origin;
        Ok(self.basis.tr_mul(&centered))
    }

    /// Ambient point `origin + V z`.
    pub fn embed(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.basis * z
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim() {
            return Err(Error::validation(format!(
                "point has dimension {}, subspace lives in dimension {}",
                x.len(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }
}

/// Orthogonal projection onto the affine subspace: `origin + VVᵀ(x − origin)`.
pub fn project_affine(x: &[f64], subspace: &Subspace) -> Result<Vec<f64>> {
    let z = subspace.coordinates(x)?;
    Ok(subspace.embed(&z).as_slice().to_vec())
}

/// `arccos` with the argument clamped to `[-1, 1]`.
pub fn safe_arccos(t: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::validation("arccos of NaN"));
    }
    Ok(t.clamp(-1.0, 1.0).acos())
}

/// Leading eigenpairs of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// One column per eigenvalue, orthonormal.
    pub vectors: DMatrix<f64>,
}

/// The `m` largest eigenpairs of a symmetric matrix, by cyclic Jacobi rotation.
///
/// Within a repeated eigenvalue the choice of eigenvectors is arbitrary; only
/// the spanned space is meaningful.
pub fn symmetric_eigendecomposition(a: &DMatrix<f64>, m: usize) -> Result<SymmetricEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::validation(format!(
            "matrix is {}×{}, expected square",
            n,
            a.ncols()
        )));
    }
    if m == 0 || m > n {
        return Err(Error::validation(format!(
            "requested {m} eigenpairs of a {n}×{n} matrix"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("matrix has non-finite entries"));
    }
    let scale = 1.0 + a.amax();
    for i in 0..n {
        for j in i + 1..n {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::validation(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let (values, vectors) = jacobi(a)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut out_vectors = DMatrix::zeros(n, m);
    let mut out_values = Vec::with_capacity(m);
    for (col, &idx) in order.iter().take(m).enumerate() {
        out_values.push(values[idx]);
        out_vectors.set_column(col, &vectors.column(idx));
    }
    Ok(SymmetricEigen {
        values: out_values,
        vectors: out_vectors,
    })
}

/// Full (unsorted) eigendecomposition of a symmetric matrix.
fn jacobi(input: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = input.nrows();
    // Symmetrize so rounding-level asymmetry cannot leak into the rotations.
    let mut a = (input + input.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let total = a.norm();
    if total == 0.0 || n == 1 {
        return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
    }
    let target = (f64::EPSILON * total) * (f64::EPSILON * total);

    for sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum();
        if off <= target {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
        }
        // After a few sweeps, entries negligible next to both diagonals are zeroed
        // outright rather than rotated.
        let skip_small = sweep > 3;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if skip_small
                    && (apq.abs() * 1e18 <= app.abs())
                    && (apq.abs() * 1e18 <= aqq.abs())
                {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s, t, apq);
            }
        }
    }
    Err(Error::NoConvergence {
        routine: "jacobi eigendecomposition",
        iterations: JACOBI_MAX_SWEEPS,
    })
}

#[allow(clippy::too_many_arguments)]
fn rotate(
    a: &mut DMatrix<f64>,
    v: &mut DMatrix<f64>,
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    t: f64,
    apq: f64,
) {
    let n = a.nrows();
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let akp = a[(k, p)];
            let akq = a[(k, q)];
            let new_kp = c * akp - s * akq;
            let new_kq = s * akp + c * akq;
            a[(k, p)] = new_kp;
            a[(p, k)] = new_kp;
            a[(k, q)] = new_kq;
            a[(q, k)] = new_kq;
        }
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&b + b.transpose()) * 0.5
    }

    fn random_subspace(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> Subspace {
        let m = DMatrix::from_fn(dim, rank, |_, _| rng.random_range(-1.0..1.0));
        let q = m.qr().q().columns(0, rank).into_owned();
        let origin: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        Subspace::new(q, &origin).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let e = symmetric_eigendecomposition(&DMatrix::identity(3, 3), 2).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_eigenpairs() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let e = symmetric_eigendecomposition(&a, 2).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0]);
        assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((e.vectors[(2, 1)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_symmetric(&mut rng, 6);
        let e = symmetric_eigendecomposition(&a, 6).unwrap();
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let rebuilt = &e.vectors * lambda * e.vectors.transpose();
        assert!((rebuilt - &a).amax() < 1e-8);
    }

    #[test]
    fn residuals_on_many_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 1 + trial % 20;
            let a = random_symmetric(&mut rng, n);
            let e = symmetric_eigendecomposition(&a, n).unwrap();
            let bound = 1e-8 * (1.0 + a.norm());
            for (i, lambda) in e.values.iter().enumerate() {
                let v = e.vectors.column(i);
                assert!((&a * v - v * *lambda).norm() <= bound);
            }
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            symmetric_eigendecomposition(&a, 1),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_bad_count() {
        let a = DMatrix::<f64>::identity(2, 2);
        assert!(symmetric_eigendecomposition(&a, 0).is_err());
        assert!(symmetric_eigendecomposition(&a, 3).is_err());
    }

    #[test]
    fn coordinate_projection() {
        let basis = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let s = Subspace::new(basis, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(project_affine(&[1.0, 2.0, 3.0], &s).unwrap(), vec![1.0, 2.0, 0.0]);
        assert_eq!(project_affine(&[1.0, 2.0, 0.0], &s).unwrap(), vec![1.0, 2.0, 0.0]);
        assert!(project_affine(&[1.0, 2.0], &s).is_err());
    }

    #[test]
    fn projection_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = random_subspace(&mut rng, 5, 2);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = DVector::from_vec(project_affine(&x, &s).unwrap());
            let o = DVector::from_column_slice(s.origin());
            let v = s.basis();
            let direct = &o + v * v.transpose() * (DVector::from_vec(x.clone()) - &o);
            assert!((p - direct).norm() <= 1e-12);
        }
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let basis = DMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        assert!(Subspace::new(basis, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn arccos_edges() {
        assert_eq!(safe_arccos(1.0).unwrap(), 0.0);
        assert_eq!(safe_arccos(1.0 + 1e-14).unwrap(), 0.0);
        assert_eq!(safe_arccos(-1.0 - 1e-14).unwrap(), std::f64::consts::PI);
        assert!((safe_arccos(0.0).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(safe_arccos(f64::NAN).is_err());
    }

    #[test]
    fn cloud_validation() {
        assert!(PointCloud::from_flat(vec![], 2).is_err());
        assert!(PointCloud::from_flat(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(PointCloud::from_flat(vec![1.0, f64::NAN], 2).is_err());
        assert!(PointCloud::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        let c = PointCloud::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.diameter(), 5.0);
        assert_eq!(c.mean(), vec![1.5, 2.0]);
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_contractive(
            seed in any::<u64>(),
            x in prop::collection::vec(-10.0f64..10.0, 4),
            y in prop::collection::vec(-10.0f64..10.0, 4),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_subspace(&mut rng, 4, 2);
            let px = project_affine(&x, &s).unwrap();
            let ppx = project_affine(&px, &s).unwrap();
            prop_assert!(euclidean(&px, &ppx) <= 1e-12 * (1.0 + norm(&px)));
            let py = project_affine(&y, &s).unwrap();
            prop_assert!(euclidean(&px, &py) <= euclidean(&x, &y) + 1e-12);
        }

        #[test]
        fn arccos_monotone(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(safe_arccos(lo).unwrap() >= safe_arccos(hi).unwrap());
        }
    }
}
