//! Synthetic manifolds with known (or reference) geodesic distances.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::distance::{graph_closure, local_distance_matrix, DistanceKind, DistanceMatrix, LocalParams};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::quadrature::adaptive_simpson;
use crate::rng::{child_seed, rng_from_seed};
use crate::sphere_fit::Spherelet;

/// Absolute tolerance for the Fresnel integrals along the whole sampled range.
pub const FRESNEL_TOL: f64 = 1e-12;

/// A sampled manifold with intrinsic coordinates and optional ground truth.
#[derive(Debug, Clone)]
pub struct ManifoldSample {
    pub cloud: PointCloud,
    /// Intrinsic coordinates per point: `[s]` for curves, `[θ, φ]` for the torus,
    /// `[t]` (ellipse angle) for ellipses.
    pub params: Vec<Vec<f64>>,
    /// True geodesic distances when known analytically.
    pub ground_truth: Option<DistanceMatrix>,
    pub noise_sigma: f64,
    pub labels: Option<Vec<usize>>,
}

impl ManifoldSample {
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    /// Restriction to the given points.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            cloud: self.cloud.select(indices)?,
            params: indices.iter().map(|&i| self.params[i].clone()).collect(),
            ground_truth: self
                .ground_truth
                .as_ref()
                .map(|g| g.submatrix(indices))
                .transpose()?,
            noise_sigma: self.noise_sigma,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        })
    }

    /// One row per point: ambient coordinates, intrinsic parameters, then the label if any.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.cloud.dim();
        let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        let n_params = self.params.first().map_or(0, Vec::len);
        header.extend((0..n_params).map(|i| format!("param{i}")));
        if self.labels.is_some() {
            header.push("label".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, p) in self.cloud.points().enumerate() {
            let mut cells: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            cells.extend(self.params[i].iter().map(|v| format!("{v:?}")));
            if let Some(l) = &self.labels {
                cells.push(l[i].to_string());
            }
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Points on the Euler spiral `γ(s) = (∫₀ˢ cos t² dt, ∫₀ˢ sin t² dt)` at the given arc lengths.
///
/// The curve has unit speed, so the ground truth is `|sᵢ − sⱼ|`. Its curvature is `κ(s) = 2s`.
pub fn euler_spiral(s_values: &[f64]) -> Result<ManifoldSample> {
    if s_values.is_empty() {
        return Err(Error::validation("need at least one arc length"));
    }
    if s_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::validation("arc lengths must be finite"));
    }
    let coords = fresnel_points(s_values)?;
    let n = s_values.len();
    let mut truth = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            truth[i * n + j] = (s_values[i] - s_values[j]).abs();
        }
    }
    Ok(ManifoldSample {
        cloud: PointCloud::from_flat(coords, 2)?,
        params: s_values.iter().map(|&s| vec![s]).collect(),
        ground_truth: Some(DistanceMatrix::from_values(n, truth, DistanceKind::Geodesic)?),
        noise_sigma: 0.0,
        labels: None,
    })
}

/// Exact osculating circle of the Euler spiral at arc length `s ≠ 0`.
///
/// The tangent angle is `s²`, so the unit normal is `(−sin s², cos s²)` and the
/// center lies `1/(2s)` along it.
pub fn euler_spiral_osculating(s: f64) -> Result<Spherelet> {
    if !(s.is_finite() && s != 0.0) {
        return Err(Error::validation("osculating circle needs finite nonzero arc length"));
    }
    let p = euler_spiral(&[s])?;
    let base = p.cloud.point(0);
    let theta = s * s;
    let kappa = 2.0 * s;
    let center = [base[0] - theta.sin() / kappa, base[1] + theta.cos() / kappa];
    Spherelet::circle(base, &center, &[theta.cos(), theta.sin()])
}

/// How `n` parameter values are drawn from an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Independent uniform draws.
    Uniform,
    /// One uniform draw in each of `n` equal cells (jittered grid). Every value is
    /// still marginally uniform, but no two are more than two cells apart, which
    /// keeps sparse kNN graphs on curves connected.
    #[default]
    Stratified,
}

/// `n` values in `[lo, hi]`, ascending for [`Sampling::Stratified`].
pub fn sample_interval(n: usize, lo: f64, hi: f64, sampling: Sampling, seed: u64) -> Result<Vec<f64>> {
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::validation("interval must satisfy lo < hi"));
    }
    let mut rng = rng_from_seed(seed);
    let width = hi - lo;
    Ok(match sampling {
        Sampling::Uniform => (0..n).map(|_| rng.random_range(lo..=hi)).collect(),
        Sampling::Stratified => (0..n)
            .map(|i| {
                let u: f64 = rng.random();
                (lo + width * (i as f64 + u) / n as f64).min(hi)
            })
            .collect(),
    })
}

/// `n` arc lengths drawn from `[lo, hi]`, mapped onto the Euler spiral.
pub fn euler_spiral_sampled(
    n: usize,
    lo: f64,
    hi: f64,
    sampling: Sampling,
    seed: u64,
) -> Result<ManifoldSample> {
    euler_spiral(&sample_interval(n, lo, hi, sampling, seed)?)
}

/// Fresnel coordinates for many arc lengths, integrating between consecutive
/// sorted values so each stretch of the curve is integrated once.
fn fresnel_points(s_values: &[f64]) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..s_values.len()).collect();
    order.sort_by(|&a, &b| s_values[a].total_cmp(&s_values[b]));
    let span = s_values.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    let mut out = vec![0.0; 2 * s_values.len()];

    let (negative, positive): (Vec<usize>, Vec<usize>) =
        order.iter().partition(|&&i| s_values[i] < 0.0);
    let chains = [positive, negative.into_iter().rev().collect::<Vec<_>>()];
    for chain in chains.iter() {
        let (mut prev, mut x, mut y) = (0.0_f64, 0.0_f64, 0.0_f64);
        for &i in chain {
            let s = s_values[i];
            if s != prev {
                let tol = (FRESNEL_TOL * (s - prev).abs() / span).max(1e-300);
                x += adaptive_simpson(|t| (t * t).cos(), prev, s, tol)?;
                y += adaptive_simpson(|t| (t * t).sin(), prev, s, tol)?;
                prev = s;
            }
            out[2 * i] = x;
            out[2 * i + 1] = y;
        }
    }
    Ok(out)
}

/// Torus `((R + r cos θ) cos φ, (R + r cos θ) sin φ, r sin θ)`.
///
/// No analytic geodesic distance is attached; see [`reference_distances`].
pub fn torus(theta_phi: &[(f64, f64)], major: f64, minor: f64) -> Result<ManifoldSample> {
    if !(minor > 0.0 && major > minor) {
        return Err(Error::validation("torus radii must satisfy R > r > 0"));
    }
    if theta_phi.is_empty() {
        return Err(Error::validation("need at least one angle pair"));
    }
    let mut data = Vec::with_capacity(3 * theta_phi.len());
    for &(theta, phi) in theta_phi {
        let ring = major + minor * theta.cos();
        data.extend_from_slice(&[ring * phi.cos(), ring * phi.sin(), minor * theta.sin()]);
    }
    Ok(ManifoldSample {
        cloud: PointCloud::from_flat(data, 3)?,
        params: theta_phi.iter().map(|&(t, p)| vec![t, p]).collect(),
        ground_truth: None,
        noise_sigma: 0.0,
        labels: None,
    })
}

/// Torus sample with both angles uniform on `[0, 2π)`.
pub fn torus_uniform(n: usize, major: f64, minor: f64, seed: u64) -> Result<ManifoldSample> {
    let mut rng = rng_from_seed(seed);
    let angles: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)))
        .collect();
    torus(&angles, major, minor)
}

/// Points at the given angles on a circle of radius `r` about the origin, with arc-length truth.
pub fn circle(angles: &[f64], r: f64) -> Result<ManifoldSample> {
    if !(r > 0.0) {
        return Err(Error::validation("radius must be positive"));
    }
    let data: Vec<f64> = angles.iter().flat_map(|t| [r * t.cos(), r * t.sin()]).collect();
    let n = angles.len();
    let mut truth = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let gap = (angles[i] - angles[j]).rem_euclid(2.0 * PI);
            let d = r * gap.min(2.0 * PI - gap);
            truth[i * n + j] = d;
            truth[j * n + i] = d;
        }
    }
    Ok(ManifoldSample {
        cloud: PointCloud::from_flat(data, 2)?,
        params: angles.iter().map(|&t| vec![t]).collect(),
        ground_truth: Some(DistanceMatrix::from_values(n, truth, DistanceKind::Geodesic)?),
        noise_sigma: 0.0,
        labels: None,
    })
}

/// Default size ratio between the outer and inner ellipse.
pub const ELLIPSE_SCALE_RATIO: f64 = 2.0;

/// Two concentric ellipses with `n_per` points each, uniform in the angle parameter.
///
///
/// The inner ellipse has semi-axes `(1, √(1−e²))`, the outer is `scale_ratio` times larger.
/// Labels are 0 for the inner and 1 for the outer ellipse.
pub fn concentric_ellipses(
    n_per: usize,
    eccentricity: f64,
    noise_sigma: f64,
    scale_ratio: f64,
    sampling: Sampling,
    seed: u64,
) -> Result<ManifoldSample> {
    if n_per == 0 {
        return Err(Error::validation("need at least one point per ellipse"));
    }
    if !(0.0..1.0).contains(&eccentricity) {
        return Err(Error::validation("eccentricity must lie in [0, 1)"));
    }
    if !(scale_ratio > 0.0) {
        return Err(Error::validation("scale ratio must be positive"));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::validation("noise level must be nonnegative"));
    }
    let minor = ellipse_axis_ratio(eccentricity);
    let mut data = Vec::with_capacity(4 * n_per);
    let mut params = Vec::with_capacity(2 * n_per);
    let mut labels = Vec::with_capacity(2 * n_per);
    for (label, scale) in [(0usize, 1.0), (1usize, scale_ratio)] {
        let angles = sample_interval(n_per, 0.0, 2.0 * PI, sampling, child_seed(seed, 2 + label as u64))?;
        for t in angles {
            data.extend_from_slice(&[scale * t.cos(), scale * minor * t.sin()]);
            params.push(vec![t]);
            labels.push(label);
        }
    }
    let sample = ManifoldSample {
        cloud: PointCloud::from_flat(data, 2)?,
        params,
        ground_truth: None,
        noise_sigma: 0.0,
        labels: Some(labels),
    };
    add_noise(&sample, noise_sigma, child_seed(seed, 1))
}

/// Semi-minor over semi-major axis for eccentricity `e`: `√(1 − e²)`.
pub fn ellipse_axis_ratio(eccentricity: f64) -> f64 {
    (1.0 - eccentricity * eccentricity).sqrt()
}

/// Adds independent `N(0, σ²)` noise to every coordinate. Ground truth is kept.
pub fn add_noise(sample: &ManifoldSample, sigma: f64, seed: u64) -> Result<ManifoldSample> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::validation("noise level must be finite and nonnegative"));
    }
    let mut out = sample.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = rng_from_seed(seed);
    let noisy: Vec<f64> = sample
        .cloud
        .as_flat()
        .iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            v + sigma * e
        })
        .collect();
    out.cloud = PointCloud::from_flat(noisy, sample.cloud.dim())?;
    out.noise_sigma = (sample.noise_sigma.powi(2) + sigma * sigma).sqrt();
    Ok(out)
}

/// Graph-Euclidean distances on a dense sample, restricted to `subset`.
///
/// Stands in for the true geodesic distance when none is known analytically.
pub fn reference_distances(
    dense: &ManifoldSample,
    k: usize,
    subset: &[usize],
) -> Result<DistanceMatrix> {
    let (local, _) = local_distance_matrix(&dense.cloud, &LocalParams::euclidean(k))?;
    let global = graph_closure(&local)?;
    let components = global.component_count();
    if components > 1 {
        return Err(Error::validation(format!(
            "dense reference graph has {components} components; increase k"
        )));
    }
    global.submatrix(subset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::euclidean;

    fn spiral_point(s: f64) -> [f64; 2] {
        let p = euler_spiral(&[s]).unwrap();
        [p.cloud.point(0)[0], p.cloud.point(0)[1]]
    }

    #[test]
    fn origin_and_ground_truth() {
        let s = euler_spiral(&[0.0, 0.5, 1.25]).unwrap();
        assert_eq!(s.cloud.point(0), &[0.0, 0.0]);
        let gt = s.ground_truth.unwrap();
        assert_eq!(gt.get(1, 2), 0.75);
        assert_eq!(gt.get(2, 0), 1.25);
    }

    #[test]
    fn unit_speed_by_finite_differences() {
        let h = 1e-5;
        for s in [0.5, 1.0, 1.6, 2.5, 3.9] {
            let a = spiral_point(s);
            let b = spiral_point(s + h);
            let speed = euclidean(&a, &b) / h;
            assert!((speed - 1.0).abs() < 1e-6, "s={s}: {speed}");
        }
        // Same check inside one batched evaluation.
        let grid: Vec<f64> = (0..400).flat_map(|i| [0.01 * i as f64, 0.01 * i as f64 + h]).collect();
        let pts = euler_spiral(&grid).unwrap();
        for i in 0..400 {
            let speed = euclidean(pts.cloud.point(2 * i), pts.cloud.point(2 * i + 1)) / h;
            assert!((speed - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn curvature_grows_linearly() {
        // θ(s) = s² is the tangent angle of ∫cos(t²), ∫sin(t²), so κ = θ' = 2s.
        let h = 1e-3;
        let s = 1.6;
        let (a, b, c) = (spiral_point(s - h), spiral_point(s), spiral_point(s + h));
        let second = [
            (a[0] - 2.0 * b[0] + c[0]) / (h * h),
            (a[1] - 2.0 * b[1] + c[1]) / (h * h),
        ];
        let kappa = (second[0].powi(2) + second[1].powi(2)).sqrt();
        assert!((kappa - 2.0 * s).abs() < 1e-3, "{kappa}");
    }

    #[test]
    fn negative_arc_lengths_are_odd() {
        let p = euler_spiral(&[-0.7, 0.7]).unwrap();
        assert!((p.cloud.point(0)[0] + p.cloud.point(1)[0]).abs() < 1e-14);
        assert!((p.cloud.point(0)[1] + p.cloud.point(1)[1]).abs() < 1e-14);
    }

    #[test]
    fn torus_substitutions() {
        let t = torus(&[(0.0, 0.0), (PI, PI / 2.0)], 5.0, 1.0).unwrap();
        assert_eq!(t.cloud.point(0), &[6.0, 0.0, 0.0]);
        let p = t.cloud.point(1);
        assert!(p[0].abs() < 1e-12 && (p[1] - 4.0).abs() < 1e-12 && p[2].abs() < 1e-12);
        assert!(torus(&[(0.0, 0.0)], 1.0, 1.0).is_err());
    }

    #[test]
    fn torus_implicit_equation() {
        let t = torus_uniform(500, 5.0, 1.0, 3).unwrap();
        for p in t.cloud.points() {
            let ring = (p[0] * p[0] + p[1] * p[1]).sqrt() - 5.0;
            assert!((ring * ring + p[2] * p[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_shapes() {
        assert_eq!(ellipse_axis_ratio(0.0), 1.0);
        assert!((ellipse_axis_ratio(3f64.sqrt() / 2.0) - 0.5).abs() < 1e-15);
        let e = concentric_ellipses(4, 3f64.sqrt() / 2.0, 0.0, 2.0, Sampling::Uniform, 1).unwrap();
        let labels = e.labels.as_ref().unwrap();
        for (i, p) in e.cloud.points().enumerate() {
            let a = if labels[i] == 0 { 1.0 } else { 2.0 };
            let b = 0.5 * a;
            assert!(((p[0] / a).powi(2) + (p[1] / b).powi(2) - 1.0).abs() < 1e-12);
        }
        let circles = concentric_ellipses(10, 0.0, 0.0, 2.0, Sampling::Stratified, 2).unwrap();
        for (i, p) in circles.cloud.points().enumerate() {
            let r = if circles.labels.as_ref().unwrap()[i] == 0 { 1.0 } else { 2.0 };
            assert!((p[0].hypot(p[1]) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_statistics() {
        let n = 100_000;
        let base = ManifoldSample {
            cloud: PointCloud::from_flat(vec![0.0; 2 * n], 2).unwrap(),
            params: vec![vec![]; n],
            ground_truth: None,
            noise_sigma: 0.0,
            labels: None,
        };
        assert_eq!(add_noise(&base, 0.0, 1).unwrap().cloud, base.cloud);
        let sigma = 0.3;
        let noisy = add_noise(&base, sigma, 1).unwrap();
        let pts: Vec<&[f64]> = noisy.cloud.points().collect();
        let mean: Vec<f64> = (0..2).map(|a| pts.iter().map(|p| p[a]).sum::<f64>() / n as f64).collect();
        for m in &mean {
            assert!(m.abs() < 0.01 * sigma);
        }
        for a in 0..2 {
            for b in 0..2 {
                let c = pts.iter().map(|p| (p[a] - mean[a]) * (p[b] - mean[b])).sum::<f64>() / n as f64;
                let expect = if a == b { sigma * sigma } else { 0.0 };
                assert!((c - expect).abs() <= 0.05 * sigma * sigma, "cov[{a}][{b}] = {c}");
            }
        }
        assert_eq!(noisy.noise_sigma, sigma);
    }

    #[test]
    fn osculating_circle_has_curvature_two_s() {
        let c = euler_spiral_osculating(1.6).unwrap();
        assert!((c.radius() - 1.0 / 3.2).abs() < 1e-14);
        // Second-order contact: nearby curve points deviate from the circle by O(h³).
        for h in [1e-2, 5e-3] {
            let p = spiral_point(1.6 + h);
            let off = (euclidean(&p, c.center()) - c.radius()).abs();
            assert!(off < 2.0 * h * h * h, "{h}: {off}");
        }
        assert!(euler_spiral_osculating(0.0).is_err());
    }

    #[test]
    fn stratified_draws_one_value_per_cell() {
        let v = sample_interval(100, 2.0, 3.0, Sampling::Stratified, 8).unwrap();
        for (i, x) in v.iter().enumerate() {
            let cell = ((x - 2.0) * 100.0).floor() as usize;
            assert_eq!(cell.min(99), i);
        }
        let u = sample_interval(1000, -1.0, 1.0, Sampling::Uniform, 8).unwrap();
        assert!(u.iter().all(|x| (-1.0..=1.0).contains(x)));
        let mean = u.iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() < 0.1);
        assert!(sample_interval(3, 1.0, 1.0, Sampling::Uniform, 0).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = euler_spiral_sampled(50, 0.0, 2.0, Sampling::Uniform, 9).unwrap();
        let b = euler_spiral_sampled(50, 0.0, 2.0, Sampling::Uniform, 9).unwrap();
        assert_eq!(a.cloud, b.cloud);
        let a = concentric_ellipses(20, 0.5, 0.1, 2.0, Sampling::Stratified, 4).unwrap();
        let b = concentric_ellipses(20, 0.5, 0.1, 2.0, Sampling::Stratified, 4).unwrap();
        assert_eq!(a.cloud, b.cloud);
    }

    #[test]
    fn reference_distances_on_dense_circle() {
        let n = 2000;
        let angles: Vec<f64> = {
            let mut rng = rng_from_seed(5);
            (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
        };
        let dense = circle(&angles, 1.0).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let full = reference_distances(&dense, 10, &all).unwrap();
        assert_eq!(full.kind(), DistanceKind::GraphEuclidean);
        let truth = dense.ground_truth.as_ref().unwrap();
        for i in (0..n).step_by(97) {
            for j in (0..n).step_by(89) {
                let t = truth.get(i, j);
                if t > 0.01 {
                    assert!((full.get(i, j) - t).abs() <= 0.01 * t);
                }
            }
        }
        let pair = reference_distances(&dense, 10, &[3, 10]).unwrap();
        assert_eq!(pair.len(), 2);
        assert_eq!(pair.get(0, 1), full.get(3, 10));
    }
}
