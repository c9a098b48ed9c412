//! Gaussian-kernel conditional density and Nadaraya–Watson regression on
//! arbitrary (typically geodesic) distances.
//!
//! Kernels are `exp(−d²/h)`. Weights are evaluated in log space and shifted by
//! their maximum before exponentiating, since `d²/h` easily exceeds the range
//! of `exp`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Bandwidths for the predictor (`h1`) and response (`h2`) kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBandwidths {
    pub h1: f64,
    pub h2: f64,
}

impl KernelBandwidths {
    pub fn new(h1: f64, h2: f64) -> Result<Self> {
        let bw = Self { h1, h2 };
        bw.validate()?;
        Ok(bw)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.h1 > 0.0 && self.h1.is_finite() && self.h2 > 0.0 && self.h2.is_finite()) {
            return Err(Error::validation(format!(
                "bandwidths must be positive and finite, got h1 = {}, h2 = {}",
                self.h1, self.h2
            )));
        }
        Ok(())
    }
}

/// Log predictor weights `−d²/h` shifted so the largest is zero.
fn shifted_log_weights(dist_to_x: &[f64], h: f64) -> Result<Vec<f64>> {
    if dist_to_x.is_empty() {
        return Err(Error::validation("need at least one training point"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::validation(format!("bandwidth must be positive, got {h}")));
    }
    if dist_to_x.iter().any(|d| d.is_nan() || *d < 0.0) {
        return Err(Error::validation("distances must be nonnegative"));
    }
    let logw: Vec<f64> = dist_to_x.iter().map(|d| -(d * d) / h).collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::NoEffectiveNeighbors);
    }
    Ok(logw.into_iter().map(|w| w - top).collect())
}

fn check_lengths(responses: &[f64], dist_to_x: &[f64]) -> Result<()> {
    if responses.len() != dist_to_x.len() {
        return Err(Error::validation(format!(
            "{} responses but {} distances",
            responses.len(),
            dist_to_x.len()
        )));
    }
    if responses.iter().any(|y| !y.is_finite()) {
        return Err(Error::validation("responses must be finite"));
    }
    Ok(())
}

/// `log f̂(y | x)` computed entirely in log space.
pub fn conditional_log_density(
    train_y: &[f64],
    dist_to_x: &[f64],
    y: f64,
    bw: KernelBandwidths,
) -> Result<f64> {
    bw.validate()?;
    check_lengths(train_y, dist_to_x)?;
    let logw = shifted_log_weights(dist_to_x, bw.h1)?;
    let log_denominator = log_sum_exp(logw.iter().copied());
    let log_numerator = log_sum_exp(
        logw.iter()
            .zip(train_y)
            .map(|(w, yi)| w - (yi - y) * (yi - y) / bw.h2),
    );
    Ok(log_numerator - log_denominator - 0.5 * (PI * bw.h2).ln())
}

/// Kernel conditional density
/// `f̂(y|x) = (πh₂)^{-1/2} Σ e^{−d(xᵢ,x)²/h₁} e^{−(yᵢ−y)²/h₂} / Σ e^{−d(xᵢ,x)²/h₁}`.
///
/// In `y` this is a mixture of Gaussians with variance `h₂/2`, so it integrates to one.
pub fn conditional_kde(
    train_y: &[f64],
    dist_to_x: &[f64],
    y: f64,
    bw: KernelBandwidths,
) -> Result<f64> {
    Ok(conditional_log_density(train_y, dist_to_x, y, bw)?.exp())
}

/// Nadaraya–Watson estimate `Σ e^{−dᵢ²/h} yᵢ / Σ e^{−dᵢ²/h}`.
pub fn kernel_regression(train_y: &[f64], dist_to_x: &[f64], h: f64) -> Result<f64> {
    check_lengths(train_y, dist_to_x)?;
    let logw = shifted_log_weights(dist_to_x, h)?;
    let mut weight_sum = 0.0;
    let mut weighted = 0.0;
    for (w, y) in logw.iter().zip(train_y) {
        let w = w.exp();
        weight_sum += w;
        weighted += w * y;
    }
    if !(weight_sum > 0.0) {
        return Err(Error::NoEffectiveNeighbors);
    }
    let (lo, hi) = train_y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    // Rounding can push a convex combination a hair outside the hull.
    Ok((weighted / weight_sum).clamp(lo, hi))
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + values.map(|v| (v - top).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bw(h1: f64, h2: f64) -> KernelBandwidths {
        KernelBandwidths::new(h1, h2).unwrap()
    }

    #[test]
    fn single_point_is_a_gaussian() {
        for (h1, h2, d, y) in [(0.1, 1.0, 3.0, 0.2), (5.0, 0.3, 0.0, -1.0), (1.0, 2.0, 40.0, 1.5)] {
            let got = conditional_kde(&[0.7], &[d], y, bw(h1, h2)).unwrap();
            let expect = (-(0.7 - y) * (0.7 - y) / h2).exp() / (PI * h2).sqrt();
            assert!((got - expect).abs() <= 1e-14 * expect.max(1.0));
        }
    }

    #[test]
    fn symmetric_two_component_mixture() {
        let b = bw(1.0, 1.0);
        let a = conditional_kde(&[-1.0, 1.0], &[0.5, 0.5], 0.5, b).unwrap();
        let c = conditional_kde(&[-1.0, 1.0], &[0.5, 0.5], -0.5, b).unwrap();
        assert!((a - c).abs() <= 1e-12);
    }

    #[test]
    fn far_distances_do_not_underflow() {
        // d²/h1 ≈ 1e6: naive weights would all be zero.
        let d = conditional_kde(&[1.0, 2.0], &[1000.0, 1001.0], 1.0, bw(1.0, 1.0)).unwrap();
        assert!(d.is_finite() && d > 0.0);
    }

    #[test]
    fn infinite_distances_fail() {
        assert_eq!(
            conditional_kde(&[1.0], &[f64::INFINITY], 0.0, bw(1.0, 1.0)),
            Err(Error::NoEffectiveNeighbors)
        );
        assert_eq!(
            kernel_regression(&[1.0, 2.0], &[1e200, 1e200], 1.0),
            Err(Error::NoEffectiveNeighbors)
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(KernelBandwidths::new(0.0, 1.0).is_err());
        assert!(KernelBandwidths::new(1.0, -1.0).is_err());
        assert!(conditional_kde(&[1.0], &[1.0, 2.0], 0.0, bw(1.0, 1.0)).is_err());
        assert!(kernel_regression(&[], &[], 1.0).is_err());
        assert!(kernel_regression(&[1.0], &[-1.0], 1.0).is_err());
        assert!(kernel_regression(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn regression_examples() {
        assert_eq!(kernel_regression(&[4.2], &[123.0], 0.01).unwrap(), 4.2);
        assert!((kernel_regression(&[7.0; 5], &[0.1, 0.5, 1.0, 2.0, 3.0], 0.7).unwrap() - 7.0).abs() < 1e-12);
        let m = kernel_regression(&[2.0, 5.0], &[0.0, 1e6], 1.0).unwrap();
        assert!((m - 2.0).abs() <= 1e-12);
    }

    proptest! {
        #[test]
        fn regression_stays_in_hull(
            ys in prop::collection::vec(-100.0f64..100.0, 1..20),
            ds in prop::collection::vec(0.0f64..50.0, 20),
            h in 0.01f64..100.0,
        ) {
            let ds = &ds[..ys.len()];
            let m = kernel_regression(&ys, ds, h).unwrap();
            let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo && m <= hi);
        }

        #[test]
        fn common_weight_factor_cancels(
            ys in prop::collection::vec(-5.0f64..5.0, 1..10),
            ds in prop::collection::vec(0.0f64..3.0, 10),
            shift in 0.0f64..10.0,
            y in -5.0f64..5.0,
        ) {
            // Adding c to every d² multiplies all predictor weights by e^{−c/h1}.
            let ds = &ds[..ys.len()];
            let shifted: Vec<f64> = ds.iter().map(|d| (d * d + shift).sqrt()).collect();
            let b = bw(0.8, 0.5);
            let a = conditional_kde(&ys, ds, y, b).unwrap();
            let c = conditional_kde(&ys, &shifted, y, b).unwrap();
            prop_assert!((a - c).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
