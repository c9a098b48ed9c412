use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use spherelet::distance::spherical_distance;
use spherelet::geometry::euclidean;
use spherelet::sphere_fit::{fit_centered, fit_uncentered, FitVariant, Spherelet};
use spherelet::synth::{circle, euler_spiral, euler_spiral_osculating, sample_interval};

use crate::config::{ExperimentConfig, Manifold};
use crate::error::{BenchError, Result};
use crate::report::{log_log_slope, too_few_pairs, ErrorReport, PairError, SlopeRow, MIN_LOCAL_PAIRS};

/// Local distance errors around one base point of a curve with known arc length.
///
/// `spherical` uses the exact osculating circle at the base point, the object the
/// O(s⁴) rate is about. `spherical_fitted` uses the sphere fitted to the ball
/// points, as the estimator would.
pub fn run_local_error(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let start = Instant::now();
    let per_seed: Vec<(Vec<PairError>, Vec<SlopeRow>, Vec<String>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| one_seed(cfg, seed))
        .collect::<Result<_>>()?;
    let mut report = ErrorReport::default();
    for (pairs, slopes, warnings) in per_seed {
        report.pairs.extend(pairs);
        report.slopes.extend(slopes);
        report.warnings.extend(warnings);
    }
    report.wall_clock = start.elapsed();
    Ok(report)
}

type SeedOutput = (Vec<PairError>, Vec<SlopeRow>, Vec<String>);

fn one_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutput> {
    let sampling = cfg.sampling.into();
    let (sample, osculating) = match cfg.manifold {
        Manifold::EulerSpiral { lo, hi } => {
            let mut s = sample_interval(cfg.n, lo, hi, sampling, seed)?;
            s.push(cfg.local.base);
            (euler_spiral(&s)?, euler_spiral_osculating(cfg.local.base)?)
        }
        Manifold::Circle { radius } => {
            let mut t = sample_interval(cfg.n, 0.0, 2.0 * PI, sampling, seed)?;
            let base_angle = (cfg.local.base / radius).rem_euclid(2.0 * PI);
            t.push(base_angle);
            let c = circle(&t, radius)?;
            let base = c.cloud.point(cfg.n).to_vec();
            let osc = Spherelet::circle(&base, &[0.0, 0.0], &[-base_angle.sin(), base_angle.cos()])?;
            (c, osc)
        }
        _ => return Err(BenchError::config("local error needs a curve")),
    };
    let base_index = cfg.n;
    let truth = sample.ground_truth.as_ref().expect("curves carry ground truth");
    let base = sample.cloud.point(base_index);

    let ball: Vec<usize> = (0..cfg.n)
        .filter(|&i| {
            let g = truth.get(base_index, i);
            g > 0.0 && g <= cfg.local.radius
        })
        .collect();
    if ball.len() < MIN_LOCAL_PAIRS {
        return Err(too_few_pairs(ball.len()));
    }

    let mut warnings = Vec::new();
    let mut members = ball.clone();
    members.push(base_index);
    let hood = sample.cloud.select(&members)?;
    let fitted = match FitVariant::from(cfg.fit) {
        FitVariant::Centered => fit_centered(&hood, base, cfg.d),
        FitVariant::Uncentered => fit_uncentered(&hood, cfg.d),
    };
    let fitted = match fitted {
        Ok(s) => Some(s),
        Err(e) if e.is_numerical() => {
            warnings.push(format!("seed {seed}: ball fit failed ({e}); fitted errors use Euclidean distance"));
            None
        }
        Err(e) => return Err(e.into()),
    };

    let mut pairs = Vec::with_capacity(ball.len());
    for &i in &ball {
        let y = sample.cloud.point(i);
        let gap = truth.get(base_index, i);
        let d_e = euclidean(base, y);
        let d_s = spherical_distance(base, y, &osculating)?;
        let d_f = match &fitted {
            Some(sph) => spherical_distance(base, y, sph).unwrap_or(d_e),
            None => d_e,
        };
        pairs.push(PairError {
            seed,
            index: i,
            gap,
            euclidean: (d_e - gap).abs(),
            spherical: (d_s - gap).abs(),
            spherical_fitted: (d_f - gap).abs(),
        });
    }

    let gaps: Vec<f64> = pairs.iter().map(|p| p.gap).collect();
    let column = |f: fn(&PairError) -> f64| pairs.iter().map(f).collect::<Vec<f64>>();
    let slopes = [
        ("euclidean", column(|p| p.euclidean)),
        ("spherical", column(|p| p.spherical)),
        ("spherical_fitted", column(|p| p.spherical_fitted)),
    ]
    .into_iter()
    .map(|(local, errs)| SlopeRow {
        seed,
        local,
        slope: log_log_slope(&gaps, &errs),
        max_error: errs.iter().copied().fold(0.0, f64::max),
    })
    .collect();
    Ok((pairs, slopes, warnings))
}
