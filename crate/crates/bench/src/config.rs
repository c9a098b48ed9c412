//! Declarative experiment configuration.
//!
//! A run is described by one TOML file. Every field has a per-experiment
//! default (see [`ExperimentConfig::preset`]), so a file only needs to name the
//! experiment and whatever it changes. Command-line flags are applied last.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spherelet::distance::DistanceKind;
use spherelet::sphere_fit::FitVariant;
use spherelet::synth::Sampling;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    LocalError,
    GlobalError,
    NoisySweep,
    Clustering,
    Ckde,
    Regression,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::LocalError,
        Experiment::GlobalError,
        Experiment::NoisySweep,
        Experiment::Clustering,
        Experiment::Ckde,
        Experiment::Regression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::LocalError => "local_error",
            Experiment::GlobalError => "global_error",
            Experiment::NoisySweep => "noisy_sweep",
            Experiment::Clustering => "clustering",
            Experiment::Ckde => "ckde",
            Experiment::Regression => "regression",
        }
    }

    pub fn is_application(self) -> bool {
        matches!(self, Experiment::Clustering | Experiment::Ckde | Experiment::Regression)
    }
}

impl FromStr for Experiment {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                BenchError::config(format!("unknown experiment {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three global distance estimators being compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    /// Straight-line Euclidean distance.
    D,
    /// Graph distance over local Euclidean edges.
    EG,
    /// Graph distance over local spherical edges.
    SG,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::D, Estimator::EG, Estimator::SG];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::D => "D",
            Estimator::EG => "EG",
            Estimator::SG => "SG",
        }
    }

    pub fn kind(self) -> DistanceKind {
        match self {
            Estimator::D => DistanceKind::GlobalEuclidean,
            Estimator::EG => DistanceKind::GraphEuclidean,
            Estimator::SG => DistanceKind::GraphSpherical,
        }
    }
}

impl FromStr for Estimator {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "D" => Ok(Estimator::D),
            "EG" => Ok(Estimator::EG),
            "SG" => Ok(Estimator::SG),
            other => Err(BenchError::config(format!("unknown estimator {other:?}; expected D, EG or SG"))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fit {
    Centered,
    Uncentered,
}

impl From<Fit> for FitVariant {
    fn from(f: Fit) -> Self {
        match f {
            Fit::Centered => FitVariant::Centered,
            Fit::Uncentered => FitVariant::Uncentered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    Uniform,
    Stratified,
}

impl From<SamplingScheme> for Sampling {
    fn from(s: SamplingScheme) -> Self {
        match s {
            SamplingScheme::Uniform => Sampling::Uniform,
            SamplingScheme::Stratified => Sampling::Stratified,
        }
    }
}

/// Synthetic data generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manifold {
    /// Euler spiral on arc lengths `[lo, hi]`.
    EulerSpiral { lo: f64, hi: f64 },
    /// Circle of the given radius, sampled over the full turn.
    Circle { radius: f64 },
    /// Torus with major radius `major` and tube radius `minor`.
    Torus { major: f64, minor: f64 },
    /// Two concentric ellipses; `n` counts both.
    Ellipses { eccentricity: f64, scale_ratio: f64 },
}

impl Manifold {
    fn name(&self) -> &'static str {
        match self {
            Manifold::EulerSpiral { .. } => "euler_spiral",
            Manifold::Circle { .. } => "circle",
            Manifold::Torus { .. } => "torus",
            Manifold::Ellipses { .. } => "ellipses",
        }
    }
}

/// A user-supplied CSV replacing the generator in application experiments.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSpec {
    pub path: Option<PathBuf>,
    /// Header of the class label column (clustering).
    pub label_column: Option<String>,
    /// Header of the response column (conditional density and regression).
    pub response_column: Option<String>,
    /// Headers excluded from the features.
    pub ignore_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSettings {
    /// Arc length of the base point.
    pub base: f64,
    /// Geodesic radius of the neighborhood ball.
    pub radius: f64,
}

impl Default for LocalSettings {
    fn default() -> Self {
        Self {
            base: 1.6,
            radius: 0.04,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalSettings {
    /// Arc-length ranges of the Euler spiral, one table row each. Empty means
    /// the manifold's own range.
    pub ranges: Vec<[f64; 2]>,
    /// Also write every replication's matrices, not just the first.
    pub save_all_distances: bool,
}

impl Default for GlobalSettings {
    fn default() -> Self {
        Self {
            ranges: vec![[0.0, 1.0], [1.0, 2.0], [2.0, 3.0], [3.0, 4.0]],
            save_all_distances: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub sizes: Vec<usize>,
    /// Size of the dense sample the reference distances are computed on.
    pub dense_n: usize,
    /// Neighborhood size of the dense reference graph.
    pub dense_k: usize,
    /// When positive, each subsample of size `m` uses `k = round(k_fraction · m)`
    /// (never below `k`); zero keeps the fixed `k`.
    pub k_fraction: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            sizes: vec![50, 100, 200, 400],
            dense_n: 2000,
            dense_k: 10,
            k_fraction: 0.3,
        }
    }
}

/// `count` geometrically spaced values from `lo` to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GeometricGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        Ok(spherelet::apps::BandwidthGrid::geometric(self.lo, self.hi, self.count)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppSettings {
    /// Fraction of points used for training in density and regression runs.
    pub train_fraction: f64,
    pub folds: usize,
    pub regression_grid: GeometricGrid,
    pub h1_grid: GeometricGrid,
    pub h2_grid: GeometricGrid,
    /// Standard deviation of the synthetic response noise.
    pub response_sigma: f64,
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for AppSettings {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
            folds: 5,
            regression_grid: GeometricGrid {
                lo: 1e-4,
                hi: 10.0,
                count: 16,
            },
            h1_grid: GeometricGrid {
                lo: 1e-4,
                hi: 10.0,
                count: 11,
            },
            h2_grid: GeometricGrid {
                lo: 1e-3,
                hi: 1.0,
                count: 7,
            },
            response_sigma: 0.1,
            restarts: spherelet::apps::DEFAULT_RESTARTS,
            max_iter: spherelet::apps::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub manifold: Manifold,
    #[serde(default)]
    pub input: InputSpec,
    pub estimators: Vec<Estimator>,
    /// Sample size (per replication; both ellipses together).
    pub n: usize,
    /// kNN neighborhood size.
    pub k: usize,
    /// Intrinsic dimension of the spherelets.
    pub d: usize,
    /// Number of clusters.
    #[serde(rename = "K")]
    pub clusters: usize,
    /// Standard deviation of the isotropic Gaussian noise added to the points.
    pub noise_sigma: f64,
    pub seeds: Vec<u64>,
    pub fit: Fit,
    pub sampling: SamplingScheme,
    #[serde(default)]
    pub local: LocalSettings,
    #[serde(default)]
    pub global: GlobalSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub apps: AppSettings,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for an experiment, sized like the published protocol.
    pub fn preset(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            manifold: Manifold::EulerSpiral { lo: 0.0, hi: 2.0 },
            input: InputSpec::default(),
            estimators: Estimator::ALL.to_vec(),
            n: 500,
            k: 3,
            d: 1,
            clusters: 2,
            noise_sigma: 0.0,
            seeds: (0..20).collect(),
            fit: Fit::Centered,
            sampling: SamplingScheme::Stratified,
            local: LocalSettings::default(),
            global: GlobalSettings::default(),
            sweep: SweepSettings::default(),
            apps: AppSettings::default(),
            out: PathBuf::from("out").join(experiment.name()),
        };
        match experiment {
            Experiment::LocalError => Self {
                seeds: vec![0],
                ..base
            },
            Experiment::GlobalError => base,
            Experiment::NoisySweep => Self {
                noise_sigma: 0.01,
                fit: Fit::Uncentered,
                ..base
            },
            Experiment::Clustering => Self {
                manifold: Manifold::Ellipses {
                    eccentricity: 3f64.sqrt() / 2.0,
                    scale_ratio: spherelet::synth::ELLIPSE_SCALE_RATIO,
                },
                n: 200,
                seeds: (0..100).collect(),
                ..base
            },
            Experiment::Ckde | Experiment::Regression => Self {
                manifold: Manifold::EulerSpiral { lo: 3.0, hi: 4.0 },
                n: 600,
                k: 5,
                noise_sigma: 0.003,
                fit: Fit::Uncentered,
                seeds: (0..50).collect(),
                ..base
            },
        }
    }

    /// Reads a TOML file on top of the preset for the experiment it names.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: toml::Table =
            toml::from_str(text).map_err(|e| BenchError::config(format!("config is not valid TOML: {e}")))?;
        let experiment = file
            .get("experiment")
            .and_then(|v| v.as_str())
            .ok_or_else(|| BenchError::config("config must set `experiment`"))?
            .parse::<Experiment>()?;
        let mut merged: toml::Table = toml::Table::try_from(Self::preset(experiment))
            .map_err(|e| BenchError::config(e.to_string()))?;
        merge(&mut merged, file);
        merged
            .try_into()
            .map_err(|e: toml::de::Error| BenchError::config(e.to_string()))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("configuration serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Neighborhood size for a sample of `m` points in a sweep.
    pub fn sweep_k(&self, m: usize) -> usize {
        let f = self.sweep.k_fraction;
        if f > 0.0 {
            ((f * m as f64).round() as usize).max(self.k)
        } else {
            self.k
        }
    }

    pub fn uses(&self, e: Estimator) -> bool {
        self.estimators.contains(&e)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(BenchError::Config(msg));
        if self.estimators.is_empty() {
            return fail("select at least one estimator".into());
        }
        if self.seeds.is_empty() {
            return fail("seed list is empty".into());
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return fail("seed list has duplicates".into());
        }
        if self.d == 0 {
            return fail("intrinsic dimension d must be at least 1".into());
        }
        if self.k < self.d + 2 {
            return fail(format!("k = {} is below d + 2 = {}", self.k, self.d + 2));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!("noise sigma {} must be finite and nonnegative", self.noise_sigma));
        }
        self.validate_manifold()?;

        let from_file = self.input.path.is_some();
        if from_file {
            if !self.experiment.is_application() {
                return fail(format!(
                    "{} needs a synthetic manifold with known geodesics; CSV input is only for applications",
                    self.experiment
                ));
            }
            let path = self.input.path.as_ref().unwrap();
            if !path.is_file() {
                return fail(format!("input file {} does not exist", path.display()));
            }
        }

        match self.experiment {
            Experiment::LocalError => {
                if !matches!(self.manifold, Manifold::EulerSpiral { .. } | Manifold::Circle { .. }) {
                    return fail("local error needs a curve with analytic arc length (euler_spiral or circle)".into());
                }
                if !(self.local.radius > 0.0) {
                    return fail("ball radius must be positive".into());
                }
                if let Manifold::EulerSpiral { lo, hi } = self.manifold {
                    if !(lo..=hi).contains(&self.local.base) || self.local.base == 0.0 {
                        return fail(format!("base arc length {} must be nonzero and inside [{lo}, {hi}]", self.local.base));
                    }
                }
            }
            Experiment::GlobalError => {
                if !matches!(self.manifold, Manifold::EulerSpiral { .. } | Manifold::Circle { .. }) {
                    return fail("global error needs analytic ground truth (euler_spiral or circle)".into());
                }
                self.check_k_below(self.n)?;
                for r in &self.global.ranges {
                    if !(r[0] < r[1]) {
                        return fail(format!("range [{}, {}] is empty", r[0], r[1]));
                    }
                }
            }
            Experiment::NoisySweep => {
                if !matches!(self.manifold, Manifold::EulerSpiral { .. } | Manifold::Torus { .. } | Manifold::Circle { .. }) {
                    return fail("noisy sweep supports euler_spiral, circle and torus".into());
                }
                if self.sweep.sizes.is_empty() {
                    return fail("sweep needs at least one subsample size".into());
                }
                let f = self.sweep.k_fraction;
                if !(0.0..1.0).contains(&f) {
                    return fail(format!("k_fraction {f} must lie in [0, 1)"));
                }
                for &m in &self.sweep.sizes {
                    if m > self.sweep.dense_n {
                        return fail(format!("subsample size {m} exceeds the dense sample {}", self.sweep.dense_n));
                    }
                    if self.sweep_k(m) >= m {
                        return fail(format!("k = {} must be smaller than the subsample size {m}", self.sweep_k(m)));
                    }
                }
                if self.sweep.dense_k >= self.sweep.dense_n {
                    return fail("dense_k must be smaller than dense_n".into());
                }
            }
            Experiment::Clustering => {
                if !from_file && !matches!(self.manifold, Manifold::Ellipses { .. }) {
                    return fail("synthetic clustering uses the ellipses generator".into());
                }
                if from_file && self.input.label_column.is_none() {
                    return fail("clustering from CSV needs input.label_column".into());
                }
                if self.clusters == 0 {
                    return fail("K must be at least 1".into());
                }
                if !from_file {
                    if self.n % 2 != 0 {
                        return fail(format!("n = {} must be even to split over two ellipses", self.n));
                    }
                    self.check_k_below(self.n)?;
                }
            }
            Experiment::Ckde | Experiment::Regression => {
                if !from_file && !matches!(self.manifold, Manifold::EulerSpiral { .. }) {
                    return fail("synthetic density and regression runs use the euler_spiral generator".into());
                }
                if from_file && self.input.response_column.is_none() {
                    return fail("CSV input needs input.response_column".into());
                }
                let f = self.apps.train_fraction;
                if !(f > 0.0 && f < 1.0) {
                    return fail(format!("train_fraction {f} must lie in (0, 1)"));
                }
                if !(self.apps.response_sigma >= 0.0) {
                    return fail("response_sigma must be nonnegative".into());
                }
                if self.apps.folds < 2 {
                    return fail("need at least 2 folds".into());
                }
                if !from_file {
                    let train = (self.n as f64 * f).round() as usize;
                    self.check_k_below(train)?;
                }
                self.apps.regression_grid.values()?;
                self.apps.h1_grid.values()?;
                self.apps.h2_grid.values()?;
            }
        }
        Ok(())
    }

    fn check_k_below(&self, n: usize) -> Result<()> {
        if self.k >= n {
            return Err(BenchError::Config(format!("k = {} must be smaller than n = {n}", self.k)));
        }
        Ok(())
    }

    fn validate_manifold(&self) -> Result<()> {
        let ok = match self.manifold {
            Manifold::EulerSpiral { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            Manifold::Circle { radius } => radius > 0.0 && radius.is_finite(),
            Manifold::Torus { major, minor } => minor > 0.0 && major > minor && major.is_finite(),
            Manifold::Ellipses {
                eccentricity,
                scale_ratio,
            } => (0.0..1.0).contains(&eccentricity) && scale_ratio > 0.0 && scale_ratio.is_finite(),
        };
        if !ok {
            return Err(BenchError::Config(format!(
                "invalid {} parameters: {:?}",
                self.manifold.name(),
                self.manifold
            )));
        }
        Ok(())
    }
}

/// Overlays `over` onto `base`, recursing into tables so partial sections work.
/// A tagged table (`kind = ...`) naming a different variant replaces the old one
/// wholesale rather than mixing fields of two variants.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o))
                if o.get("kind").is_none() || o.get("kind") == b.get("kind") =>
            {
                merge(b, o)
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Parses `"0..20"`, `"3"` or `"1,4,9"`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || BenchError::config(format!("cannot parse seed list {text:?}; use 0..20 or 1,2,3"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a >= b {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| bad()))
        .collect()
}

pub fn parse_estimators(text: &str) -> Result<Vec<Estimator>> {
    let mut out: Vec<Estimator> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
