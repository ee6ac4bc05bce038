//! Fractional Brownian motion: grids, paths, covariance, Volterra kernel and
//! samplers.

mod io;
mod kernel;
mod sampling;

pub use io::{read_path_binary, read_path_csv, write_path_binary, write_path_csv, BinaryHeader};
pub use kernel::{conditional_variance, kernel_kh, two_time_variant, VolterraKernel};
pub use sampling::{
    bm_to_fbm, conditional_mean, sample_bm, sample_fbm_cholesky, sample_fbm_circulant,
    sample_fbm_volterra, CholeskySampler, CirculantSampler, FbmSampler, NoiseSource,
    VolterraSampler,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Uniform partition `t_k = k·T/n` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    t_end: f64,
    n_steps: usize,
}

impl Grid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return domain(format!("grid end time must be positive, got {t_end}"));
        }
        if n_steps == 0 {
            return domain("grid needs at least one step");
        }
        Ok(Grid { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        // exact at the right end regardless of rounding in dt
        if k == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.t_end / self.n_steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Index of a grid time; times off the lattice are a domain error.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let k = x.round();
        if t < 0.0 || k > self.n_steps as f64 || (x - k).abs() > 1e-9 * x.max(1.0) {
            return domain(format!("time {t} is not a point of the grid"));
        }
        Ok(k as usize)
    }

    /// Coarsening by an integer factor that divides `n_steps`.
    pub fn coarsen(&self, factor: usize) -> Result<Grid> {
        if factor == 0 || self.n_steps % factor != 0 {
            return domain(format!("factor {factor} does not divide {} steps", self.n_steps));
        }
        Grid::new(self.t_end, self.n_steps / factor)
    }
}

/// Hurst index restricted to the rough regime `0 < H ≤ 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.5) {
            return domain(format!("Hurst index must lie in (0, 1/2], got {h}"));
        }
        Ok(HurstParam(h))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        HurstParam::new(h)
    }
}

impl From<HurstParam> for f64 {
    fn from(h: HurstParam) -> f64 {
        h.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathLabel {
    Fbm,
    Bm,
    Solution,
    DriftPart,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    grid: Grid,
    values: Vec<f64>,
    label: PathLabel,
}

impl SamplePath {
    pub fn new(grid: Grid, values: Vec<f64>, label: PathLabel) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 {
            return domain(format!(
                "path has {} values but the grid has {} points",
                values.len(),
                grid.n_steps() + 1
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("path value at index {i} is not finite"));
        }
        Ok(SamplePath { grid, values, label })
    }

    /// Path sampled from a function of time.
    pub fn from_fn(grid: Grid, label: PathLabel, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.times().into_iter().map(f).collect();
        SamplePath::new(grid, values, label)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        SamplePath::new(grid, vec![c; grid.n_steps() + 1], PathLabel::Generic)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn label(&self) -> PathLabel {
        self.label
    }

    pub fn with_label(mut self, label: PathLabel) -> Self {
        self.label = label;
        self
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn map(&self, label: PathLabel, f: impl Fn(f64) -> f64) -> Result<SamplePath> {
        SamplePath::new(self.grid, self.values.iter().map(|&v| f(v)).collect(), label)
    }

    /// Sup distance to a path on the same grid.
    pub fn sup_distance(&self, other: &SamplePath) -> Result<f64> {
        if self.grid != other.grid {
            return domain("paths live on different grids");
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Restriction to every `factor`-th grid point.
    pub fn subsample(&self, factor: usize) -> Result<SamplePath> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        SamplePath::new(grid, values, self.label)
    }
}

/// A Brownian path together with its Volterra transform.
#[derive(Debug, Clone)]
pub struct PathPair {
    pub bm: SamplePath,
    pub fbm: SamplePath,
    pub hurst: HurstParam,
}

impl PathPair {
    /// Sup distance between the stored fBm path and a fresh application of
    /// the kernel quadrature to the stored Brownian increments.
    pub fn transform_residual(&self) -> Result<f64> {
        let again = bm_to_fbm(&self.bm, self.hurst)?;
        again.sup_distance(&self.fbm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream_id: 0 }
    }

    pub fn with_stream(self, stream_id: u64) -> Self {
        RngSeed { stream_id, ..self }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// `½(t^{2H} + s^{2H} − |t−s|^{2H})`.
pub fn fbm_covariance(s: f64, t: f64, h: HurstParam) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return domain(format!("covariance needs nonnegative times, got ({s}, {t})"));
    }
    let two_h = 2.0 * h.value();
    Ok(0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// Runs `f` on `n` independent substreams of `seed` in parallel; stream `i`
/// is the `i`-th output.
pub fn ensemble<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(RngSeed) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(RngSeed::new(seed).with_stream(i as u64)))
        .collect()
}
