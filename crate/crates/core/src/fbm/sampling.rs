use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

use super::kernel::VolterraKernel;
use super::{fbm_covariance, Grid, HurstParam, PathLabel, PathPair, RngSeed, SamplePath};

pub const CHOLESKY_MAX_STEPS: usize = 4096;
const EMBEDDING_TOL: f64 = 1e-10;

fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for dx in increments {
        acc += dx;
        out.push(acc);
    }
    out
}

/// Standard Brownian motion on the grid.
pub fn sample_bm(grid: Grid, seed: RngSeed) -> SamplePath {
    let sd = grid.dt().sqrt();
    let mut rng = seed.rng();
    let inc: Vec<f64> = normals(&mut rng, grid.n_steps()).into_iter().map(|z| sd * z).collect();
    SamplePath::new(grid, cumulative(&inc), PathLabel::Bm).expect("finite Gaussian path")
}

/// Exact sampler through the Cholesky factor of the covariance on `t_1..t_n`.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    grid: Grid,
    lower: DMatrix<f64>,
}

impl CholeskySampler {
    pub fn new(grid: Grid, h: HurstParam) -> Result<Self> {
        Self::from_covariance(grid, |s, t| fbm_covariance(s, t, h).expect("grid times are nonnegative"))
    }

    /// Factorizes an arbitrary covariance function sampled on the grid.
    pub fn from_covariance(grid: Grid, cov: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.n_steps();
        if n > CHOLESKY_MAX_STEPS {
            return domain(format!(
                "Cholesky sampling is limited to {CHOLESKY_MAX_STEPS} steps, got {n}"
            ));
        }
        let times = grid.times();
        let c = DMatrix::from_fn(n, n, |i, j| cov(times[i + 1], times[j + 1]));
        let chol = c.cholesky().ok_or_else(|| {
            Error::Factorization(format!("covariance on {n} points is not positive definite"))
        })?;
        Ok(CholeskySampler { grid, lower: chol.l() })
    }

    pub fn sample(&self, seed: RngSeed) -> SamplePath {
        let n = self.grid.n_steps();
        let z = DVector::from_vec(normals(&mut seed.rng(), n));
        let x = &self.lower * z;
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        values.extend(x.iter());
        SamplePath::new(self.grid, values, PathLabel::Fbm).expect("finite Gaussian path")
    }
}

pub fn sample_fbm_cholesky(grid: Grid, h: HurstParam, seed: RngSeed) -> Result<SamplePath> {
    Ok(CholeskySampler::new(grid, h)?.sample(seed))
}

/// Davies–Harte sampler: the increment autocovariance is embedded in a
/// circulant matrix of size `2n` and diagonalized by the FFT.
#[derive(Clone)]
pub struct CirculantSampler {
    grid: Grid,
    /// `sqrt(λ_k / M)` for the circulant eigenvalues `λ_k`.
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler").field("grid", &self.grid).finish()
    }
}

impl CirculantSampler {
    pub fn new(grid: Grid, h: HurstParam) -> Result<Self> {
        let n = grid.n_steps();
        if !n.is_power_of_two() {
            return domain(format!("circulant sampling needs a power-of-two step count, got {n}"));
        }
        let two_h = 2.0 * h.value();
        let var = grid.dt().powf(two_h);
        let gamma = |k: usize| {
            let k = k as f64;
            0.5 * var * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
        };
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|i| Complex::new(gamma(if i <= n { i } else { m - i }), 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let min_eigenvalue = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -EMBEDDING_TOL {
            return Err(Error::Embedding { min_eigenvalue });
        }
        let scale = row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect();
        Ok(CirculantSampler { grid, scale, fft })
    }

    pub fn sample(&self, seed: RngSeed) -> SamplePath {
        let n = self.grid.n_steps();
        let mut rng = seed.rng();
        let mut buf: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|s| {
                let re = rng.sample::<f64, _>(StandardNormal);
                let im = rng.sample::<f64, _>(StandardNormal);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        let inc: Vec<f64> = buf[..n].iter().map(|c| c.re).collect();
        SamplePath::new(self.grid, cumulative(&inc), PathLabel::Fbm).expect("finite Gaussian path")
    }
}

pub fn sample_fbm_circulant(grid: Grid, h: HurstParam, seed: RngSeed) -> Result<SamplePath> {
    Ok(CirculantSampler::new(grid, h)?.sample(seed))
}

/// Discrete Volterra transform `B_{t_k} = Σ_{j<k} K̄(t_k, cell_j) ΔW_j`.
///
/// The lower-triangular weight table is built once per (grid, H) and holds
/// `k(k+1)/2` entries up to row `k = n`.
#[derive(Debug, Clone)]
pub struct VolterraSampler {
    grid: Grid,
    hurst: HurstParam,
    /// row `k` (times `t_k`, `k ≥ 1`) starts at `k(k-1)/2`
    weights: Vec<f64>,
}

impl VolterraSampler {
    pub fn new(grid: Grid, hurst: HurstParam) -> Result<Self> {
        let n = grid.n_steps();
        if hurst.is_brownian() {
            return Ok(VolterraSampler { grid, hurst, weights: Vec::new() });
        }
        let kernel = VolterraKernel::new(hurst)?;
        let scale = grid.dt().powf(hurst.value() - 0.5);
        let rows: Vec<Vec<f64>> = (1..=n)
            .into_par_iter()
            .map(|k| (0..k).map(|j| scale * kernel.unit_cell_weight(k, j)).collect())
            .collect();
        Ok(VolterraSampler { grid, hurst, weights: rows.concat() })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    /// Weights of row `k` against the first `k` Brownian increments.
    pub fn row(&self, k: usize) -> &[f64] {
        let start = k * (k - 1) / 2;
        &self.weights[start..start + k]
    }

    /// Applies the transform to Brownian increments `ΔW_0..ΔW_{n-1}`.
    pub fn apply(&self, dw: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n_steps();
        if dw.len() != n {
            return domain(format!("expected {n} increments, got {}", dw.len()));
        }
        if self.hurst.is_brownian() {
            return Ok(cumulative(dw));
        }
        let mut out = vec![0.0; n + 1];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = self.row(k).iter().zip(dw).map(|(w, x)| w * x).sum();
        }
        Ok(out)
    }

    pub fn sample(&self, seed: RngSeed) -> PathPair {
        let bm = sample_bm(self.grid, seed);
        let fbm = self.apply(&bm.increments()).expect("increments match the grid");
        PathPair {
            fbm: SamplePath::new(self.grid, fbm, PathLabel::Fbm).expect("finite transform"),
            bm,
            hurst: self.hurst,
        }
    }

    /// `Σ_{j<ks} K̄(t_kt, cell_j) ΔW_j`, the discrete `E^{t_ks}[B_{t_kt}]`.
    pub fn conditional_mean(&self, dw: &[f64], ks: usize, kt: usize) -> f64 {
        if self.hurst.is_brownian() {
            return dw[..ks].iter().sum();
        }
        if kt == 0 {
            return 0.0;
        }
        self.row(kt)[..ks].iter().zip(dw).map(|(w, x)| w * x).sum()
    }
}

pub fn sample_fbm_volterra(grid: Grid, h: HurstParam, seed: RngSeed) -> Result<PathPair> {
    Ok(VolterraSampler::new(grid, h)?.sample(seed))
}

/// Volterra transform of a given Brownian path.
pub fn bm_to_fbm(w: &SamplePath, h: HurstParam) -> Result<SamplePath> {
    let sampler = VolterraSampler::new(w.grid(), h)?;
    let values = sampler.apply(&w.increments())?;
    SamplePath::new(w.grid(), values, PathLabel::Fbm)
}

/// `E^s[B_t]`: the kernel quadrature restricted to Brownian increments up to `s`.
pub fn conditional_mean(pair: &PathPair, s: f64, t: f64) -> Result<f64> {
    let grid = pair.bm.grid();
    let ks = grid.index_of(s)?;
    let kt = grid.index_of(t)?;
    if ks > kt {
        return domain(format!("conditional mean needs s ≤ t, got s={s}, t={t}"));
    }
    if ks == kt {
        return Ok(pair.fbm.values()[kt]);
    }
    let dw = pair.bm.increments();
    if pair.hurst.is_brownian() {
        return Ok(pair.bm.values()[ks]);
    }
    let kernel = VolterraKernel::new(pair.hurst)?;
    let scale = grid.dt().powf(pair.hurst.value() - 0.5);
    Ok((0..ks).map(|j| scale * kernel.unit_cell_weight(kt, j) * dw[j]).sum())
}

/// Which sampler produces the driving noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSource {
    #[default]
    Volterra,
    Circulant,
    Cholesky,
}

/// A prepared sampler of any kind.
#[derive(Debug, Clone)]
pub enum FbmSampler {
    Volterra(VolterraSampler),
    Circulant(CirculantSampler),
    Cholesky(CholeskySampler),
}

impl FbmSampler {
    pub fn new(source: NoiseSource, grid: Grid, h: HurstParam) -> Result<Self> {
        Ok(match source {
            NoiseSource::Volterra => FbmSampler::Volterra(VolterraSampler::new(grid, h)?),
            NoiseSource::Circulant => FbmSampler::Circulant(CirculantSampler::new(grid, h)?),
            NoiseSource::Cholesky => FbmSampler::Cholesky(CholeskySampler::new(grid, h)?),
        })
    }

    pub fn sample(&self, seed: RngSeed) -> SamplePath {
        match self {
            FbmSampler::Volterra(s) => s.sample(seed).fbm,
            FbmSampler::Circulant(s) => s.sample(seed),
            FbmSampler::Cholesky(s) => s.sample(seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_volterra_is_identity() {
        let g = Grid::new(1.0, 64).unwrap();
        let pair = sample_fbm_volterra(g, HurstParam::new(0.5).unwrap(), RngSeed::new(3)).unwrap();
        assert_eq!(pair.bm.values(), pair.fbm.values());
    }

    #[test]
    fn same_seed_same_bytes() {
        let g = Grid::new(1.0, 32).unwrap();
        let h = HurstParam::new(0.3).unwrap();
        let a = sample_fbm_circulant(g, h, RngSeed::new(11)).unwrap();
        let b = sample_fbm_circulant(g, h, RngSeed::new(11)).unwrap();
        assert_eq!(a, b);
        let c = sample_fbm_cholesky(g, h, RngSeed::new(11)).unwrap();
        let d = sample_fbm_cholesky(g, h, RngSeed::new(11)).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn guards() {
        let h = HurstParam::new(0.3).unwrap();
        assert!(sample_fbm_circulant(Grid::new(1.0, 12).unwrap(), h, RngSeed::new(0)).is_err());
        assert!(sample_fbm_cholesky(Grid::new(1.0, 5000).unwrap(), h, RngSeed::new(0)).is_err());
    }

    #[test]
    fn conditional_mean_endpoints() {
        let g = Grid::new(1.0, 16).unwrap();
        let h = HurstParam::new(0.3).unwrap();
        let pair = sample_fbm_volterra(g, h, RngSeed::new(5)).unwrap();
        assert_eq!(conditional_mean(&pair, 0.5, 0.5).unwrap(), pair.fbm.values()[8]);
        assert_eq!(conditional_mean(&pair, 0.0, 0.75).unwrap(), 0.0);
        assert!(conditional_mean(&pair, 0.3, 0.75).is_err());
        let sampler = VolterraSampler::new(g, h).unwrap();
        let dw = pair.bm.increments();
        let full = sampler.conditional_mean(&dw, 12, 12);
        assert!((full - pair.fbm.values()[12]).abs() < 1e-14);
    }

    #[test]
    fn conditional_mean_brownian_is_martingale() {
        let g = Grid::new(1.0, 16).unwrap();
        let pair = sample_fbm_volterra(g, HurstParam::new(0.5).unwrap(), RngSeed::new(5)).unwrap();
        assert_eq!(conditional_mean(&pair, 0.25, 0.75).unwrap(), pair.bm.values()[4]);
    }

    #[test]
    fn non_positive_definite_covariance_is_reported() {
        let g = Grid::new(1.0, 4).unwrap();
        let r = CholeskySampler::from_covariance(g, |s, t| if s == t { -1.0 } else { 0.0 });
        assert!(matches!(r, Err(Error::Factorization(_))));
    }
}
