//! Solvers for `dX = b(X) dt + dB^H`: Euler–Maruyama with a mollified
//! drift, the path-by-path pipeline through local times and nonlinear Young
//! integration, skew fBm, and the ensemble diagnostics built on them.

use std::fs;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::LocalTimeFunctional;
use crate::besov::{gaussian_semigroup, mollify, DriftSpec};
use crate::error::{domain, Error, Result};
use crate::fbm::{write_path_csv, FbmSampler, Grid, HurstParam, NoiseSource, PathLabel, RngSeed, SamplePath};
use crate::localtime::{occupation_density, SpaceGrid};
use crate::stats::{linear_fit, median, quantile, LinearFit};
use crate::young::{nly_residual, nly_solve_euler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Euler–Maruyama with `b^n = G_{1/n} b`.
    Mollified { n: u32 },
    PathByPath,
}

/// Space window of the path-by-path pipeline: `[min B − pad, max B + pad]`
/// split into `cells` cells (`0` picks one cell per time step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub pad: f64,
    pub cells: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy { pad: 1.0, cells: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub drift: DriftSpec,
    pub hurst: HurstParam,
    pub grid: Grid,
    pub x0: f64,
    pub method: Method,
    pub seed: RngSeed,
    pub noise: NoiseSource,
    pub window: WindowPolicy,
}

impl SolveConfig {
    pub fn new(drift: DriftSpec, hurst: HurstParam, grid: Grid, method: Method, seed: RngSeed) -> Self {
        SolveConfig {
            drift,
            hurst,
            grid,
            x0: 0.0,
            method,
            seed,
            noise: NoiseSource::default(),
            window: WindowPolicy::default(),
        }
    }

    fn check(&self) -> Result<()> {
        match self.method {
            Method::Mollified { n } if n == 0 => domain("mollification level must be at least 1"),
            _ => Ok(()),
        }
    }

    /// The driving path for this configuration.
    pub fn sample_noise(&self) -> Result<SamplePath> {
        Ok(FbmSampler::new(self.noise, self.grid, self.hurst)?.sample(self.seed))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Defect of `Y = X − B` as a nonlinear Young solution.
    pub nly_residual: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub cells: Option<usize>,
    /// Number of steps the drift was evaluated on.
    pub steps: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleMeta {
    pub method: Method,
    pub drift: String,
    pub hurst: f64,
    pub x0: f64,
    pub seed: u64,
    pub stream_id: u64,
}

/// `X = x0 + K + B` with its parts.
#[derive(Debug, Clone)]
pub struct SolutionBundle {
    pub x: SamplePath,
    pub b_path: SamplePath,
    pub k: SamplePath,
    pub meta: BundleMeta,
    pub diagnostics: Diagnostics,
}

impl SolutionBundle {
    fn assemble(cfg: &SolveConfig, b_path: &SamplePath, k: Vec<f64>, diagnostics: Diagnostics) -> Result<Self> {
        let x0 = cfg.x0;
        let x: Vec<f64> = k.iter().zip(b_path.values()).map(|(k, b)| x0 + k + b).collect();
        let grid = b_path.grid();
        Ok(SolutionBundle {
            x: SamplePath::new(grid, x, PathLabel::Solution)?,
            b_path: b_path.clone().with_label(PathLabel::Fbm),
            k: SamplePath::new(grid, k, PathLabel::DriftPart)?,
            meta: BundleMeta {
                method: cfg.method,
                drift: cfg.drift.describe(),
                hurst: cfg.hurst.value(),
                x0,
                seed: cfg.seed.seed,
                stream_id: cfg.seed.stream_id,
            },
            diagnostics,
        })
    }

    /// `x.csv`, `b.csv`, `k.csv` and `bundle.json` in `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_path_csv(&self.x, fs::File::create(dir.join("x.csv"))?)?;
        write_path_csv(&self.b_path, fs::File::create(dir.join("b.csv"))?)?;
        write_path_csv(&self.k, fs::File::create(dir.join("k.csv"))?)?;
        let meta = serde_json::json!({ "meta": self.meta, "diagnostics": self.diagnostics });
        fs::write(dir.join("bundle.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }
}

const BOUNDARY_NOTE: &str = "H = 1/4 is the boundary of the uniqueness regime";

fn hurst_warnings(h: HurstParam) -> Vec<String> {
    if h.value() == 0.25 {
        vec![BOUNDARY_NOTE.to_string()]
    } else {
        Vec::new()
    }
}

/// Euler–Maruyama `K_{k+1} = K_k + b̃(X_k) Δt`, `X_k = x0 + K_k + B_k`, with
/// an already smoothed drift.
fn euler_maruyama(cfg: &SolveConfig, smooth: &DriftSpec, b_path: &SamplePath) -> Result<SolutionBundle> {
    let dt = b_path.grid().dt();
    let b = b_path.values();
    let mut k = Vec::with_capacity(b.len());
    let mut acc = 0.0;
    k.push(0.0);
    for &bk in &b[..b.len() - 1] {
        acc += smooth.eval(cfg.x0 + acc + bk)? * dt;
        k.push(acc);
    }
    let diagnostics = Diagnostics { steps: b.len() - 1, warnings: hurst_warnings(cfg.hurst), ..Default::default() };
    SolutionBundle::assemble(cfg, b_path, k, diagnostics)
}

/// Euler–Maruyama with the mollified drift on the configured noise path.
pub fn solve_mollified(cfg: &SolveConfig) -> Result<SolutionBundle> {
    let b_path = cfg.sample_noise()?;
    solve_mollified_on(cfg, &b_path)
}

/// As [`solve_mollified`], on a given driving path.
pub fn solve_mollified_on(cfg: &SolveConfig, b_path: &SamplePath) -> Result<SolutionBundle> {
    cfg.check()?;
    let Method::Mollified { n } = cfg.method else {
        return domain("configuration does not ask for a mollified solve");
    };
    euler_maruyama(cfg, &mollify(&cfg.drift, n)?, b_path)
}

/// Path-by-path solve: local time of `B`, `A = T^B b`, Euler for
/// `Y = X − B` on the full grid, `X = Y + B`.
pub fn solve_pathbypath(cfg: &SolveConfig) -> Result<SolutionBundle> {
    let b_path = cfg.sample_noise()?;
    solve_pathbypath_on(cfg, &b_path)
}

/// As [`solve_pathbypath`], on a given driving path.
pub fn solve_pathbypath_on(cfg: &SolveConfig, b_path: &SamplePath) -> Result<SolutionBundle> {
    cfg.check()?;
    if cfg.method != Method::PathByPath {
        return domain("configuration does not ask for a path-by-path solve");
    }
    let (lo, hi) = b_path.min_max();
    let n = b_path.grid().n_steps();
    let cells = match cfg.window.cells {
        0 => (n + n % 2).max(64),
        c => c + c % 2,
    };
    let pad = cfg.window.pad;
    let space = SpaceGrid::new(lo - pad, hi + pad, cells)?;
    let lt = occupation_density(b_path, space)?;
    let a = LocalTimeFunctional::new(cfg.drift.clone(), &lt);
    let y = nly_solve_euler(&a, cfg.x0, b_path.grid())?;
    let residual = nly_residual(&a, &y)?;
    let k: Vec<f64> = y.values().iter().map(|v| v - cfg.x0).collect();
    let mut warnings = hurst_warnings(cfg.hurst);
    let space = lt.space_grid();
    // the reflected window is where a compactly supported drift acts on Y
    let (wl, wh) = (-space.x_max(), -space.x_min());
    let (yl, yh) = y.min_max();
    if yl < wl || yh > wh {
        warnings.push(format!("Y left the reflected window [{wl}, {wh}]"));
    }
    let diagnostics = Diagnostics {
        nly_residual: Some(residual),
        window: Some((space.x_min(), space.x_max())),
        cells: Some(space.m_cells()),
        steps: n,
        warnings,
    };
    SolutionBundle::assemble(cfg, b_path, k, diagnostics)
}

/// `a`-skew fBm: the path-by-path solution with drift `a·δ_0`.
pub fn skew_fbm(a: f64, hurst: HurstParam, grid: Grid, seed: RngSeed) -> Result<SolutionBundle> {
    let cfg = SolveConfig::new(DriftSpec::dirac(a), hurst, grid, Method::PathByPath, seed);
    let b_path = cfg.sample_noise()?;
    skew_fbm_on(a, hurst, &b_path, 0.0)
}

/// As [`skew_fbm`], on a given driving path and start point.
pub fn skew_fbm_on(a: f64, hurst: HurstParam, b_path: &SamplePath, x0: f64) -> Result<SolutionBundle> {
    let mut cfg = SolveConfig::new(DriftSpec::dirac(a), hurst, b_path.grid(), Method::PathByPath, RngSeed::new(0));
    cfg.x0 = x0;
    let mut bundle = solve_pathbypath_on(&cfg, b_path)?;
    if hurst.value() >= std::f64::consts::SQRT_2 - 1.0 {
        bundle.diagnostics.warnings.push("existence is only known for H < √2 − 1".into());
    }
    Ok(bundle)
}

/// Level `n ↦ b^{(n)} = G_v b` with `v = 1/(scale·n + offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSchedule {
    pub scale: f64,
    pub offset: f64,
}

impl MollifierSchedule {
    /// `v = 1/n`.
    pub fn reciprocal() -> Self {
        MollifierSchedule { scale: 1.0, offset: 0.0 }
    }

    /// `v = 1/(2n + 1)`.
    pub fn odd_reciprocal() -> Self {
        MollifierSchedule { scale: 2.0, offset: 1.0 }
    }

    pub fn variance(&self, n: u32) -> f64 {
        1.0 / (self.scale * n as f64 + self.offset)
    }

    pub fn apply(&self, b: &DriftSpec, n: u32) -> Result<DriftSpec> {
        gaussian_semigroup(b, self.variance(n))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: u32,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub family_a: MollifierSchedule,
    pub family_b: MollifierSchedule,
    pub levels: Vec<LevelSummary>,
    /// Median over seeds of `sup |B|`.
    pub median_sup_noise: f64,
    pub strictly_decreasing: bool,
    pub warnings: Vec<String>,
}

/// Sup-distances between Euler–Maruyama solutions under two mollifier
/// families at matched levels, on shared noise paths.
pub struct UniquenessSetup<'a> {
    pub drift: &'a DriftSpec,
    pub hurst: HurstParam,
    pub grid: Grid,
    pub noise: NoiseSource,
    pub x0: f64,
    pub seed: u64,
    pub paths: usize,
    pub levels: &'a [u32],
}

pub fn uniqueness_diagnostic(
    setup: &UniquenessSetup<'_>,
    family_a: MollifierSchedule,
    family_b: MollifierSchedule,
) -> Result<UniquenessReport> {
    if setup.paths == 0 || setup.levels.is_empty() {
        return domain("need at least one path and one level");
    }
    let sampler = FbmSampler::new(setup.noise, setup.grid, setup.hurst)?;
    let drifts = setup
        .levels
        .iter()
        .map(|&n| Ok((family_a.apply(setup.drift, n)?, family_b.apply(setup.drift, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let cfg = |seed| {
        let mut c = SolveConfig::new(setup.drift.clone(), setup.hurst, setup.grid, Method::Mollified { n: 1 }, seed);
        c.x0 = setup.x0;
        c.noise = setup.noise;
        c
    };
    let per_path: Vec<(f64, Vec<f64>)> = (0..setup.paths)
        .into_par_iter()
        .map(|i| {
            let seed = RngSeed::new(setup.seed).with_stream(i as u64);
            let b = sampler.sample(seed);
            let c = cfg(seed);
            let d = drifts
                .iter()
                .map(|(da, db)| {
                    let xa = euler_maruyama(&c, da, &b)?;
                    let xb = euler_maruyama(&c, db, &b)?;
                    xa.x.sup_distance(&xb.x)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((b.sup_norm(), d))
        })
        .collect::<Result<Vec<_>>>()?;
    let sups: Vec<f64> = per_path.iter().map(|p| p.0).collect();
    let levels: Vec<LevelSummary> = setup
        .levels
        .iter()
        .enumerate()
        .map(|(l, &level)| {
            let d: Vec<f64> = per_path.iter().map(|p| p.1[l]).collect();
            LevelSummary { level, median: median(&d), q10: quantile(&d, 0.1), q90: quantile(&d, 0.9), distances: d }
        })
        .collect();
    Ok(UniquenessReport {
        family_a,
        family_b,
        strictly_decreasing: levels.windows(2).all(|w| w[1].median < w[0].median),
        levels,
        median_sup_noise: median(&sups),
        warnings: hurst_warnings(setup.hurst),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub moment: f64,
    pub lags: Vec<f64>,
    pub moments: Vec<f64>,
    pub fit: Option<LinearFit>,
    /// `slope / moment`.
    pub exponent: Option<f64>,
    pub degenerate: bool,
    pub paths: usize,
}

/// Streaming estimate of `E|K_t − K_s|^m` over lags, averaged over anchors
/// `s` spaced by half a lag.
#[derive(Debug)]
pub struct RegularityAccumulator {
    moment: f64,
    lags: Vec<usize>,
    sums: Vec<f64>,
    counts: Vec<usize>,
    paths: usize,
    grid: Option<Grid>,
}

impl RegularityAccumulator {
    pub fn new(moment: f64, lags: &[usize]) -> Result<Self> {
        if lags.len() < 2 || lags.contains(&0) {
            return Err(Error::Estimation("need at least two positive lags".into()));
        }
        if !(moment > 0.0) {
            return domain(format!("moment must be positive, got {moment}"));
        }
        Ok(RegularityAccumulator {
            moment,
            lags: lags.to_vec(),
            sums: vec![0.0; lags.len()],
            counts: vec![0; lags.len()],
            paths: 0,
            grid: None,
        })
    }

    pub fn add(&mut self, k: &SamplePath) -> Result<()> {
        let g = k.grid();
        if *self.grid.get_or_insert(g) != g {
            return domain("all paths must share the grid");
        }
        let n = g.n_steps();
        let v = k.values();
        for (i, &lag) in self.lags.iter().enumerate() {
            if lag > n {
                return domain(format!("lag {lag} exceeds the {n} grid steps"));
            }
            let stride = (lag / 2).max(1);
            for s in (0..=n - lag).step_by(stride) {
                self.sums[i] += (v[s + lag] - v[s]).abs().powf(self.moment);
                self.counts[i] += 1;
            }
        }
        self.paths += 1;
        Ok(())
    }

    pub fn finish(&self) -> Result<RegularityReport> {
        let g = self.grid.ok_or_else(|| Error::Estimation("empty ensemble".into()))?;
        let lags: Vec<f64> = self.lags.iter().map(|&l| l as f64 * g.dt()).collect();
        let moments: Vec<f64> = self.sums.iter().zip(&self.counts).map(|(s, &c)| s / c as f64).collect();
        let loggable = moments.iter().all(|m| *m > 0.0 && m.is_finite());
        let fit = if loggable {
            linear_fit(&lags.iter().map(|l| l.ln()).collect::<Vec<_>>(), &moments.iter().map(|m| m.ln()).collect::<Vec<_>>())
        } else {
            None
        };
        Ok(RegularityReport {
            moment: self.moment,
            lags,
            moments,
            exponent: fit.map(|f| f.slope / self.moment),
            fit,
            degenerate: fit.is_none(),
            paths: self.paths,
        })
    }
}

/// Hölder-in-`L^m` exponent of `K = X − B` over an ensemble of at least 100
/// bundles.
pub fn regularity_scan(bundles: &[SolutionBundle], moment: f64, lags: &[usize]) -> Result<RegularityReport> {
    if bundles.len() < 100 {
        return Err(Error::Precondition(format!("need at least 100 bundles, got {}", bundles.len())));
    }
    let acc = Mutex::new(RegularityAccumulator::new(moment, lags)?);
    bundles.par_iter().try_for_each(|b| acc.lock().unwrap().add(&b.k))?;
    acc.into_inner().unwrap().finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(drift: DriftSpec, method: Method) -> SolveConfig {
        let mut c = SolveConfig::new(drift, HurstParam::new(0.3).unwrap(), Grid::new(1.0, 256).unwrap(), method, RngSeed::new(3));
        c.noise = NoiseSource::Circulant;
        c
    }

    #[test]
    fn zero_drift_reproduces_noise() {
        for m in [Method::Mollified { n: 4 }, Method::PathByPath] {
            let mut c = cfg(DriftSpec::zero(), m);
            c.x0 = 0.4;
            let s = if m == Method::PathByPath { solve_pathbypath(&c) } else { solve_mollified(&c) }.unwrap();
            for (x, b) in s.x.values().iter().zip(s.b_path.values()) {
                assert_eq!(x.to_bits(), (0.4 + 0.0 + b).to_bits());
            }
        }
    }

    #[test]
    fn method_mismatch_is_rejected() {
        let c = cfg(DriftSpec::zero(), Method::PathByPath);
        assert!(solve_mollified(&c).is_err());
        let c = cfg(DriftSpec::zero(), Method::Mollified { n: 0 });
        assert!(solve_mollified(&c).is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(MollifierSchedule::reciprocal().variance(8), 0.125);
        assert_eq!(MollifierSchedule::odd_reciprocal().variance(8), 1.0 / 17.0);
    }
}
