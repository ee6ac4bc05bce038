//! Exact occupation densities of piecewise-linear paths and Hölder-exponent
//! scans of local-time ensembles.
//!
//! Positions are handled in cell units relative to the window center,
//! `u = (x - c)/Δx`, so that cell edges are integers and a mirrored path on
//! the mirrored window produces bit-for-bit mirrored occupation times.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fbm::{Grid, SamplePath};
use crate::quad::{integrate, Tolerance};
use crate::stats::{linear_fit, median, LinearFit};

/// Cells `[x_min + jΔx, x_min + (j+1)Δx)`, `j = 0..m`, with `m` even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    x_min: f64,
    x_max: f64,
    m_cells: usize,
}

impl SpaceGrid {
    pub fn new(x_min: f64, x_max: f64, m_cells: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return domain(format!("space grid needs x_min < x_max, got [{x_min}, {x_max}]"));
        }
        if m_cells == 0 || m_cells % 2 != 0 {
            return domain(format!("space grid needs a positive even cell count, got {m_cells}"));
        }
        let g = SpaceGrid { x_min, x_max, m_cells };
        if !(g.dx() > 0.0) {
            return domain("zero-width cells");
        }
        Ok(g)
    }

    /// Default window: `m` cells covering `[min − 3Δx, max + 3Δx]`.
    pub fn covering(path: &SamplePath, m_cells: usize) -> Result<Self> {
        let (lo, hi) = path.min_max();
        Self::covering_range(lo, hi, m_cells, 3)
    }

    /// `m` cells of which `pad` on each side lie outside `[lo, hi]`.
    pub fn covering_range(lo: f64, hi: f64, m_cells: usize, pad: usize) -> Result<Self> {
        if m_cells <= 2 * pad {
            return domain(format!("{m_cells} cells cannot hold {pad} padding cells per side"));
        }
        let inner = (m_cells - 2 * pad) as f64;
        let dx = if hi > lo { (hi - lo) / inner } else { 1.0 / inner };
        let pad = pad as f64 * dx;
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        SpaceGrid::new(lo - pad, hi + pad, m_cells)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn m_cells(&self) -> usize {
        self.m_cells
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.m_cells as f64
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }

    /// Position in cell units relative to the center.
    pub fn to_u(&self, x: f64) -> f64 {
        (x - self.center()) / self.dx()
    }

    pub fn cell_lower(&self, j: usize) -> f64 {
        self.center() + (j as f64 - (self.m_cells / 2) as f64) * self.dx()
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        self.center() + (j as f64 + 0.5 - (self.m_cells / 2) as f64) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.m_cells).map(|j| self.cell_center(j)).collect()
    }

    /// Cell containing `x`, if any.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let j = self.to_u(x).floor() + (self.m_cells / 2) as f64;
        if j >= 0.0 && j < self.m_cells as f64 {
            Some(j as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, lo: f64, hi: f64) -> bool {
        let half = (self.m_cells / 2) as f64;
        self.to_u(lo) >= -half && self.to_u(hi) <= half
    }

    /// Window reflected through the origin, `[−x_max, −x_min]`.
    pub fn reflected(&self) -> SpaceGrid {
        SpaceGrid { x_min: -self.x_max, x_max: -self.x_min, m_cells: self.m_cells }
    }

    /// Same cells extended by `k` on each side.
    pub fn widened(&self, k: usize) -> SpaceGrid {
        let dx = self.dx();
        let c = self.center();
        let half = (self.m_cells / 2 + k) as f64 * dx;
        SpaceGrid { x_min: c - half, x_max: c + half, m_cells: self.m_cells + 2 * k }
    }
}

/// Occupation time of one time step, spread over a contiguous run of cells.
#[derive(Debug, Clone, PartialEq)]
struct StepOccupation {
    first: usize,
    times: Vec<f64>,
}

/// Local time `L_{t_k}(x_j)` of the piecewise-linear interpolant of a path.
///
/// Stored step by step: `L_{t_k}(j) = Σ_{i<k} occ_i(j) / Δx`.
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    time_grid: Grid,
    space_grid: SpaceGrid,
    steps: Vec<StepOccupation>,
    path: Vec<f64>,
}

fn step_occupation(a: f64, b: f64, dt: f64, m: usize) -> StepOccupation {
    let half = (m / 2) as f64;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo == hi {
        let f = lo.floor();
        let j = (f + half) as usize;
        // a resting point on an interior edge is shared by both cells
        if f == lo && j > 0 && j < m {
            return StepOccupation { first: j - 1, times: vec![0.5 * dt, 0.5 * dt] };
        }
        return StepOccupation { first: j.min(m - 1), times: vec![dt] };
    }
    let first = lo.floor();
    let last = hi.ceil() - 1.0;
    let len = hi - lo;
    let times = (first as i64..=last as i64)
        .map(|e| {
            let e = e as f64;
            let overlap = hi.min(e + 1.0) - lo.max(e);
            dt * overlap / len
        })
        .collect();
    StepOccupation { first: (first + half) as usize, times }
}

/// Occupation density of the interpolated path; the window is widened by
/// whole cells if the path leaves it.
pub fn occupation_density(path: &SamplePath, space: SpaceGrid) -> Result<LocalTimeField> {
    let (lo, hi) = path.min_max();
    let mut space = space;
    if !space.contains(lo, hi) {
        let half = (space.m_cells / 2) as f64;
        let over = (space.to_u(hi) - half).max(-half - space.to_u(lo));
        space = space.widened(over.ceil() as usize + 1);
    }
    let grid = path.grid();
    let dt = grid.dt();
    let m = space.m_cells;
    let u: Vec<f64> = path.values().iter().map(|&x| space.to_u(x)).collect();
    let steps = u.windows(2).map(|w| step_occupation(w[0], w[1], dt, m)).collect();
    Ok(LocalTimeField { time_grid: grid, space_grid: space, steps, path: path.values().to_vec() })
}

impl LocalTimeField {
    pub fn time_grid(&self) -> Grid {
        self.time_grid
    }

    pub fn space_grid(&self) -> SpaceGrid {
        self.space_grid
    }

    /// Values of the underlying path.
    pub fn path_values(&self) -> &[f64] {
        &self.path
    }

    /// First cell and occupation times (not divided by Δx) of step `k`.
    pub fn step(&self, k: usize) -> (usize, &[f64]) {
        let s = &self.steps[k];
        (s.first, &s.times)
    }

    /// Occupation time of step `k` in cell `j`.
    pub fn step_cell(&self, k: usize, j: usize) -> f64 {
        let s = &self.steps[k];
        if j >= s.first && j < s.first + s.times.len() {
            s.times[j - s.first]
        } else {
            0.0
        }
    }

    /// `L_{t_{k1}} − L_{t_{k0}}` on all cells.
    pub fn increment_row(&self, k0: usize, k1: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.space_grid.m_cells];
        let inv = 1.0 / self.space_grid.dx();
        for s in &self.steps[k0..k1] {
            for (r, t) in row[s.first..s.first + s.times.len()].iter_mut().zip(&s.times) {
                *r += t;
            }
        }
        row.iter_mut().for_each(|r| *r *= inv);
        row
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        self.increment_row(0, k)
    }

    /// `L_{t_{k1}}(j) − L_{t_{k0}}(j)`.
    pub fn cell_increment(&self, k0: usize, k1: usize, j: usize) -> f64 {
        (k0..k1).map(|k| self.step_cell(k, j)).sum::<f64>() * (1.0 / self.space_grid.dx())
    }

    pub fn value(&self, k: usize, j: usize) -> f64 {
        self.cell_increment(0, k, j)
    }

    /// `Σ_j L_{t_k}(x_j) Δx`.
    pub fn total_mass(&self, k: usize) -> f64 {
        self.steps[..k].iter().flat_map(|s| s.times.iter()).sum()
    }

    /// Rows at every `stride`-th time, always including the last.
    pub fn rows(&self, stride: usize) -> Vec<(usize, Vec<f64>)> {
        let n = self.time_grid.n_steps();
        let stride = stride.max(1);
        let mut ks: Vec<usize> = (0..=n).step_by(stride).collect();
        if *ks.last().unwrap() != n {
            ks.push(n);
        }
        let mut acc = vec![0.0; self.space_grid.m_cells];
        let mut done = 0;
        let inv = 1.0 / self.space_grid.dx();
        ks.into_iter()
            .map(|k| {
                for s in &self.steps[done..k] {
                    for (r, t) in acc[s.first..s.first + s.times.len()].iter_mut().zip(&s.times) {
                        *r += t;
                    }
                }
                done = k;
                (k, acc.iter().map(|v| v * inv).collect())
            })
            .collect()
    }

    /// Long-format CSV `t,x,L` of the rows at every `stride`-th time.
    pub fn write_csv<W: Write>(&self, stride: usize, mut out: W) -> Result<()> {
        writeln!(out, "t,x,L")?;
        let centers = self.space_grid.centers();
        for (k, row) in self.rows(stride) {
            let t = self.time_grid.time(k);
            for (x, l) in centers.iter().zip(&row) {
                writeln!(out, "{t},{x},{l}")?;
            }
        }
        Ok(())
    }

    /// Little-endian block: `n_steps, T, x_min, x_max, m_cells, stride`
    /// followed by the rows of [`LocalTimeField::rows`].
    pub fn write_binary<W: Write>(&self, stride: usize, mut out: W) -> Result<()> {
        out.write_all(&(self.time_grid.n_steps() as u64).to_le_bytes())?;
        out.write_all(&self.time_grid.t_end().to_le_bytes())?;
        out.write_all(&self.space_grid.x_min.to_le_bytes())?;
        out.write_all(&self.space_grid.x_max.to_le_bytes())?;
        out.write_all(&(self.space_grid.m_cells as u64).to_le_bytes())?;
        out.write_all(&(stride.max(1) as u64).to_le_bytes())?;
        for (_, row) in self.rows(stride) {
            for v in row {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Test function for the occupation formula.
pub trait SpaceFunction: Sync {
    fn eval(&self, x: f64) -> f64;

    /// `∫_a^b f`, adaptive quadrature by default.
    fn integral(&self, a: f64, b: f64) -> f64 {
        integrate(|x| self.eval(x), a, b, Tolerance { abs: 1e-15, rel: 1e-13 })
            .expect("test function must be integrable")
    }
}

/// Closure wrapper.
pub struct FnSpace<F: Fn(f64) -> f64 + Sync>(pub F);

impl<F: Fn(f64) -> f64 + Sync> SpaceFunction for FnSpace<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Indicator of a union of disjoint half-open intervals `[lo, hi)`.
pub struct IntervalIndicator(pub Vec<(f64, f64)>);

impl SpaceFunction for IntervalIndicator {
    fn eval(&self, x: f64) -> f64 {
        if self.0.iter().any(|&(a, b)| a <= x && x < b) {
            1.0
        } else {
            0.0
        }
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.0.iter().map(|&(lo, hi)| (b.min(hi) - a.max(lo)).max(0.0)).sum()
    }
}

/// `sup_k |∫_0^{t_k} f(w_r) dr − Σ_j f(x_j) L_{t_k}(x_j) Δx|`.
///
/// The time integral is exact for the interpolated path (each step is a
/// uniform sweep of `[w_k, w_{k+1}]`); the space side is the cell sum with
/// `f` at the grid points `x_j = x_min + jΔx`, first order in `Δx` for
/// Lipschitz `f`.
pub fn occupation_formula_residual(
    path: &SamplePath,
    field: &LocalTimeField,
    f: &dyn SpaceFunction,
) -> Result<f64> {
    if path.grid() != field.time_grid || path.values() != field.path.as_slice() {
        return domain("field was not built from this path");
    }
    let dt = path.grid().dt();
    let fc: Vec<f64> = (0..field.space_grid.m_cells).map(|j| f.eval(field.space_grid.cell_lower(j))).collect();
    let (mut lhs, mut rhs, mut worst) = (0.0f64, 0.0f64, 0.0f64);
    for (k, w) in path.values().windows(2).enumerate() {
        let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
        lhs += if a == b { dt * f.eval(a) } else { dt * f.integral(a, b) / (b - a) };
        let (first, times) = field.step(k);
        rhs += times.iter().zip(&fc[first..]).map(|(t, v)| t * v).sum::<f64>();
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    /// `E|L_{s,t}(x)|^n` against `t − s` at the occupation median `x` of
    /// the window `[s, t]`.
    Time,
    /// `E|L_{0,T}(y) − L_{0,T}(x)|^n` against `|y − x|`.
    Space,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderScanConfig {
    pub mode: ScanMode,
    pub moment: f64,
    /// Lags in time steps (time mode) or cells (space mode).
    pub lags: Vec<usize>,
    /// Windows per lag and path (time mode) or base levels per path (space mode).
    pub anchors: usize,
    /// Time mode: the local time is averaged over `2·band + 1` cells
    /// centred on the level.
    #[serde(default)]
    pub band: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionReport {
    pub mode: ScanMode,
    pub moment: f64,
    pub lags: Vec<f64>,
    pub moments: Vec<f64>,
    pub samples: Vec<usize>,
    pub fit: Option<LinearFit>,
    /// `slope / moment`.
    pub exponent: Option<f64>,
    pub degenerate: bool,
}

/// Streaming accumulator so that ensembles need not be held in memory.
#[derive(Debug, Clone)]
pub struct HolderScanAccumulator {
    cfg: HolderScanConfig,
    sums: Vec<f64>,
    counts: Vec<usize>,
    first_means: Option<Vec<f64>>,
    varied: bool,
    members: usize,
    physical_lags: Option<Vec<f64>>,
}

impl HolderScanAccumulator {
    pub fn new(cfg: HolderScanConfig) -> Result<Self> {
        if cfg.lags.len() < 4 {
            return Err(Error::Estimation(format!(
                "a Hölder scan needs at least 4 lags, got {}",
                cfg.lags.len()
            )));
        }
        if !(cfg.moment >= 1.0) {
            return domain(format!("moment must be at least 1, got {}", cfg.moment));
        }
        if cfg.lags.contains(&0) || cfg.anchors == 0 {
            return domain("lags and anchor counts must be positive");
        }
        let k = cfg.lags.len();
        Ok(HolderScanAccumulator {
            cfg,
            sums: vec![0.0; k],
            counts: vec![0; k],
            first_means: None,
            varied: false,
            members: 0,
            physical_lags: None,
        })
    }

    pub fn add(&mut self, field: &LocalTimeField) -> Result<()> {
        let n = self.cfg.moment;
        let mut means = Vec::with_capacity(self.cfg.lags.len());
        let physical: Vec<f64> = match self.cfg.mode {
            ScanMode::Time => self.cfg.lags.iter().map(|&l| l as f64 * field.time_grid.dt()).collect(),
            ScanMode::Space => self.cfg.lags.iter().map(|&l| l as f64 * field.space_grid.dx()).collect(),
        };
        for (i, &lag) in self.cfg.lags.iter().enumerate() {
            let samples = match self.cfg.mode {
                ScanMode::Time => time_samples(field, lag, self.cfg.anchors, self.cfg.band)?,
                ScanMode::Space => space_samples(field, lag, self.cfg.anchors)?,
            };
            let s: f64 = samples.iter().map(|v| v.abs().powf(n)).sum();
            self.sums[i] += s;
            self.counts[i] += samples.len();
            means.push(s / samples.len() as f64);
        }
        match &self.first_means {
            None => self.first_means = Some(means),
            Some(first) => {
                if first != &means {
                    self.varied = true;
                }
            }
        }
        self.members += 1;
        if self.physical_lags.is_none() {
            self.physical_lags = Some(physical);
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<RegressionReport> {
        let lags = self
            .physical_lags
            .clone()
            .ok_or_else(|| Error::Estimation("empty ensemble".into()))?;
        let moments: Vec<f64> = self.sums.iter().zip(&self.counts).map(|(s, &c)| s / c as f64).collect();
        let loggable = moments.iter().all(|&m| m > 0.0 && m.is_finite());
        // identical members carry no sampling variability
        let degenerate = !loggable || (self.members > 1 && !self.varied);
        let fit = if loggable && !degenerate {
            let x: Vec<f64> = lags.iter().map(|l| l.ln()).collect();
            let y: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
            linear_fit(&x, &y)
        } else {
            None
        };
        Ok(RegressionReport {
            mode: self.cfg.mode,
            moment: self.cfg.moment,
            lags,
            moments,
            samples: self.counts.clone(),
            exponent: fit.map(|f| f.slope / self.cfg.moment),
            fit,
            degenerate: degenerate || fit.is_none(),
        })
    }
}

/// Local times over windows of `lag` steps at the window's occupation median.
fn time_samples(field: &LocalTimeField, lag: usize, anchors: usize, band: usize) -> Result<Vec<f64>> {
    let n = field.time_grid.n_steps();
    if lag > n {
        return Err(Error::Estimation(format!("lag {lag} exceeds the {n} grid steps")));
    }
    let span = n - lag;
    let starts: Vec<usize> = if anchors == 1 || span == 0 {
        vec![0]
    } else {
        (0..anchors).map(|i| (i * span) / (anchors - 1)).collect()
    };
    Ok(starts
        .into_iter()
        .map(|s| {
            let level = median(&field.path[s..=s + lag]);
            match field.space_grid.cell_of(level) {
                Some(j) => {
                    let lo = j.saturating_sub(band);
                    let hi = (j + band).min(field.space_grid.m_cells - 1);
                    (lo..=hi).map(|c| field.cell_increment(s, s + lag, c)).sum::<f64>() / (hi - lo + 1) as f64
                }
                None => 0.0,
            }
        })
        .collect())
}

/// Differences of the terminal local time between base levels (occupation
/// quantiles of the path) and levels `lag` cells above.
fn space_samples(field: &LocalTimeField, lag: usize, anchors: usize) -> Result<Vec<f64>> {
    let n = field.time_grid.n_steps();
    let m = field.space_grid.m_cells;
    if lag >= m {
        return Err(Error::Estimation(format!("lag {lag} exceeds the {m} cells")));
    }
    let row = field.row(n);
    let qs: Vec<f64> = if anchors == 1 {
        vec![0.5]
    } else {
        (0..anchors).map(|i| 0.3 + 0.4 * i as f64 / (anchors - 1) as f64).collect()
    };
    Ok(qs
        .into_iter()
        .map(|q| {
            let level = crate::stats::quantile(&field.path, q);
            let j = field.space_grid.cell_of(level).unwrap_or(m / 2);
            let (a, b) = if j + lag < m { (j, j + lag) } else { (j - lag, j) };
            row[b] - row[a]
        })
        .collect())
}

/// Log-log regression of increment moments over an ensemble.
pub fn holder_exponent_scan(ensemble: &[LocalTimeField], cfg: &HolderScanConfig) -> Result<RegressionReport> {
    let mut acc = HolderScanAccumulator::new(cfg.clone())?;
    if ensemble.is_empty() {
        return Err(Error::Estimation("empty ensemble".into()));
    }
    let (g, s) = (ensemble[0].time_grid, ensemble[0].space_grid);
    for f in ensemble {
        if f.time_grid != g || f.space_grid != s {
            return domain("ensemble members must share time and space grids");
        }
        acc.add(f)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(values: Vec<f64>, t_end: f64) -> SamplePath {
        let g = Grid::new(t_end, values.len() - 1).unwrap();
        SamplePath::new(g, values, crate::fbm::PathLabel::Generic).unwrap()
    }

    #[test]
    fn constant_path() {
        let p = path(vec![0.3; 11], 1.0);
        let s = SpaceGrid::new(-1.0, 1.0, 20).unwrap();
        let f = occupation_density(&p, s).unwrap();
        let row = f.row(10);
        let j = s.cell_of(0.3).unwrap();
        assert!((row[j] * s.dx() - 1.0).abs() < 1e-14);
        assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn unit_speed_path() {
        let p = SamplePath::from_fn(Grid::new(1.0, 64).unwrap(), crate::fbm::PathLabel::Generic, |t| t).unwrap();
        let s = SpaceGrid::new(-0.5, 1.5, 32).unwrap();
        let f = occupation_density(&p, s).unwrap();
        let row = f.row(64);
        for (j, v) in row.iter().enumerate() {
            let c = s.cell_center(j);
            let expect = if (0.0..1.0).contains(&c) { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "cell {j}: {v}");
        }
    }

    #[test]
    fn triangle_path() {
        let p = SamplePath::from_fn(Grid::new(2.0, 40).unwrap(), crate::fbm::PathLabel::Generic, |t| {
            if t <= 1.0 { t } else { 2.0 - t }
        })
        .unwrap();
        let s = SpaceGrid::new(-0.5, 1.5, 16).unwrap();
        let f = occupation_density(&p, s).unwrap();
        let row = f.row(40);
        for (j, v) in row.iter().enumerate() {
            let c = s.cell_center(j);
            let expect = if (0.0..1.0).contains(&c) { 2.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn widening_keeps_cells() {
        let p = path(vec![0.0, 3.0, -2.5], 1.0);
        let s = SpaceGrid::new(-1.0, 1.0, 8).unwrap();
        let f = occupation_density(&p, s).unwrap();
        let w = f.space_grid();
        assert!((w.dx() - s.dx()).abs() < 1e-15);
        assert!(w.x_min() <= -2.5 && w.x_max() >= 3.0);
        assert!((f.total_mass(2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mirrored_path_gives_mirrored_cells() {
        let v = vec![0.0, 0.37, -0.21, 0.9, 0.44, -0.6];
        let p = path(v.clone(), 1.0);
        let q = path(v.iter().map(|x| -x).collect(), 1.0);
        let s = SpaceGrid::covering(&p, 12).unwrap();
        let sq = SpaceGrid::covering(&q, 12).unwrap();
        assert_eq!(sq, s.reflected());
        let a = occupation_density(&p, s).unwrap();
        let b = occupation_density(&q, sq).unwrap();
        let (ra, rb) = (a.row(5), b.row(5));
        for j in 0..12 {
            assert_eq!(ra[j].to_bits(), rb[11 - j].to_bits());
        }
    }

    #[test]
    fn resting_on_edge_is_split() {
        let s = SpaceGrid::new(-1.0, 1.0, 4).unwrap();
        let p = path(vec![0.0, 0.0], 1.0);
        let f = occupation_density(&p, s).unwrap();
        assert_eq!(f.row(1), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn too_few_lags() {
        let cfg = HolderScanConfig { mode: ScanMode::Time, moment: 2.0, lags: vec![1, 2, 4], anchors: 2, band: 0 };
        assert!(matches!(HolderScanAccumulator::new(cfg), Err(Error::Estimation(_))));
    }

    #[test]
    fn odd_cell_count_rejected() {
        assert!(SpaceGrid::new(0.0, 1.0, 7).is_err());
        assert!(SpaceGrid::new(1.0, 1.0, 8).is_err());
    }
}
