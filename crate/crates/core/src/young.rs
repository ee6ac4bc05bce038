//! Nonlinear Young integration `∫ A_{dr}(x_r)`: p-variation seminorms,
//! dyadic Riemann sums, sewing and stability defects, and the forward Euler
//! scheme `x̄_{k+1} = x̄_k + A_{t_k, t_{k+1}}(x̄_k)`.

use serde::{Deserialize, Serialize};

use crate::averaging::AveragedField;
use crate::error::{domain, Error, Result};
use crate::fbm::{Grid, PathLabel, SamplePath};

/// Time-additive family `A_{s,t}(y)` on the grid times of [`AveragingFunctional::grid`].
pub trait AveragingFunctional: Sync {
    fn grid(&self) -> Grid;

    /// `A_{t_{k0}, t_{k1}}(y)`.
    fn increment(&self, k0: usize, k1: usize, y: f64) -> Result<f64>;

    fn step_increment(&self, k: usize, y: f64) -> Result<f64> {
        self.increment(k, k + 1, y)
    }

    /// Range of `y` on which `A` is defined, if bounded.
    fn window(&self) -> Option<(f64, f64)> {
        None
    }
}

/// `A_{s,t}(y) = F(t, y) − F(s, y)` from a primitive `F`.
pub struct AnalyticFunctional<F: Fn(f64, f64) -> f64 + Sync> {
    grid: Grid,
    primitive: F,
}

impl<F: Fn(f64, f64) -> f64 + Sync> AnalyticFunctional<F> {
    pub fn new(grid: Grid, primitive: F) -> Self {
        AnalyticFunctional { grid, primitive }
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> AveragingFunctional for AnalyticFunctional<F> {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn increment(&self, k0: usize, k1: usize, y: f64) -> Result<f64> {
        Ok((self.primitive)(self.grid.time(k1), y) - (self.primitive)(self.grid.time(k0), y))
    }
}

/// Tabulated field, linear in space between cell centers.
pub struct TabulatedFunctional {
    field: AveragedField,
}

impl TabulatedFunctional {
    pub fn new(field: AveragedField) -> Self {
        TabulatedFunctional { field }
    }

    fn interpolate(&self, k: usize, y: f64) -> Result<f64> {
        let s = self.field.space_grid();
        let (lo, hi) = (s.cell_center(0), s.cell_center(s.m_cells() - 1));
        if !(y >= lo && y <= hi) {
            return Err(Error::Window { value: y, lo, hi });
        }
        let u = (y - lo) / s.dx();
        let j = (u.floor() as usize).min(s.m_cells() - 2);
        let w = u - j as f64;
        let row = self.field.row(k);
        Ok(row[j] + w * (row[j + 1] - row[j]))
    }
}

impl AveragingFunctional for TabulatedFunctional {
    fn grid(&self) -> Grid {
        self.field.time_grid()
    }

    fn increment(&self, k0: usize, k1: usize, y: f64) -> Result<f64> {
        Ok(self.interpolate(k1, y)? - self.interpolate(k0, y)?)
    }

    fn window(&self) -> Option<(f64, f64)> {
        let s = self.field.space_grid();
        Some((s.cell_center(0), s.cell_center(s.m_cells() - 1)))
    }
}

/// Exact supremum of `Σ |x_{t_{i+1}} − x_{t_i}|^p` over all sub-partitions
/// of `0..n`, given the pair distance, by dynamic programming.
pub fn pvar_by_distance(n_points: usize, p: f64, dist: impl Fn(usize, usize) -> f64) -> f64 {
    if n_points < 2 {
        return 0.0;
    }
    let mut best = vec![0.0f64; n_points];
    for i in 1..n_points {
        best[i] = (0..i).map(|j| best[j] + dist(j, i).powf(p)).fold(0.0, f64::max);
    }
    best[n_points - 1].powf(1.0 / p)
}

/// p-variation seminorm of the grid path.
pub fn pvar_seminorm(path: &SamplePath, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return domain(format!("p must be at least 1, got {p}"));
    }
    let x = path.values();
    Ok(pvar_by_distance(x.len(), p, |i, j| (x[j] - x[i]).abs()))
}

/// `ϰ(s,t) = [x]^p_{p-var,[s,t]}` on pairs of at most `max_points` grid times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlEstimate {
    pub indices: Vec<usize>,
    /// Row-major `values[a * len + b]`, zero below the diagonal.
    pub values: Vec<f64>,
}

impl ControlEstimate {
    pub fn from_pvar(path: &SamplePath, p: f64, max_points: usize) -> Result<Self> {
        if !(p >= 1.0) {
            return domain(format!("p must be at least 1, got {p}"));
        }
        let n = path.grid().n_steps();
        let stride = n.div_ceil(max_points.max(2) - 1).max(1);
        let mut indices: Vec<usize> = (0..=n).step_by(stride).collect();
        if *indices.last().unwrap() != n {
            indices.push(n);
        }
        let x = path.values();
        let len = indices.len();
        let mut values = vec![0.0; len * len];
        for a in 0..len {
            // every sub-partition of the full grid between the two times
            let (ka, kb) = (indices[a], n);
            let mut best = vec![0.0f64; kb - ka + 1];
            for i in 1..best.len() {
                best[i] = (0..i).map(|j| best[j] + (x[ka + i] - x[ka + j]).abs().powf(p)).fold(0.0, f64::max);
            }
            for b in a..len {
                values[a * len + b] = best[indices[b] - ka];
            }
        }
        Ok(ControlEstimate { indices, values })
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.indices.len() + b]
    }

    /// Largest violation `ϰ(r,u) + ϰ(u,v) − ϰ(r,v)` over all triples (≤ 0 for a control).
    pub fn superadditivity_defect(&self) -> f64 {
        let len = self.indices.len();
        let mut worst = f64::NEG_INFINITY;
        for r in 0..len {
            for u in r..len {
                for v in u..len {
                    worst = worst.max(self.get(r, u) + self.get(u, v) - self.get(r, v));
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NlyIntegral {
    pub value: f64,
    /// Riemann sums on the dyadic partitions, coarsest first.
    pub sums: Vec<f64>,
    /// `|S_{ℓ+1} − S_ℓ|`.
    pub trace: Vec<f64>,
}

fn check_path(a: &dyn AveragingFunctional, x: &SamplePath) -> Result<()> {
    if a.grid() != x.grid() {
        return domain("path and functional must share the time grid");
    }
    Ok(())
}

fn riemann_sum(a: &dyn AveragingFunctional, x: &[f64], points: &[usize]) -> Result<f64> {
    points.windows(2).map(|w| a.increment(w[0], w[1], x[w[0]])).sum()
}

/// Riemann sums `Σ A_{t_i, t_{i+1}}(x_{t_i})` along dyadic partitions of
/// `[t_{ks}, t_{kt}]` with up to `levels` halvings, stopping early once
/// successive sums agree to 1e-10 or the grid is exhausted.
pub fn nly_integral(
    a: &dyn AveragingFunctional,
    x: &SamplePath,
    ks: usize,
    kt: usize,
    levels: u32,
) -> Result<NlyIntegral> {
    check_path(a, x)?;
    if ks > kt || kt > x.grid().n_steps() {
        return domain(format!("need s ≤ t on the grid, got indices {ks}, {kt}"));
    }
    let len = kt - ks;
    let mut sums = Vec::new();
    let mut trace = Vec::new();
    for level in 0..=levels {
        let pieces = 1usize << level.min(62);
        let points: Vec<usize> = if pieces >= len {
            (ks..=kt).collect()
        } else {
            (0..=pieces).map(|i| ks + (i * len + pieces / 2) / pieces).collect()
        };
        let s = riemann_sum(a, x.values(), &points)?;
        if let Some(prev) = sums.last() {
            let d: f64 = s - prev;
            trace.push(d.abs());
            sums.push(s);
            if d.abs() < 1e-10 {
                break;
            }
        } else {
            sums.push(s);
        }
        if pieces >= len {
            break;
        }
    }
    Ok(NlyIntegral { value: *sums.last().unwrap(), sums, trace })
}

/// `sup_k |y_k − y_0 − Σ_{i<k} A_{t_i, t_{i+1}}(y_i)|` on the grid of `A`.
pub fn nly_residual(a: &dyn AveragingFunctional, y: &SamplePath) -> Result<f64> {
    check_path(a, y)?;
    let v = y.values();
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for k in 0..v.len() - 1 {
        acc += a.step_increment(k, v[k])?;
        worst = worst.max((v[k + 1] - v[0] - acc).abs());
    }
    Ok(worst)
}

/// Forward Euler on `grid` (a coarsening of the functional's grid), embedded
/// on the fine grid as `x_t = x̄_k + A_{t_k, t}(x̄_k)` for `t ∈ [t_k, t_{k+1}]`.
pub fn nly_solve_euler(a: &dyn AveragingFunctional, y0: f64, grid: Grid) -> Result<SamplePath> {
    let fine = a.grid();
    let n = fine.n_steps();
    if grid.t_end() != fine.t_end() || grid.n_steps() == 0 || n % grid.n_steps() != 0 {
        return domain(format!(
            "Euler grid of {} steps is not a coarsening of the functional's {} steps",
            grid.n_steps(),
            n
        ));
    }
    let factor = n / grid.n_steps();
    let window = a.window();
    let mut out = Vec::with_capacity(n + 1);
    out.push(y0);
    let mut anchor = y0;
    for k in 0..grid.n_steps() {
        if let Some((lo, hi)) = window {
            if !(anchor >= lo && anchor <= hi) {
                return Err(Error::Divergence(format!(
                    "Euler iterate {anchor} left the window [{lo}, {hi}] at step {k}"
                )));
            }
        }
        let mut y = anchor;
        for i in k * factor..(k + 1) * factor {
            y += a.step_increment(i, anchor)?;
            out.push(y);
        }
        anchor = y;
    }
    SamplePath::new(fine, out, PathLabel::Solution)
}

/// `sup|g| + sup |g(y_a) − g(y_b)| / |y_a − y_b|^η` over dyadic index lags
/// of a uniformly spaced sample.
pub(crate) fn holder_norm(g: &[f64], dy: f64, eta: f64) -> f64 {
    let sup = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut semi = 0.0f64;
    let mut lag = 1;
    while lag < g.len() {
        let den = (lag as f64 * dy).powf(eta);
        for j in 0..g.len() - lag {
            semi = semi.max((g[j + lag] - g[j]).abs() / den);
        }
        lag *= 2;
    }
    sup + semi
}

/// Exponents `p` (of `A` in time), `q` (of the path) and `η` (of `A` in space).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungExponents {
    pub p: f64,
    pub q: f64,
    pub eta: f64,
}

impl YoungExponents {
    pub fn theta(&self) -> f64 {
        1.0 / self.p + self.eta / self.q
    }

    pub fn check(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.q >= 1.0 && self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Precondition(format!("invalid exponents {self:?}")));
        }
        if !(self.theta() > 1.0) {
            return Err(Error::Precondition(format!(
                "1/p + η/q = {} must exceed 1 for the Young integral",
                self.theta()
            )));
        }
        Ok(())
    }
}

const SPACE_SAMPLES: usize = 65;
const TIME_SAMPLES: usize = 64;

/// `[A]_{p-var, [t_{ks}, t_{kt}]}` with values in `C^η` on `[lo, hi]`,
/// from `A_{ks, ·}` tabulated on at most `TIME_SAMPLES + 1` times.
fn functional_pvar(a: &dyn AveragingFunctional, ks: usize, kt: usize, lo: f64, hi: f64, p: f64, eta: f64) -> Result<f64> {
    let len = kt - ks;
    let stride = len.div_ceil(TIME_SAMPLES).max(1);
    let mut ks_list: Vec<usize> = (ks..=kt).step_by(stride).collect();
    if *ks_list.last().unwrap() != kt {
        ks_list.push(kt);
    }
    let (ys, dy) = space_sample(lo, hi);
    let table = ks_list
        .iter()
        .map(|&k| ys.iter().map(|&y| a.increment(ks, k, y)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(pvar_by_distance(ks_list.len(), p, |i, j| {
        let d: Vec<f64> = table[j].iter().zip(&table[i]).map(|(u, v)| u - v).collect();
        holder_norm(&d, dy, eta)
    }))
}

fn space_sample(lo: f64, hi: f64) -> (Vec<f64>, f64) {
    if hi > lo {
        let dy = (hi - lo) / (SPACE_SAMPLES - 1) as f64;
        ((0..SPACE_SAMPLES).map(|i| lo + i as f64 * dy).collect(), dy)
    } else {
        (vec![lo], 1.0)
    }
}

fn restricted(x: &SamplePath, ks: usize, kt: usize) -> Result<SamplePath> {
    let g = Grid::new(x.grid().time(kt) - x.grid().time(ks), kt - ks)?;
    SamplePath::new(g, x.values()[ks..=kt].to_vec(), PathLabel::Generic)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SewingReport {
    /// `|∫_s^t A_{dr}(x_r) − A_{s,t}(x_s)|` on the grid partition.
    pub lhs: f64,
    pub a_pvar: f64,
    pub x_qvar: f64,
    /// `[A]_{p-var} [x]^η_{q-var}`.
    pub rhs: f64,
    pub ratio: f64,
    pub theta: f64,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Sewing defect against the product of the p-variation of `A` in `C^η`
/// (on the range of `x`) and the q-variation of `x`.
///
/// The left side is summed germ by germ,
/// `Σ_i [A_{t_i,t_{i+1}}(x_{t_i}) − A_{t_i,t_{i+1}}(x_s)]`, so it vanishes
/// exactly when `A` does not depend on `y` or `x` is constant.
pub fn sewing_residual(
    a: &dyn AveragingFunctional,
    x: &SamplePath,
    ks: usize,
    kt: usize,
    exps: YoungExponents,
) -> Result<SewingReport> {
    exps.check()?;
    check_path(a, x)?;
    if ks >= kt || kt > x.grid().n_steps() {
        return domain(format!("need s < t on the grid, got indices {ks}, {kt}"));
    }
    let v = x.values();
    let mut lhs = 0.0;
    for i in ks..kt {
        lhs += a.step_increment(i, v[i])? - a.step_increment(i, v[ks])?;
    }
    let lhs = lhs.abs();
    let part = restricted(x, ks, kt)?;
    let (lo, hi) = part.min_max();
    let a_pvar = functional_pvar(a, ks, kt, lo, hi, exps.p, exps.eta)?;
    let x_qvar = pvar_seminorm(&part, exps.q)?;
    let rhs = a_pvar * x_qvar.powf(exps.eta);
    Ok(SewingReport { lhs, a_pvar, x_qvar, rhs, ratio: ratio(lhs, rhs), theta: exps.theta() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `|∫_s^t A_{dr}(x_r) − ∫_s^t A_{dr}(y_r)|` on the grid partition.
    pub gap: f64,
    pub sup_distance: f64,
    /// `[A]_{p-var} ([x]_{q-var} + [y]_{q-var})^δ ‖x−y‖^{η−δ}`.
    pub first_term: f64,
    /// `‖A_{s,t}‖_{C^η} ‖x−y‖^η`.
    pub second_term: f64,
    pub ratio: f64,
}

/// Sensitivity of the integral to the integrated path, against the two-term
/// bound with `δ ∈ (q(1 − 1/p), η)`.
pub fn stability_gap(
    a: &dyn AveragingFunctional,
    x: &SamplePath,
    y: &SamplePath,
    ks: usize,
    kt: usize,
    delta: f64,
    exps: YoungExponents,
) -> Result<StabilityReport> {
    exps.check()?;
    let lo_delta = exps.q * (1.0 - 1.0 / exps.p);
    if !(delta > lo_delta && delta < exps.eta) {
        return Err(Error::Precondition(format!(
            "δ = {delta} must lie in ({lo_delta}, {}); the interval may be empty",
            exps.eta
        )));
    }
    check_path(a, x)?;
    check_path(a, y)?;
    if ks >= kt || kt > x.grid().n_steps() {
        return domain(format!("need s < t on the grid, got indices {ks}, {kt}"));
    }
    let (xv, yv) = (x.values(), y.values());
    let mut gap = 0.0;
    for i in ks..kt {
        gap += a.step_increment(i, xv[i])? - a.step_increment(i, yv[i])?;
    }
    let gap = gap.abs();
    let (xp, yp) = (restricted(x, ks, kt)?, restricted(y, ks, kt)?);
    let sup_distance = xp.sup_distance(&yp)?;
    let (xl, xh) = xp.min_max();
    let (yl, yh) = yp.min_max();
    let (lo, hi) = (xl.min(yl), xh.max(yh));
    let a_pvar = functional_pvar(a, ks, kt, lo, hi, exps.p, exps.eta)?;
    let qsum = pvar_seminorm(&xp, exps.q)? + pvar_seminorm(&yp, exps.q)?;
    let first_term = a_pvar * qsum.powf(delta) * sup_distance.powf(exps.eta - delta);
    let (ys, dy) = space_sample(lo, hi);
    let ast = ys.iter().map(|&u| a.increment(ks, kt, u)).collect::<Result<Vec<f64>>>()?;
    let second_term = holder_norm(&ast, dy, exps.eta) * sup_distance.powf(exps.eta);
    Ok(StabilityReport { gap, sup_distance, first_term, second_term, ratio: ratio(gap, first_term + second_term) })
}
