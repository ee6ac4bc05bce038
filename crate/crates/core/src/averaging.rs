//! Averaging operator `T^w_t b(x) = ∫_0^t b(x + w_r) dr`, computed either by
//! time quadrature along the path or by correlating the drift with the
//! path's local time.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{mollify, DriftSpec};
use crate::error::{domain, Error, Result};
use crate::fbm::{Grid, PathLabel, SamplePath};
use crate::localtime::{LocalTimeField, SpaceGrid};
use crate::young::{holder_norm, pvar_by_distance, AveragingFunctional};

/// `T^w_{t_k} b` at the cell centers of `space_grid`, row-major in time.
#[derive(Debug, Clone)]
pub struct AveragedField {
    time_grid: Grid,
    space_grid: SpaceGrid,
    values: Vec<f64>,
    drift: DriftSpec,
}

impl AveragedField {
    fn from_columns(time_grid: Grid, space_grid: SpaceGrid, cols: Vec<Vec<f64>>, drift: &DriftSpec) -> Self {
        let rows = time_grid.n_steps() + 1;
        let m = space_grid.m_cells();
        let mut values = vec![0.0; rows * m];
        for (j, col) in cols.iter().enumerate() {
            for (k, v) in col.iter().enumerate() {
                values[k * m + j] = *v;
            }
        }
        AveragedField { time_grid, space_grid, values, drift: drift.clone() }
    }

    pub fn time_grid(&self) -> Grid {
        self.time_grid
    }

    pub fn space_grid(&self) -> SpaceGrid {
        self.space_grid
    }

    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }

    pub fn x(&self, j: usize) -> f64 {
        self.space_grid.cell_center(j)
    }

    pub fn value(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.space_grid.m_cells() + j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let m = self.space_grid.m_cells();
        &self.values[k * m..(k + 1) * m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `sup_{k,j} |self − other|`; both fields must share their grids.
    pub fn sup_distance(&self, other: &AveragedField) -> Result<f64> {
        if self.time_grid != other.time_grid || self.space_grid != other.space_grid {
            return domain("averaged fields live on different grids");
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())))
    }

    /// Long-format CSV `t,x,value` of every `stride`-th row.
    pub fn write_csv<W: Write>(&self, stride: usize, mut out: W) -> Result<()> {
        writeln!(out, "t,x,value")?;
        let n = self.time_grid.n_steps();
        let mut ks: Vec<usize> = (0..=n).step_by(stride.max(1)).collect();
        if *ks.last().unwrap() != n {
            ks.push(n);
        }
        for k in ks {
            let t = self.time_grid.time(k);
            for (j, v) in self.row(k).iter().enumerate() {
                writeln!(out, "{t},{},{v}", self.x(j))?;
            }
        }
        Ok(())
    }
}

fn require_pointwise(b: &DriftSpec) -> Result<()> {
    match b {
        DriftSpec::Dirac { .. } | DriftSpec::PowerCusp { .. } => domain(format!(
            "{} has no bounded pointwise representative; use the local-time route",
            b.describe()
        )),
        _ => Ok(()),
    }
}

/// Cumulative trapezoid in time of `b(x_j + w_r)` at the cell centers of `space`.
pub fn averaging_direct(b: &DriftSpec, path: &SamplePath, space: SpaceGrid) -> Result<AveragedField> {
    require_pointwise(b)?;
    let dt = path.grid().dt();
    let w = path.values();
    let cols = (0..space.m_cells())
        .into_par_iter()
        .map(|j| {
            let x = space.cell_center(j);
            let vals = w.iter().map(|&v| b.eval(x + v)).collect::<Result<Vec<f64>>>()?;
            let mut col = Vec::with_capacity(w.len());
            let mut acc = 0.0;
            col.push(0.0);
            for p in vals.windows(2) {
                acc += 0.5 * dt * (p[0] + p[1]);
                col.push(acc);
            }
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AveragedField::from_columns(path.grid(), space, cols, b))
}

/// `∫` of `b` over the cells at offsets `(k + 1/2 − m)Δx`, `k = 0..2m−1`:
/// the weight that cell `j` of the local-time window carries for output
/// cell `i` of the reflected window is entry `i + j`.
fn offset_cell_integrals(b: &DriftSpec, space: &SpaceGrid) -> Result<Vec<f64>> {
    let m = space.m_cells();
    let dx = space.dx();
    (0..2 * m - 1)
        .into_par_iter()
        .map(|k| {
            let lo = (k as f64 + 0.5 - m as f64) * dx;
            b.cell_integral(lo, lo + dx)
        })
        .collect()
}

/// `T^w b = b * Ľ` on the reflected window `[−x_max, −x_min]`, evaluated at
/// its cell centers.
///
/// Point masses are a reindexing of the local time. Other drifts are
/// integrated exactly over each cell against the cell-constant local time,
/// accumulated step by step so that nonnegative drifts give nondecreasing
/// rows.
pub fn averaging_via_localtime(b: &DriftSpec, lt: &LocalTimeField) -> Result<AveragedField> {
    let space = lt.space_grid();
    let out = space.reflected();
    let m = space.m_cells();
    let grid = lt.time_grid();
    let n = grid.n_steps();
    if let DriftSpec::Dirac { mass } = b {
        let mut values = Vec::with_capacity((n + 1) * m);
        for (_, row) in lt.rows(1) {
            values.extend(row.iter().rev().map(|l| mass * l));
        }
        return Ok(AveragedField { time_grid: grid, space_grid: out, values, drift: b.clone() });
    }
    if let DriftSpec::Gridded(g) = b {
        let span = 2.0 * (space.x_max() - space.x_min());
        if g.period() < span {
            return Err(Error::Window { value: span, lo: 0.0, hi: g.period() });
        }
    }
    let d = offset_cell_integrals(b, &space)?;
    let Some(d_lo) = d.iter().position(|v| *v != 0.0) else {
        return Ok(AveragedField { time_grid: grid, space_grid: out, values: vec![0.0; (n + 1) * m], drift: b.clone() });
    };
    let d_hi = d.iter().rposition(|v| *v != 0.0).unwrap();
    let inv = 1.0 / space.dx();
    let cols: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            // cells j with d_lo ≤ i + j ≤ d_hi
            let j_lo = d_lo.saturating_sub(i);
            let j_hi = d_hi.saturating_sub(i).min(m - 1);
            let mut col = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            col.push(0.0);
            for k in 0..n {
                let (first, times) = lt.step(k);
                let lo = first.max(j_lo);
                let hi = (first + times.len()).min(j_hi + 1);
                if lo < hi && d_hi >= i {
                    let s: f64 = (lo..hi).map(|j| times[j - first] * d[i + j]).sum();
                    acc += s * inv;
                }
                col.push(acc);
            }
            col
        })
        .collect();
    Ok(AveragedField::from_columns(grid, out, cols, b))
}

/// `A_{s,t}(y) = T^w_{s,t} b(y)` by the trapezoid rule along the path.
pub struct DirectFunctional {
    drift: DriftSpec,
    path: SamplePath,
}

impl DirectFunctional {
    pub fn new(drift: DriftSpec, path: SamplePath) -> Result<Self> {
        require_pointwise(&drift)?;
        Ok(DirectFunctional { drift, path })
    }
}

impl AveragingFunctional for DirectFunctional {
    fn grid(&self) -> Grid {
        self.path.grid()
    }

    fn increment(&self, k0: usize, k1: usize, y: f64) -> Result<f64> {
        let w = &self.path.values()[k0..=k1];
        let half = 0.5 * self.path.grid().dt();
        let mut acc = 0.0;
        let mut prev = self.drift.eval(y + w[0])?;
        for v in &w[1..] {
            let next = self.drift.eval(y + v)?;
            acc += half * (prev + next);
            prev = next;
        }
        Ok(acc)
    }
}

/// `A_{s,t}(y) = ∫ b(y + z) (L_t − L_s)(z) dz` against the cell-constant
/// local time, evaluated lazily; a point mass reads off the cell of `−y`.
pub struct LocalTimeFunctional<'a> {
    drift: DriftSpec,
    lt: &'a LocalTimeField,
}

impl<'a> LocalTimeFunctional<'a> {
    pub fn new(drift: DriftSpec, lt: &'a LocalTimeField) -> Self {
        LocalTimeFunctional { drift, lt }
    }
}

impl AveragingFunctional for LocalTimeFunctional<'_> {
    fn grid(&self) -> Grid {
        self.lt.time_grid()
    }

    fn increment(&self, k0: usize, k1: usize, y: f64) -> Result<f64> {
        let space = self.lt.space_grid();
        if let DriftSpec::Dirac { mass } = self.drift {
            return Ok(match space.cell_of(-y) {
                Some(j) => mass * self.lt.cell_increment(k0, k1, j),
                None => 0.0,
            });
        }
        let dx = space.dx();
        let mut acc = 0.0;
        for k in k0..k1 {
            let (first, times) = self.lt.step(k);
            for (i, t) in times.iter().enumerate() {
                let lo = y + space.cell_lower(first + i);
                acc += t * self.drift.cell_integral(lo, lo + dx)?;
            }
        }
        Ok(acc / dx)
    }
}

/// Path of the local-time field, for the direct route.
fn underlying_path(lt: &LocalTimeField) -> Result<SamplePath> {
    SamplePath::new(lt.time_grid(), lt.path_values().to_vec(), PathLabel::Generic)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<u32>,
    /// `sup |T b^n − T b|` over the field, per level.
    pub distances: Vec<f64>,
    pub reference_sup: f64,
    pub non_increasing: bool,
}

/// Distances between the direct-route averages of `b^n = G_{1/n} b` and the
/// local-time average of `b`.
pub fn mollified_operator_limit(b: &DriftSpec, lt: &LocalTimeField, levels: &[u32]) -> Result<ConvergenceReport> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return domain("mollification levels must be increasing");
    }
    let reference = averaging_via_localtime(b, lt)?;
    let path = underlying_path(lt)?;
    let distances = levels
        .iter()
        .map(|&n| {
            let bn = mollify(b, n)?;
            averaging_direct(&bn, &path, reference.space_grid())?.sup_distance(&reference)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceReport {
        levels: levels.to_vec(),
        non_increasing: distances.windows(2).all(|w| w[1] <= w[0]),
        distances,
        reference_sup: reference.sup_norm(),
    })
}

/// Time regularity measured either as a Hölder seminorm or as a
/// p-variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeRegularity {
    Holder(f64),
    PVariation(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldNormReport {
    pub time: TimeRegularity,
    pub space_exponent: f64,
    pub value: f64,
    /// Number of time points the estimate was taken over.
    pub times_used: usize,
    pub x_min: f64,
    pub x_max: f64,
}

/// `[field]_{C^γ([0,T]; C^η)}` (discrete sup over dyadic time lags) or the
/// p-variation of `t ↦ field(t, ·)` in `C^η`, on at most `max_times + 1`
/// equally spaced times.
pub fn field_regularity(
    field: &AveragedField,
    time: TimeRegularity,
    space_exponent: f64,
    max_times: usize,
) -> Result<FieldNormReport> {
    if !(space_exponent > 0.0 && space_exponent < 1.0) {
        return domain(format!("space exponent must lie in (0, 1), got {space_exponent}"));
    }
    match time {
        TimeRegularity::Holder(g) if !(g > 0.0 && g < 1.0) => {
            return domain(format!("time exponent must lie in (0, 1), got {g}"))
        }
        TimeRegularity::PVariation(p) if !(p >= 1.0) => return domain(format!("p must be at least 1, got {p}")),
        _ => {}
    }
    let n = field.time_grid.n_steps();
    let stride = n.div_ceil(max_times.max(1)).max(1);
    let mut ks: Vec<usize> = (0..=n).step_by(stride).collect();
    if *ks.last().unwrap() != n {
        ks.push(n);
    }
    let dx = field.space_grid.dx();
    let dist = |a: usize, b: usize| {
        let diff: Vec<f64> = field.row(ks[b]).iter().zip(field.row(ks[a])).map(|(x, y)| x - y).collect();
        holder_norm(&diff, dx, space_exponent)
    };
    let value = match time {
        TimeRegularity::Holder(gamma) => {
            let last = ks.len() - 1;
            let mut lags: Vec<usize> = std::iter::successors(Some(1usize), |l| Some(l * 2)).take_while(|l| *l < last).collect();
            lags.push(last);
            lags.par_iter()
                .map(|&lag| {
                    (0..=last - lag)
                        .map(|a| {
                            let dt = field.time_grid.time(ks[a + lag]) - field.time_grid.time(ks[a]);
                            dist(a, a + lag) / dt.powf(gamma)
                        })
                        .fold(0.0f64, f64::max)
                })
                .reduce(|| 0.0, f64::max)
        }
        TimeRegularity::PVariation(p) => pvar_by_distance(ks.len(), p, dist),
    };
    Ok(FieldNormReport {
        time,
        space_exponent,
        value,
        times_used: ks.len(),
        x_min: field.space_grid.x_min(),
        x_max: field.space_grid.x_max(),
    })
}
