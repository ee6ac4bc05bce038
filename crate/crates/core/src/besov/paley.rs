use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{lp_norm, BesovParams, GridField};

/// Radial profile of the dyadic partition of unity.
///
/// `θ = 1` on `|ξ| ≤ plateau`, `θ = 0` on `|ξ| ≥ edge`, with a `C^∞`
/// transition built from `e^{-1/s}`. The pair is `χ = θ`,
/// `ρ(ξ) = θ(ξ/2) − θ(ξ)`, so `supp χ ⊂ [-edge, edge]` and
/// `supp ρ ⊂ {plateau ≤ |ξ| ≤ 2·edge}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    pub plateau: f64,
    pub edge: f64,
}

impl Default for DyadicPartition {
    fn default() -> Self {
        DyadicPartition { plateau: 0.75, edge: 4.0 / 3.0 }
    }
}

pub fn dyadic_partition() -> DyadicPartition {
    DyadicPartition::default()
}

fn psi(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn smooth_step(s: f64) -> f64 {
    let a = psi(s);
    let b = psi(1.0 - s);
    a / (a + b)
}

impl DyadicPartition {
    pub fn theta(&self, xi: f64) -> f64 {
        1.0 - smooth_step((xi.abs() - self.plateau) / (self.edge - self.plateau))
    }

    pub fn chi(&self, xi: f64) -> f64 {
        self.theta(xi)
    }

    pub fn rho(&self, xi: f64) -> f64 {
        self.theta(0.5 * xi) - self.theta(xi)
    }

    /// Multiplier of block `j ≥ -1`.
    pub fn block(&self, j: i32, xi: f64) -> f64 {
        if j < 0 {
            self.chi(xi)
        } else {
            self.rho(xi / 2f64.powi(j))
        }
    }

    /// Last block index needed so that `χ + Σ_{j ≤ J} ρ_j ≡ 1` up to `xi_max`.
    pub fn last_block(&self, xi_max: f64) -> i32 {
        let mut j = 0;
        while xi_max / 2f64.powi(j + 1) > self.plateau {
            j += 1;
        }
        j
    }
}

/// Blocks `Δ_{-1} f, Δ_0 f, …, Δ_J f` of a periodic field.
#[derive(Debug, Clone)]
pub struct LpBlocks {
    pub blocks: Vec<GridField>,
    pub partition: DyadicPartition,
    /// The field is not negligible near the window edges, so the periodic
    /// blocks differ from those of the field on the whole line.
    pub truncation_warning: bool,
}

impl LpBlocks {
    /// Index `j` of `blocks[i]`.
    pub fn index(i: usize) -> i32 {
        i as i32 - 1
    }

    pub fn reconstruct(&self) -> GridField {
        let first = &self.blocks[0];
        let mut acc = vec![0.0; first.len()];
        for b in &self.blocks {
            for (a, v) in acc.iter_mut().zip(b.values()) {
                *a += v;
            }
        }
        first.with_values(acc)
    }
}

fn edge_warning(f: &GridField) -> bool {
    let m = f.len();
    let band = (m / 16).max(1);
    let peak = f.sup_norm();
    if peak == 0.0 {
        return false;
    }
    let v = f.values();
    let edge = v[..band].iter().chain(&v[m - band..]).fold(0.0f64, |a, x| a.max(x.abs()));
    edge > 1e-8 * peak
}

pub fn littlewood_paley_blocks(f: &GridField, partition: &DyadicPartition) -> LpBlocks {
    let m = f.len();
    let xi = f.frequencies();
    let xi_max = xi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let last = partition.last_block(xi_max);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut spectrum: Vec<Complex<f64>> = f.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fwd.process(&mut spectrum);
    let blocks = (-1..=last)
        .map(|j| {
            let mut buf: Vec<Complex<f64>> = spectrum
                .iter()
                .zip(&xi)
                .map(|(c, &x)| c * (partition.block(j, x) / m as f64))
                .collect();
            inv.process(&mut buf);
            f.with_values(buf.iter().map(|c| c.re).collect())
        })
        .collect();
    LpBlocks { blocks, partition: *partition, truncation_warning: edge_warning(f) }
}

/// Norm value together with the window it was computed on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BesovNormReport {
    pub value: f64,
    pub params: BesovParams,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub last_block: i32,
    pub partition: DyadicPartition,
    pub truncation_warning: bool,
}

/// `(Σ_j (2^{js} ‖Δ_j f‖_{L^p})^q)^{1/q}` over the blocks of the window.
pub fn besov_norm_report(f: &GridField, params: BesovParams) -> BesovNormReport {
    let partition = DyadicPartition::default();
    let lp = littlewood_paley_blocks(f, &partition);
    let terms: Vec<f64> = lp
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| 2f64.powf(LpBlocks::index(i) as f64 * params.s) * lp_norm(b.values(), b.dx(), params.p))
        .collect();
    let value = if params.q.is_infinite() {
        terms.iter().fold(0.0f64, |a, &t| a.max(t))
    } else {
        terms.iter().map(|t| t.powf(params.q)).sum::<f64>().powf(1.0 / params.q)
    };
    BesovNormReport {
        value,
        params,
        x_min: f.x_min(),
        x_max: f.x_max(),
        points: f.len(),
        last_block: LpBlocks::index(lp.blocks.len() - 1),
        partition,
        truncation_warning: lp.truncation_warning,
    }
}

pub fn besov_norm(f: &GridField, params: BesovParams) -> f64 {
    besov_norm_report(f, params).value
}
