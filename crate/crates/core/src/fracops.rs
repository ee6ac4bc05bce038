//! Fractional operators between Bm and fBm: `Π̃^h`, Riemann–Liouville
//! `I^h`, the composite `𝒜 = Π̃^{H−1/2} I^{1/2−H} Π̃^{1/2−H}` mapping fBm to
//! Bm, and diagnostics for the law of its output.
//!
//! Paths are read as piecewise-linear interpolants of their grid values and
//! every singular weight is integrated exactly against them cell by cell.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fbm::{HurstParam, PathLabel, SamplePath, VolterraKernel};
use crate::special::{beta, gamma};
use crate::stats::{linear_fit, mean, variance};

pub use crate::fbm::bm_to_fbm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Exact cell integrals of the singular weight against the interpolant.
    #[default]
    CellExact,
    /// Weight at the cell midpoint times the cell average.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub hurst: HurstParam,
    pub quadrature: Quadrature,
}

impl OperatorConfig {
    pub fn new(hurst: HurstParam) -> Self {
        OperatorConfig { hurst, quadrature: Quadrature::CellExact }
    }
}

/// `∫_a^b σ^e dσ` for `0 ≤ a < b`.
fn int_power(a: f64, b: f64, e: f64) -> f64 {
    if e == -1.0 {
        (b / a).ln()
    } else {
        (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0)
    }
}

/// Running integrals `S_k = ∫_0^{t_k} s^e (f(s) − f(0)) ds` of the
/// interpolant, for `e > −2`.
fn weighted_running_integral(e: f64, f: &[f64], dt: f64, quad: Quadrature) -> Vec<f64> {
    let f0 = f[0];
    let scale = dt.powf(e + 1.0);
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for j in 0..f.len() - 1 {
        let (a, b) = (f[j] - f0, f[j + 1] - f0);
        let jf = j as f64;
        let cell = match quad {
            Quadrature::Midpoint => (jf + 0.5).powf(e) * 0.5 * (a + b),
            // the constant part vanishes on the first cell
            Quadrature::CellExact if j == 0 => (b - a) / (e + 2.0),
            Quadrature::CellExact => {
                let p = int_power(jf, jf + 1.0, e);
                let q = int_power(jf, jf + 1.0, e + 1.0) - jf * p;
                a * p + (b - a) * q
            }
        };
        acc += cell;
        out.push(acc * scale);
    }
    out
}

/// `(Π̃^h f)(t) = t^h f(t) − h ∫_0^t s^{h−1} f(s) ds`, with the constant part
/// of `f` mapped to zero for every `h` and the value at `t = 0` set to 0.
pub fn pi_tilde(h: f64, f: &SamplePath) -> Result<SamplePath> {
    pi_tilde_with(h, f, Quadrature::CellExact)
}

pub fn pi_tilde_with(h: f64, f: &SamplePath, quad: Quadrature) -> Result<SamplePath> {
    let v = f.values();
    if h <= -1.0 && (v[0] != 0.0 || v[1] != 0.0) {
        return Err(Error::SingularIntegral(format!("s^{} is not integrable at 0 against this path", h - 1.0)));
    }
    SamplePath::new(f.grid(), pi_tilde_values(h, v, f.grid().dt(), quad), f.label())
}

fn pi_tilde_values(h: f64, f: &[f64], dt: f64, quad: Quadrature) -> Vec<f64> {
    if h == 0.0 {
        return f.to_vec();
    }
    let s = weighted_running_integral(h - 1.0, f, dt, quad);
    let f0 = f[0];
    let mut out: Vec<f64> = f
        .iter()
        .zip(&s)
        .enumerate()
        .map(|(k, (fk, sk))| (k as f64 * dt).powf(h) * (fk - f0) - h * sk)
        .collect();
    out[0] = 0.0;
    out
}

/// Causal convolution `c_k = Σ_{i ≤ k} f_i w_{k−i}`.
fn causal_convolution(f: &[f64], w: &[f64]) -> Vec<f64> {
    let n = f.len();
    if n <= 256 {
        return (0..n).map(|k| (0..=k).map(|i| f[i] * w[k - i]).sum()).collect();
    }
    let m = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let pad = |x: &[f64]| {
        let mut v: Vec<Complex<f64>> = x.iter().map(|&r| Complex::new(r, 0.0)).collect();
        v.resize(m, Complex::new(0.0, 0.0));
        v
    };
    let mut a = pad(f);
    let mut b = pad(&w[..n]);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    a[..n].iter().map(|c| c.re / m as f64).collect()
}

/// `(I^h f)(t) = Γ(h)^{-1} ∫_0^t (t−s)^{h−1} f(s) ds`, `h ∈ (0, 1]`.
pub fn riemann_liouville(h: f64, f: &SamplePath) -> Result<SamplePath> {
    riemann_liouville_with(h, f, Quadrature::CellExact)
}

pub fn riemann_liouville_with(h: f64, f: &SamplePath, quad: Quadrature) -> Result<SamplePath> {
    if !(h > 0.0 && h <= 1.0) {
        return domain(format!("fractional integral order must lie in (0, 1], got {h}"));
    }
    SamplePath::new(f.grid(), rl_values(h, f.values(), f.grid().dt(), quad), f.label())
}

fn rl_values(h: f64, f: &[f64], dt: f64, quad: Quadrature) -> Vec<f64> {
    let n = f.len();
    // weights on the left and right node of the cell at distance d ≥ 1
    let (left, right): (Vec<f64>, Vec<f64>) = (0..=n)
        .map(|d| {
            if d == 0 {
                return (0.0, 0.0);
            }
            let d = d as f64;
            match quad {
                Quadrature::Midpoint => {
                    let w = 0.5 * (d - 0.5).powf(h - 1.0);
                    (w, w)
                }
                Quadrature::CellExact => {
                    let a = int_power(d - 1.0, d, h - 1.0);
                    let b = d * a - int_power(d - 1.0, d, h);
                    (a - b, b)
                }
            }
        })
        .unzip();
    let w: Vec<f64> = (0..n).map(|e| if e == 0 { right[1] } else { left[e] + right[e + 1] }).collect();
    let conv = causal_convolution(f, &w);
    let scale = dt.powf(h) / gamma(h);
    let mut out: Vec<f64> = conv.iter().enumerate().map(|(k, c)| scale * (c - f[0] * right[k + 1])).collect();
    out[0] = 0.0;
    out
}

fn check_hurst(h: HurstParam) -> Result<f64> {
    let h = h.value();
    if h > 0.5 {
        return domain(format!("the fBm-to-Bm operator is built for H ≤ 1/2, got {h}"));
    }
    Ok(h)
}

/// `𝒜 f` by direct composition of the three operators.
pub fn operator_a(f: &SamplePath, cfg: &OperatorConfig) -> Result<SamplePath> {
    let h = check_hurst(cfg.hurst)?;
    if h == 0.5 {
        return Ok(f.clone());
    }
    let (a, dt, q) = (0.5 - h, f.grid().dt(), cfg.quadrature);
    let g = pi_tilde_values(a, f.values(), dt, q);
    let u = rl_values(a, &g, dt, q);
    SamplePath::new(f.grid(), pi_tilde_values(-a, &u, dt, q), f.label())
}

/// `𝒜 f = f₁ + f₂ + f₃ + f₄` evaluated term by term: with `α = 1/2 − H`,
/// `p = y^α f`, `q = ∫_0^y x^{α−1} f`,
/// `f₁ = t^{−α} I^α p`, `f₂ = −α t^{−α} I^α q`,
/// `f₃ = α ∫_0^t s^{−α−1} I^α p`, `f₄ = −α² ∫_0^t s^{−α−1} I^α q`.
pub fn operator_a_terms(f: &SamplePath, cfg: &OperatorConfig) -> Result<[Vec<f64>; 4]> {
    let h = check_hurst(cfg.hurst)?;
    if h == 0.5 {
        return domain("the term decomposition needs H < 1/2");
    }
    let (a, dt, quad) = (0.5 - h, f.grid().dt(), cfg.quadrature);
    let v = f.values();
    let t: Vec<f64> = (0..v.len()).map(|k| k as f64 * dt).collect();
    let p: Vec<f64> = v.iter().zip(&t).map(|(f, t)| t.powf(a) * f).collect();
    // f(0) times the first-cell weight x^{α−1} integrates to f(0) y^α / α
    let q: Vec<f64> = weighted_running_integral(a - 1.0, v, dt, quad)
        .iter()
        .zip(&t)
        .map(|(s, t)| s + v[0] * t.powf(a) / a)
        .collect();
    let ip = rl_values(a, &p, dt, quad);
    let iq = rl_values(a, &q, dt, quad);
    let damp = |x: &[f64]| -> Vec<f64> {
        x.iter().zip(&t).enumerate().map(|(k, (x, t))| if k == 0 { 0.0 } else { t.powf(-a) * x }).collect()
    };
    let f1 = damp(&ip);
    let f2: Vec<f64> = damp(&iq).iter().map(|x| -a * x).collect();
    let f3: Vec<f64> = weighted_running_integral(-a - 1.0, &ip, dt, quad).iter().map(|x| a * x).collect();
    let f4: Vec<f64> = weighted_running_integral(-a - 1.0, &iq, dt, quad).iter().map(|x| -a * a * x).collect();
    Ok([f1, f2, f3, f4])
}

/// `sup|𝒜f − Σ f_i| / sup|𝒜f|` between the two evaluation routes.
pub fn decomposition_discrepancy(f: &SamplePath, cfg: &OperatorConfig) -> Result<f64> {
    let direct = operator_a(f, cfg)?;
    let terms = operator_a_terms(f, cfg)?;
    let mut diff: f64 = 0.0;
    for (k, d) in direct.values().iter().enumerate() {
        let s = terms[0][k] + terms[1][k] + terms[2][k] + terms[3][k];
        diff = diff.max((d - s).abs());
    }
    let scale = direct.sup_norm();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// `κ_H = c_H Γ(H + 1/2)`, with `c_H` the Volterra kernel normalization:
/// the kernel operator is `κ_H` times the bare fractional composition, so
/// `𝒜 B = κ_H W` when `B = ∫ K_H dW`.
pub fn kernel_scale(h: HurstParam) -> Result<f64> {
    Ok(VolterraKernel::new(h)?.normalization() * gamma(h.value() + 0.5))
}

/// `𝒜 B / κ_H`: the driving Brownian motion of an fBm path.
pub fn fbm_to_bm(path: &SamplePath, h: HurstParam) -> Result<SamplePath> {
    let out = operator_a(path, &OperatorConfig::new(h))?;
    if h.value() == 0.5 {
        return Ok(out.with_label(PathLabel::Bm));
    }
    let k = kernel_scale(h)?;
    out.map(PathLabel::Bm, |v| v / k)
}

/// `C` in `‖𝒜f‖_∞ ≤ C T^{1/2−H} ‖f‖_∞`, summing the bounds of the four
/// terms: `4 B(α, α+1) / Γ(α)`.
pub fn boundedness_constant(h: HurstParam) -> Result<f64> {
    let h = check_hurst(h)?;
    if h == 0.5 {
        return Ok(1.0);
    }
    let a = 0.5 - h;
    Ok(4.0 * beta(a, a + 1.0) / gamma(a))
}

/// `‖𝒜f‖_∞ / (T^{1/2−H} ‖f‖_∞)`.
pub fn boundedness_ratio(f: &SamplePath, h: HurstParam) -> Result<f64> {
    let out = operator_a(f, &OperatorConfig::new(h))?;
    let norm = f.sup_norm();
    if norm == 0.0 {
        return domain("boundedness ratio of the zero path");
    }
    Ok(out.sup_norm() / (f.grid().t_end().powf(0.5 - h.value()) * norm))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub paths: usize,
    /// Slope of `log Var X_t` against `log t`.
    pub variance_slope: Option<f64>,
    /// Correlation of consecutive increments, pooled over time.
    pub lag1_correlation: f64,
    /// Fourth moment of per-step standardized increments.
    pub kurtosis: f64,
    pub degenerate: bool,
}

/// Checks an ensemble against the Brownian law: linear variance growth,
/// uncorrelated and Gaussian increments. Variance is regressed over the
/// dyadic times from `T/64` to `T`.
pub fn gaussianity_diagnostic(paths: &[SamplePath]) -> Result<GaussianityReport> {
    if paths.len() < 500 {
        return Err(Error::Estimation(format!("need at least 500 paths, got {}", paths.len())));
    }
    let grid = paths[0].grid();
    if paths.iter().any(|p| p.grid() != grid) {
        return domain("all paths must share the grid");
    }
    let n = grid.n_steps();
    let column = |k: usize| paths.iter().map(|p| p.values()[k]).collect::<Vec<_>>();
    let mut lt = Vec::new();
    let mut lv = Vec::new();
    let mut k = (n / 64).max(1);
    while k <= n {
        let v = variance(&column(k));
        if v > 0.0 {
            lt.push(grid.time(k).ln());
            lv.push(v.ln());
        }
        k *= 2;
    }
    let increments: Vec<Vec<f64>> = paths.iter().map(|p| p.increments()).collect();
    let step_sd: Vec<f64> = (0..n)
        .map(|k| variance(&increments.iter().map(|d| d[k]).collect::<Vec<_>>()).sqrt())
        .collect();
    let degenerate = step_sd.iter().all(|s| *s == 0.0);
    let (mut num, mut d0, mut d1, mut m4, mut count) = (0.0, 0.0, 0.0, 0.0, 0usize);
    let means: Vec<f64> = (0..n).map(|k| mean(&increments.iter().map(|d| d[k]).collect::<Vec<_>>())).collect();
    for d in &increments {
        for k in 0..n {
            if step_sd[k] > 0.0 {
                let z = (d[k] - means[k]) / step_sd[k];
                m4 += z.powi(4);
                count += 1;
            }
            if k + 1 < n {
                let (x, y) = (d[k] - means[k], d[k + 1] - means[k + 1]);
                num += x * y;
                d0 += x * x;
                d1 += y * y;
            }
        }
    }
    let rho = if d0 > 0.0 && d1 > 0.0 { num / (d0 * d1).sqrt() } else { 0.0 };
    let fit = if lt.len() >= 2 { linear_fit(&lt, &lv) } else { None };
    Ok(GaussianityReport {
        paths: paths.len(),
        variance_slope: fit.map(|f| f.slope),
        lag1_correlation: rho,
        kurtosis: if count > 0 { m4 / count as f64 } else { 0.0 },
        degenerate: degenerate || fit.is_none(),
    })
}
