//! Besov-space numerics on periodic windows: drift specifications, the
//! Gaussian heat semigroup, Littlewood–Paley blocks and discrete norms.

mod drift;
mod paley;
mod semigroup;

pub use drift::{DriftSpec, SmoothFn};
pub use paley::{
    besov_norm, besov_norm_report, dyadic_partition, littlewood_paley_blocks, BesovNormReport,
    DyadicPartition, LpBlocks,
};
pub use semigroup::{gaussian_semigroup, heat_field, mollify};

use std::io::Write;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Integrability or summability index in `[1, ∞]`; `∞` is written `"inf"`
/// in JSON.
mod index_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    #[serde(with = "index_serde")]
    pub p: f64,
    #[serde(with = "index_serde")]
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) || !s.is_finite() {
            return domain(format!("Besov indices need finite s and p, q ≥ 1, got ({s}, {p}, {q})"));
        }
        Ok(BesovParams { s, p, q })
    }

    /// `q = ∞`.
    pub fn with_sp(s: f64, p: f64) -> Result<Self> {
        Self::new(s, p, f64::INFINITY)
    }

    /// `β − 1/p`, the scaling exponent of the space.
    pub fn scaling_index(&self) -> f64 {
        self.s - 1.0 / self.p
    }
}

/// Field sampled at `x_j = x_min + j Δx`, `j = 0..m`, periodic on
/// `[x_min, x_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    x_min: f64,
    x_max: f64,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(x_min: f64, x_max: f64, values: Vec<f64>) -> Result<Self> {
        if !(x_max > x_min) {
            return domain(format!("empty window [{x_min}, {x_max}]"));
        }
        if !values.len().is_power_of_two() || values.len() < 2 {
            return domain(format!("field needs a power-of-two point count, got {}", values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("field values must be finite");
        }
        Ok(GridField { x_min, x_max, values })
    }

    pub fn from_fn(x_min: f64, x_max: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = (x_max - x_min) / m as f64;
        let values = (0..m).map(|j| f(x_min + j as f64 * dx)).collect();
        GridField::new(x_min, x_max, values)
    }

    pub fn zeros(x_min: f64, x_max: f64, m: usize) -> Result<Self> {
        GridField::new(x_min, x_max, vec![0.0; m])
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.values.len() as f64
    }

    pub fn period(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> GridField {
        GridField { values, ..*self }
    }

    pub fn scale(&self, c: f64) -> GridField {
        self.with_values(self.values.iter().map(|v| c * v).collect())
    }

    /// Periodic linear interpolation.
    pub fn interpolate(&self, x: f64) -> f64 {
        let m = self.values.len();
        let u = (x - self.x_min) / self.dx();
        let u = u.rem_euclid(m as f64);
        let i = (u.floor() as usize).min(m - 1);
        let w = u - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[(i + 1) % m]
    }

    /// Riemann sum `Σ f(x_j) Δx` over one period.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, self.dx(), p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.lp_norm(f64::INFINITY)
    }

    /// Angular frequencies `2πk/L` in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        let m = self.values.len();
        let l = self.period();
        (0..m)
            .map(|k| {
                let signed = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
                2.0 * std::f64::consts::PI * signed / l
            })
            .collect()
    }

    /// Applies a real even Fourier multiplier `σ(ξ)`.
    pub fn apply_multiplier(&self, sigma: impl Fn(f64) -> f64) -> GridField {
        let m = self.values.len();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let mut buf: Vec<Complex<f64>> = self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        for (c, xi) in buf.iter_mut().zip(self.frequencies()) {
            *c *= sigma(xi) / m as f64;
        }
        inv.process(&mut buf);
        self.with_values(buf.iter().map(|c| c.re).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.x(j), v)?;
        }
        Ok(())
    }
}

pub(crate) fn lp_norm(values: &[f64], dx: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() * dx
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dx).powf(1.0 / p)
    }
}
