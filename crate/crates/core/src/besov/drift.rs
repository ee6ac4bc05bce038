use std::fmt;
use std::sync::Arc;

use statrs::function::erf::erf;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, integrate_power_ends, Tolerance};

use super::{BesovParams, GridField};

const TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-11 };
/// Gaussian tails beyond this many standard deviations are dropped.
const TAIL_SIGMAS: f64 = 12.0;

/// Pointwise drift given by a closure.
#[derive(Clone)]
pub struct SmoothFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub name: String,
    pub bounded: bool,
    pub nonnegative: bool,
}

impl SmoothFn {
    pub fn new(
        name: impl Into<String>,
        bounded: bool,
        nonnegative: bool,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SmoothFn { f: Arc::new(f), name: name.into(), bounded, nonnegative }
    }

    pub fn constant(c: f64) -> Self {
        SmoothFn::new(format!("constant({c})"), true, c >= 0.0, move |_| c)
    }

    /// `x ↦ slope·x`, unbounded.
    pub fn linear(slope: f64) -> Self {
        SmoothFn::new(format!("linear({slope})"), false, false, move |x| slope * x)
    }

    pub fn call(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFn")
            .field("name", &self.name)
            .field("bounded", &self.bounded)
            .finish()
    }
}

/// Drift `b` of the equation `dX = b(X) dt + dB`.
#[derive(Debug, Clone)]
pub enum DriftSpec {
    /// `mass · δ_0`.
    Dirac { mass: f64 },
    /// `mass · g_variance`, the centered Gaussian density.
    Gaussian { mass: f64, variance: f64 },
    /// `amplitude · |x|^exponent` on `|x| ≤ cutoff`, zero outside;
    /// `exponent ∈ (-1, 0)`.
    PowerCusp { amplitude: f64, exponent: f64, cutoff: f64 },
    Smooth(SmoothFn),
    /// Periodic field on its window.
    Gridded(GridField),
    /// `G_time` applied to a cusp or closure, evaluated by quadrature.
    Heat { base: Box<DriftSpec>, time: f64 },
}

fn gaussian_density(x: f64, variance: f64) -> f64 {
    (-x * x / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// `∫_{-∞}^x g_v`.
fn gaussian_cdf(x: f64, variance: f64) -> f64 {
    0.5 * (1.0 + erf(x / (2.0 * variance).sqrt()))
}

impl DriftSpec {
    pub fn dirac(mass: f64) -> Self {
        DriftSpec::Dirac { mass }
    }

    pub fn gaussian(mass: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return domain(format!("Gaussian drift needs positive variance, got {variance}"));
        }
        Ok(DriftSpec::Gaussian { mass, variance })
    }

    pub fn power_cusp(amplitude: f64, exponent: f64, cutoff: f64) -> Result<Self> {
        if !(exponent > -1.0 && exponent < 0.0) {
            return domain(format!("cusp exponent must lie in (-1, 0), got {exponent}"));
        }
        if !(cutoff > 0.0) {
            return domain(format!("cusp cutoff must be positive, got {cutoff}"));
        }
        Ok(DriftSpec::PowerCusp { amplitude, exponent, cutoff })
    }

    pub fn constant(c: f64) -> Self {
        DriftSpec::Smooth(SmoothFn::constant(c))
    }

    pub fn zero() -> Self {
        DriftSpec::constant(0.0)
    }

    /// Declared regularity `(β, p)` of the drift.
    pub fn besov_meta(&self) -> BesovParams {
        let inf = f64::INFINITY;
        match self {
            // a finite measure lies in B^0_{1,∞}
            DriftSpec::Dirac { .. } => BesovParams { s: 0.0, p: 1.0, q: inf },
            // |x|^θ with compact support lies in B^{1+θ}_{1,∞}
            DriftSpec::PowerCusp { exponent, .. } => BesovParams { s: 1.0 + exponent, p: 1.0, q: inf },
            DriftSpec::Gridded(_) => BesovParams { s: 0.0, p: inf, q: inf },
            DriftSpec::Gaussian { .. } | DriftSpec::Smooth(_) | DriftSpec::Heat { .. } => {
                BesovParams { s: 1.0, p: inf, q: inf }
            }
        }
    }

    /// Nonnegative measures: the drifts for which the path-by-path solver
    /// and the monotonicity of `X − B` apply.
    pub fn is_measure(&self) -> bool {
        match self {
            DriftSpec::Dirac { mass } => *mass >= 0.0,
            DriftSpec::Gaussian { mass, .. } => *mass >= 0.0,
            DriftSpec::PowerCusp { amplitude, .. } => *amplitude >= 0.0,
            DriftSpec::Heat { base, .. } => base.is_measure(),
            DriftSpec::Smooth(_) | DriftSpec::Gridded(_) => false,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            DriftSpec::Smooth(f) => f.nonnegative,
            DriftSpec::Gridded(g) => g.values().iter().all(|&v| v >= 0.0),
            _ => self.is_measure(),
        }
    }

    /// Whether a bounded pointwise representative exists.
    pub fn is_bounded(&self) -> bool {
        match self {
            DriftSpec::Dirac { .. } | DriftSpec::PowerCusp { .. } => false,
            DriftSpec::Smooth(f) => f.bounded,
            DriftSpec::Heat { base, .. } => match base.as_ref() {
                DriftSpec::Smooth(f) => f.bounded,
                _ => true,
            },
            DriftSpec::Gaussian { .. } | DriftSpec::Gridded(_) => true,
        }
    }

    /// Total integral when finite and known.
    pub fn mass(&self) -> Option<f64> {
        match self {
            DriftSpec::Dirac { mass } | DriftSpec::Gaussian { mass, .. } => Some(*mass),
            DriftSpec::PowerCusp { amplitude, exponent, cutoff } => {
                Some(2.0 * amplitude * cutoff.powf(exponent + 1.0) / (exponent + 1.0))
            }
            DriftSpec::Gridded(g) => Some(g.mass()),
            DriftSpec::Smooth(_) => None,
            DriftSpec::Heat { base, .. } => base.mass(),
        }
    }

    /// Half-width of an interval outside which the drift vanishes up to
    /// round-off; `None` for drifts without decay.
    pub fn effective_support(&self) -> Option<f64> {
        match self {
            DriftSpec::Dirac { .. } => Some(0.0),
            DriftSpec::Gaussian { variance, .. } => Some(TAIL_SIGMAS * variance.sqrt()),
            DriftSpec::PowerCusp { cutoff, .. } => Some(*cutoff),
            DriftSpec::Heat { base, time } => {
                base.effective_support().map(|r| r + TAIL_SIGMAS * time.sqrt())
            }
            DriftSpec::Smooth(_) | DriftSpec::Gridded(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DriftSpec::Dirac { mass } => format!("dirac(mass={mass})"),
            DriftSpec::Gaussian { mass, variance } => format!("gaussian(mass={mass}, variance={variance})"),
            DriftSpec::PowerCusp { amplitude, exponent, cutoff } => {
                format!("power_cusp(amplitude={amplitude}, exponent={exponent}, cutoff={cutoff})")
            }
            DriftSpec::Smooth(f) => format!("smooth({})", f.name),
            DriftSpec::Gridded(g) => format!("gridded(window=[{}, {}], points={})", g.x_min(), g.x_max(), g.len()),
            DriftSpec::Heat { base, time } => format!("heat(time={time}, {})", base.describe()),
        }
    }

    /// Pointwise value; fails for drifts without a bounded representative at `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            DriftSpec::Dirac { .. } => domain("a point mass has no pointwise values; use the local-time route"),
            DriftSpec::Gaussian { mass, variance } => Ok(mass * gaussian_density(x, *variance)),
            DriftSpec::PowerCusp { amplitude, exponent, cutoff } => {
                if x == 0.0 {
                    return domain("power cusp is unbounded at 0; use the local-time route");
                }
                Ok(if x.abs() <= *cutoff { amplitude * x.abs().powf(*exponent) } else { 0.0 })
            }
            DriftSpec::Smooth(f) => Ok(f.call(x)),
            DriftSpec::Gridded(g) => Ok(g.interpolate(x)),
            DriftSpec::Heat { base, time } => heat_eval(base, *time, x),
        }
    }

    /// `∫_lo^hi b`; a point mass counts on `[lo, hi)`.
    pub fn cell_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        match self {
            DriftSpec::Dirac { mass } => Ok(if lo <= 0.0 && 0.0 < hi { *mass } else { 0.0 }),
            DriftSpec::Gaussian { mass, variance } => {
                // upper-tail form keeps precision for cells far out on the right
                if lo > 0.0 {
                    Ok(mass * (gaussian_cdf(-lo, *variance) - gaussian_cdf(-hi, *variance)))
                } else {
                    Ok(mass * (gaussian_cdf(hi, *variance) - gaussian_cdf(lo, *variance)))
                }
            }
            DriftSpec::PowerCusp { amplitude, exponent, cutoff } => {
                let e = exponent + 1.0;
                let anti = |u: f64| {
                    let u = u.clamp(-cutoff, *cutoff);
                    u.signum() * u.abs().powf(e) / e
                };
                Ok(amplitude * (anti(hi) - anti(lo)))
            }
            DriftSpec::Smooth(f) => integrate(|x| f.call(x), lo, hi, TOL),
            DriftSpec::Gridded(g) => integrate(|x| g.interpolate(x), lo, hi, TOL),
            DriftSpec::Heat { .. } => integrate(|x| self.eval(x).unwrap_or(0.0), lo, hi, TOL),
        }
    }

    /// Cell averages on the periodic window of `m` points starting at `x_min`,
    /// cell `j` being `[x_j - Δx/2, x_j + Δx/2)`.
    pub fn to_grid_field(&self, x_min: f64, x_max: f64, m: usize) -> Result<GridField> {
        let dx = (x_max - x_min) / m as f64;
        let values = (0..m)
            .map(|j| {
                let c = x_min + j as f64 * dx;
                self.cell_integral(c - 0.5 * dx, c + 0.5 * dx).map(|v| v / dx)
            })
            .collect::<Result<Vec<_>>>()?;
        GridField::new(x_min, x_max, values)
    }
}

/// `(G_t b)(x) = ∫ b(y) g_t(x - y) dy` for cusp and closure drifts.
fn heat_eval(base: &DriftSpec, t: f64, x: f64) -> Result<f64> {
    let w = TAIL_SIGMAS * t.sqrt();
    let kernel = |y: f64| gaussian_density(x - y, t);
    match base {
        DriftSpec::PowerCusp { amplitude, exponent, cutoff } => {
            let lo = (x - w).max(-cutoff);
            let hi = (x + w).min(*cutoff);
            if lo >= hi {
                return Ok(0.0);
            }
            let f = |y: f64| amplitude * y.abs().powf(*exponent) * kernel(y);
            // keep the cusp at an endpoint of each piece
            let mut acc = 0.0;
            if lo < 0.0 {
                acc += integrate_power_ends(f, lo, hi.min(0.0), 0.0, *exponent, TOL)?;
            }
            if hi > 0.0 {
                acc += integrate_power_ends(f, lo.max(0.0), hi, *exponent, 0.0, TOL)?;
            }
            Ok(acc)
        }
        DriftSpec::Smooth(g) => integrate(|y| g.call(y) * kernel(y), x - w, x + w, TOL),
        other => Err(Error::Domain(format!(
            "heat evaluation is only used for cusps and closures, got {}",
            other.describe()
        ))),
    }
}
