use crate::error::{domain, Result};

use super::{DriftSpec, GridField};

/// `G_t f = g_t * f` on a periodic field, through the multiplier
/// `exp(-t ξ^2 / 2)`.
pub fn heat_field(f: &GridField, t: f64) -> Result<GridField> {
    if !(t > 0.0) {
        return domain(format!("heat semigroup needs t > 0, got {t}"));
    }
    Ok(f.apply_multiplier(|xi| (-0.5 * t * xi * xi).exp()))
}

/// `G_t b`. Point masses and Gaussians stay in closed form, gridded fields
/// go through the FFT, cusps and closures become lazily evaluated
/// convolutions.
pub fn gaussian_semigroup(b: &DriftSpec, t: f64) -> Result<DriftSpec> {
    if !(t > 0.0) {
        return domain(format!("heat semigroup needs t > 0, got {t}"));
    }
    Ok(match b {
        DriftSpec::Dirac { mass } => DriftSpec::Gaussian { mass: *mass, variance: t },
        DriftSpec::Gaussian { mass, variance } => DriftSpec::Gaussian { mass: *mass, variance: variance + t },
        DriftSpec::Gridded(g) => DriftSpec::Gridded(heat_field(g, t)?),
        DriftSpec::Heat { base, time } => DriftSpec::Heat { base: base.clone(), time: time + t },
        DriftSpec::PowerCusp { .. } | DriftSpec::Smooth(_) => {
            DriftSpec::Heat { base: Box::new(b.clone()), time: t }
        }
    })
}

/// `b^n = G_{1/n} b`.
pub fn mollify(b: &DriftSpec, n: u32) -> Result<DriftSpec> {
    if n == 0 {
        return domain("mollification level must be at least 1");
    }
    gaussian_semigroup(b, 1.0 / n as f64)
}
