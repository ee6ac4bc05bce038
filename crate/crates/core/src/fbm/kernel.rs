//! Volterra kernel `K_H(t, r)` of the Molchan–Golosov type,
//!
//! `K_H(t,r) = d_H [ (t/r)^{H-1/2} (t-r)^{H-1/2} + (1/2-H) r^{H-1/2} Q(r/t) ]`,
//! `Q(u) = ∫_u^1 w^{-2H} (1-w)^{H-1/2} dw`,
//!
//! which is the change of variables `z = r/w` applied to the tail integral
//! `r^{1/2-H} ∫_r^t z^{H-3/2} (z-r)^{H-1/2} dz`.

use crate::error::{domain, Result};
use crate::quad::{integrate_power_ends, Tolerance};
use crate::special::beta;

use super::HurstParam;

const TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-11 };

#[derive(Debug, Clone, Copy)]
pub struct VolterraKernel {
    h: f64,
    d: f64,
    /// `Q(0) = B(1-2H, H+1/2)`.
    q0: f64,
}

impl VolterraKernel {
    /// Builds the kernel and fixes `d_H` by requiring `∫_0^1 K_H(1,r)^2 dr = 1`.
    pub fn new(hurst: HurstParam) -> Result<Self> {
        let h = hurst.value();
        if hurst.is_brownian() {
            return Ok(VolterraKernel { h, d: 1.0, q0: 0.0 });
        }
        let mut k = VolterraKernel {
            h,
            d: 1.0,
            q0: beta(1.0 - 2.0 * h, h + 0.5),
        };
        let norm = k.squared_integral(1.0, 0.0, 1.0)?;
        k.d = norm.sqrt().recip();
        Ok(k)
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    /// The normalization constant `d_H`.
    pub fn normalization(&self) -> f64 {
        self.d
    }

    /// `Q(u)` for `u ∈ (0, 1]` by adaptive quadrature.
    pub fn q_quadrature(&self, u: f64) -> f64 {
        self.q_pair(u, 1.0 - u)
    }

    /// `Q(u)` given both `u` and `v = 1 - u`, so that arguments close to 1
    /// keep their distance to the endpoint exactly.
    ///
    /// For `u ≥ 1/2` the integral is taken in the variable `1 - w` over
    /// `[0, v]`, seeing only the `(1-w)^{H-1/2}` singularity; below that the
    /// complement `Q(0) − ∫_0^u` puts the `w^{-2H}` singularity at a fixed
    /// endpoint.
    fn q_pair(&self, u: f64, v: f64) -> f64 {
        let h = self.h;
        let r = if u >= 0.5 {
            integrate_power_ends(
                |y: f64| (1.0 - y).powf(-2.0 * h) * y.powf(h - 0.5),
                0.0,
                v,
                h - 0.5,
                0.0,
                TOL,
            )
        } else {
            integrate_power_ends(
                |w: f64| w.powf(-2.0 * h) * (1.0 - w).powf(h - 0.5),
                0.0,
                u,
                -2.0 * h,
                0.0,
                TOL,
            )
            .map(|p| self.q0 - p)
        };
        // The integrands are bounded after the endpoint maps; the budget is
        // never exhausted for admissible H.
        r.expect("kernel tail quadrature")
    }

    /// `Q(u)` through the regularized incomplete beta function:
    /// `Q(u) = B(1-2H, H+1/2) · I_{1-u}(H+1/2, 1-2H)`.
    pub fn q_incomplete_beta(&self, u: f64) -> f64 {
        self.q_incomplete_beta_complement(1.0 - u)
    }

    fn q_incomplete_beta_complement(&self, v: f64) -> f64 {
        let a = 1.0 - 2.0 * self.h;
        let b = self.h + 0.5;
        self.q0 * statrs::function::beta::beta_reg(b, a, v)
    }

    /// Kernel on `t = 1` without the normalization constant, at `r` with
    /// `s = 1 - r` supplied separately.
    fn unit_pair(&self, r: f64, s: f64) -> f64 {
        let h = self.h;
        (1.0 / r).powf(h - 0.5) * s.powf(h - 0.5) + (0.5 - h) * r.powf(h - 0.5) * self.q_pair(r, s)
    }

    fn unit(&self, r: f64) -> f64 {
        self.unit_pair(r, 1.0 - r)
    }

    /// `K_H(t, r)` for `0 < r < t`.
    pub fn eval(&self, t: f64, r: f64) -> Result<f64> {
        if !(r > 0.0 && r < t) {
            return domain(format!("kernel needs 0 < r < t, got r={r}, t={t}"));
        }
        if self.h == 0.5 {
            return Ok(1.0);
        }
        // K(t, r) = t^{H-1/2} K(1, r/t)
        Ok(self.d * t.powf(self.h - 0.5) * self.unit_pair(r / t, (t - r) / t))
    }

    /// `∫_a^b K_H(t, r)^2 dr` for `0 ≤ a < b ≤ t`.
    pub fn squared_integral(&self, t: f64, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a < b && b <= t) {
            return domain(format!("need 0 ≤ a < b ≤ t, got a={a}, b={b}, t={t}"));
        }
        let h = self.h;
        if h == 0.5 {
            return Ok(b - a);
        }
        let e = 2.0 * h - 1.0;
        // Below r = t/2 integrate in r, above it in the distance ρ = 1 - r/t.
        let (ua, ub) = (a / t, b / t);
        let mut v = 0.0;
        if ua < 0.5 {
            let hi = ub.min(0.5);
            let alpha = if a == 0.0 { e } else { 0.0 };
            v += integrate_power_ends(|r| self.unit(r).powi(2), ua, hi, alpha, 0.0, TOL)?;
        }
        if ub > 0.5 {
            let (ra, rb) = ((t - b) / t, ((t - a) / t).min(0.5));
            let alpha = if b == t { e } else { 0.0 };
            v += integrate_power_ends(|rho| self.unit_pair(1.0 - rho, rho).powi(2), ra, rb, alpha, 0.0, TOL)?;
        }
        Ok(self.d * self.d * t.powf(2.0 * h) * v)
    }

    /// Kernel averaged over the cell `[j, j+1]` at time `k` on the unit lattice,
    /// `(1/1)∫_j^{j+1} K_H(k, r) dr` up to the midpoint treatment of the
    /// regular factors.
    ///
    /// The singular factors `(k-r)^{H-1/2}` and `r^{H-1/2}` are integrated in
    /// closed form; the remaining factors `(k/r)^{H-1/2}` and `Q(r/k)` are
    /// taken at the cell midpoint. Scaling `K(λt, λr) = λ^{H-1/2} K(t, r)`
    /// transfers the value to a lattice of spacing `λ`.
    pub fn unit_cell_weight(&self, k: usize, j: usize) -> f64 {
        debug_assert!(j < k);
        let h = self.h;
        if h == 0.5 {
            return 1.0;
        }
        let e = h + 0.5;
        let (kf, r0, r1) = (k as f64, j as f64, j as f64 + 1.0);
        let rm = r0 + 0.5;
        let near = ((kf - r0).powf(e) - (kf - r1).powf(e)) / e;
        let far = (r1.powf(e) - r0.powf(e)) / e;
        self.d * ((kf / rm).powf(h - 0.5) * near + (0.5 - h) * self.q_incomplete_beta_complement((kf - rm) / kf) * far)
    }
}

/// `K_H(t, r)` with the normalization of [`VolterraKernel::new`].
pub fn kernel_kh(t: f64, r: f64, h: HurstParam) -> Result<f64> {
    VolterraKernel::new(h)?.eval(t, r)
}

/// `σ²_{s,t} = ∫_s^t K_H(t,r)^2 dr`, the variance of `B_t` given the
/// Brownian filtration up to `s`.
pub fn conditional_variance(s: f64, t: f64, h: HurstParam) -> Result<f64> {
    if !(0.0 <= s && s < t) {
        return domain(format!("conditional variance needs 0 ≤ s < t, got s={s}, t={t}"));
    }
    VolterraKernel::new(h)?.squared_integral(t, s, t)
}

/// `∫_s^u K_H(t,r)^2 dr = Var(E^u[B_t] − E^s[B_t])` for `s < u ≤ t`.
pub fn two_time_variant(s: f64, u: f64, t: f64, h: HurstParam) -> Result<f64> {
    if !(0.0 <= s && s < u && u <= t) {
        return domain(format!("need 0 ≤ s < u ≤ t, got s={s}, u={u}, t={t}"));
    }
    VolterraKernel::new(h)?.squared_integral(t, s, u)
}

/// `∫_0^1 K(1,r)^2 dr` through the public evaluator on a different split.
#[cfg(test)]
fn unit_variance_check(k: &VolterraKernel) -> Result<f64> {
    let e = 2.0 * k.h - 1.0;
    let inner = crate::quad::integrate(|r| k.eval(1.0, r).unwrap().powi(2), 0.25, 0.75, TOL)?;
    let lo = integrate_power_ends(|r| k.eval(1.0, r).unwrap().powi(2), 0.0, 0.25, e, 0.0, TOL)?;
    let hi = integrate_power_ends(|r| k.eval(1.0, r).unwrap().powi(2), 0.75, 1.0, 0.0, e, TOL)?;
    Ok(lo + inner + hi)
}
