//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 2000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-13, rel: 1e-11 }
    }
}

/// Integrates `f` over `[a, b]` by global adaptive bisection.
///
/// Returns the estimate together with its error bound; fails when the
/// interval budget runs out before the tolerance is met.
pub fn integrate_with_error<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if parts.len() >= MAX_INTERVALS {
            // Report failure only if the remaining error is not round-off.
            if err > 1e3 * tol.abs.max(tol.rel * total.abs()) {
                return Err(Error::Quadrature { a, b, error: err });
            }
            break;
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, pv, pe) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further in floating point
            parts.push((lo, hi, pv, 0.0));
            err -= pe;
            continue;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    // Resum to shed accumulated cancellation in the running totals.
    let value: f64 = parts.iter().map(|p| p.2).sum();
    let error: f64 = parts.iter().map(|p| p.3).sum();
    Ok((value, error))
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_with_error(f, a, b, tol).map(|r| r.0)
}

/// Integrates `f` over `[a, b]` when `f` behaves like `(x-a)^alpha_a` near `a`
/// and like `(b-x)^alpha_b` near `b` (exponents > -1).
///
/// Each half is mapped through `x - a = u^{1/(1+alpha_a)}` (and its mirror)
/// which cancels the power singularity before the Kronrod rule sees it.
pub fn integrate_power_ends<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    alpha_a: f64,
    alpha_b: f64,
    tol: Tolerance,
) -> Result<f64> {
    if alpha_a <= -1.0 || alpha_b <= -1.0 {
        return Err(Error::SingularIntegral(format!(
            "endpoint exponents must exceed -1, got {alpha_a} and {alpha_b}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let mid = 0.5 * (a + b);
    let half = mid - a;
    let left = {
        let ea = 1.0 + alpha_a;
        let umax = half.powf(ea);
        integrate(
            |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let d = u.powf(1.0 / ea);
                let x = a + d;
                // below the floating point resolution of the endpoint
                if x == a {
                    return 0.0;
                }
                f(x) * d / (ea * u)
            },
            0.0,
            umax,
            tol,
        )?
    };
    let right = {
        let eb = 1.0 + alpha_b;
        let umax = half.powf(eb);
        integrate(
            |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let d = u.powf(1.0 / eb);
                let x = b - d;
                if x == b {
                    return 0.0;
                }
                f(x) * d / (eb * u)
            },
            0.0,
            umax,
            tol,
        )?
    };
    Ok(left + right)
}
