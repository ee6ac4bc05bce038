use std::f64::consts::PI;

use fbmlab::besov::*;
use fbmlab::quad::{integrate, Tolerance};
use fbmlab::stats::linear_fit;
use proptest::prelude::*;

fn bump(x: f64) -> f64 {
    (-x * x / 0.08).exp() * (1.0 + 0.3 * (5.0 * x).sin())
}

/// Unit mass concentrated on the grid point at 0.
fn delta_field(x_min: f64, x_max: f64, m: usize) -> GridField {
    let mut f = GridField::zeros(x_min, x_max, m).unwrap();
    let j = ((0.0 - x_min) / f.dx()).round() as usize;
    let mut v = f.values().to_vec();
    v[j] = 1.0 / f.dx();
    f = GridField::new(x_min, x_max, v).unwrap();
    f
}

#[test]
fn reconstruction_of_smooth_bump() {
    let f = GridField::from_fn(-4.0, 4.0, 1024, bump).unwrap();
    let lp = littlewood_paley_blocks(&f, &dyadic_partition());
    let r = lp.reconstruct();
    let err = r
        .values()
        .iter()
        .zip(f.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err <= 1e-8 * f.sup_norm(), "err={err}");
    assert!(!lp.truncation_warning);
}

#[test]
fn wide_field_triggers_truncation_warning() {
    let f = GridField::from_fn(-1.0, 1.0, 256, bump).unwrap();
    assert!(littlewood_paley_blocks(&f, &dyadic_partition()).truncation_warning);
}

#[test]
fn dyadic_tone_lives_in_neighbouring_blocks() {
    // cos(2^k x) is periodic on [0, 2π)
    for k in 1..6 {
        let freq = 2f64.powi(k);
        let f = GridField::from_fn(0.0, 2.0 * PI, 512, |x| (freq * x).cos()).unwrap();
        let lp = littlewood_paley_blocks(&f, &dyadic_partition());
        for (i, b) in lp.blocks.iter().enumerate() {
            let j = LpBlocks::index(i);
            if (j - k).abs() > 1 {
                assert!(b.sup_norm() < 1e-12, "k={k} j={j} leak {}", b.sup_norm());
            }
        }
    }
}

#[test]
fn heat_of_point_mass() {
    let t = 0.3;
    let g = gaussian_semigroup(&DriftSpec::dirac(1.0), t).unwrap();
    let peak = g.eval(0.0).unwrap();
    assert!((peak - (2.0 * PI * t).powf(-0.5)).abs() < 1e-14);
    let twice = gaussian_semigroup(&g, 0.2).unwrap();
    let direct = gaussian_semigroup(&DriftSpec::dirac(1.0), 0.5).unwrap();
    for &x in &[-1.0, 0.0, 0.37] {
        assert!((twice.eval(x).unwrap() - direct.eval(x).unwrap()).abs() < 1e-15);
    }
    let ts: Vec<f64> = (2..12).map(|i| 2f64.powi(-i)).collect();
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = ts
        .iter()
        .map(|&t| gaussian_semigroup(&DriftSpec::dirac(1.0), t).unwrap().eval(0.0).unwrap().ln())
        .collect();
    assert!((linear_fit(&x, &y).unwrap().slope + 0.5).abs() < 1e-12);
}

#[test]
fn gridded_heat_matches_closed_form() {
    // G_t of a Gaussian sample is the wider Gaussian, away from the window edges
    let f = GridField::from_fn(-8.0, 8.0, 1024, |x| (-x * x / 0.2).exp() / (0.1 * 2.0 * PI).sqrt()).unwrap();
    let g = heat_field(&f, 0.15).unwrap();
    let exact = DriftSpec::gaussian(1.0, 0.25).unwrap();
    for j in (0..1024).step_by(37) {
        let x = g.x(j);
        assert!((g.values()[j] - exact.eval(x).unwrap()).abs() < 1e-10, "x={x}");
    }
    assert!(heat_field(&f, 0.0).is_err());
}

#[test]
fn heat_smoothing_rate_of_point_mass_fields() {
    let f = delta_field(-8.0, 8.0, 4096);
    let ts: Vec<f64> = (2..=10).map(|i| 2f64.powi(-i)).collect();
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    for &(gamma, p) in &[(-1.0, f64::INFINITY), (0.0, 1.0)] {
        let y: Vec<f64> = ts.iter().map(|&t| heat_field(&f, t).unwrap().lp_norm(p).ln()).collect();
        let slope = linear_fit(&x, &y).unwrap().slope;
        assert!(slope >= gamma / 2.0 - 0.05, "p={p}: slope {slope}");
    }
}

#[test]
fn heat_smoothing_rate_of_cusp() {
    let theta = -0.6;
    let b = DriftSpec::power_cusp(1.0, theta, 1.0).unwrap();
    let ts: Vec<f64> = (2..=10).map(|i| 2f64.powi(-i)).collect();
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = ts
        .iter()
        .map(|&t| gaussian_semigroup(&b, t).unwrap().eval(0.0).unwrap().ln())
        .collect();
    let slope = linear_fit(&x, &y).unwrap().slope;
    assert!(slope >= theta / 2.0 - 0.05, "slope {slope}");
}

#[test]
fn mollified_cusp_keeps_mass() {
    let b = DriftSpec::power_cusp(1.0, -0.75 + 0.05, 1.0).unwrap();
    let bn = mollify(&b, 16).unwrap();
    let r = 1.0 + 12.0 * (1.0f64 / 16.0).sqrt();
    let tol = Tolerance { abs: 1e-12, rel: 1e-11 };
    let mass = integrate(|x| bn.eval(x).unwrap(), -r, 0.0, tol).unwrap()
        + integrate(|x| bn.eval(x).unwrap(), 0.0, r, tol).unwrap();
    assert!((mass - b.mass().unwrap()).abs() < 1e-8, "{mass} vs {}", b.mass().unwrap());
}

fn heat_kernel_field(t: f64, m: usize) -> GridField {
    GridField::from_fn(-4.0, 4.0, m, |x| (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()).unwrap()
}

#[test]
fn point_mass_is_in_b_minus_one() {
    let crit = BesovParams::with_sp(-1.0, f64::INFINITY).unwrap();
    let crit_norms: Vec<f64> = (4..=12).map(|i| besov_norm(&heat_kernel_field(2f64.powi(-i), 1 << 14), crit)).collect();
    let hi = crit_norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let lo = crit_norms.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(hi / lo < 1.05, "critical norms {crit_norms:?}");

    // Above the critical index the norm grows like t^{-ε/2} once the dyadic
    // blocks dominate the low-frequency block, which happens below t ≈ 2^-9.
    let eps = 0.4;
    let above = BesovParams::with_sp(-1.0 + eps, f64::INFINITY).unwrap();
    let ts: Vec<f64> = (10..=14).map(|i| 2f64.powi(-i)).collect();
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = ts.iter().map(|&t| besov_norm(&heat_kernel_field(t, 1 << 15), above).ln()).collect();
    let slope = linear_fit(&x, &y).unwrap().slope;
    assert!((slope + eps / 2.0).abs() < 0.05, "divergence slope {slope}");
}

#[test]
fn mollification_converges_in_weaker_norm() {
    let m = 4096;
    let (lo, hi) = (-4.0, 4.0);
    // gaussian: declared (1, ∞); measure in (1/2, ∞)
    let b = DriftSpec::gaussian(1.0, 0.05).unwrap();
    let params = BesovParams::with_sp(0.5, f64::INFINITY).unwrap();
    let base = GridField::from_fn(lo, hi, m, |x| b.eval(x).unwrap()).unwrap();
    let mut last = f64::INFINITY;
    for n in [4u32, 16, 64, 256] {
        let bn = mollify(&b, n).unwrap();
        let diff = GridField::from_fn(lo, hi, m, |x| bn.eval(x).unwrap() - b.eval(x).unwrap()).unwrap();
        let d = besov_norm(&diff, params);
        assert!(d < last, "n={n}");
        last = d;
    }
    assert!(last < 0.1 * besov_norm(&base, params));
    // cusp: declared (1+θ, 1); measure in ((1+θ)/2, 1)
    let theta = -0.5;
    let c = DriftSpec::power_cusp(1.0, theta, 1.0).unwrap();
    let cf = c.to_grid_field(lo, hi, m).unwrap();
    let params = BesovParams::with_sp(0.5 * (1.0 + theta), 1.0).unwrap();
    let mut last = f64::INFINITY;
    for n in [4u32, 16, 64, 256] {
        let smooth = heat_field(&cf, 1.0 / n as f64).unwrap();
        let diff = GridField::new(lo, hi, smooth.values().iter().zip(cf.values()).map(|(a, b)| a - b).collect())
            .unwrap();
        let d = besov_norm(&diff, params);
        assert!(d < last, "cusp n={n}");
        last = d;
    }
}

fn corpus_field(seed: u64) -> GridField {
    // smooth random trigonometric bump, deterministic in the seed
    let a = (seed % 7) as f64 * 0.3 + 0.5;
    let b = (seed % 5) as f64 + 1.0;
    let c = ((seed / 7) % 11) as f64 * 0.1;
    GridField::from_fn(-4.0, 4.0, 512, move |x| (-(x - c) * (x - c) * a).exp() * (b * x).cos()).unwrap()
}

#[test]
fn embedding_ratio_bounded_over_corpus() {
    for seed in 0..20 {
        let f = corpus_field(seed);
        for &p in &[1.0, 2.0, f64::INFINITY] {
            let (s1, s2) = (0.7, -0.4);
            let strong = besov_norm(&f, BesovParams::with_sp(s1, p).unwrap());
            let weak = besov_norm(&f, BesovParams::with_sp(s2, p).unwrap());
            assert!(weak <= 2f64.powf(s1 - s2) * strong * (1.0 + 1e-12));
        }
    }
}

#[test]
fn norm_reports_window() {
    let f = corpus_field(3);
    let r = besov_norm_report(&f, BesovParams::with_sp(0.0, 2.0).unwrap());
    assert_eq!((r.x_min, r.x_max, r.points), (-4.0, 4.0, 512));
    assert!(r.last_block >= 0);
}

proptest! {
    #[test]
    fn homogeneity(c in -50.0f64..50.0, s in -2.0f64..2.0, seed in 0u64..100) {
        let f = corpus_field(seed);
        for &(p, q) in &[(1.0, 1.0), (2.0, f64::INFINITY), (f64::INFINITY, 2.0)] {
            let params = BesovParams::new(s, p, q).unwrap();
            let a = besov_norm(&f.scale(c), params);
            let b = c.abs() * besov_norm(&f, params);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }

    #[test]
    fn embedding_monotone(s1 in -1.5f64..1.5, gap in 0.0f64..1.5, seed in 0u64..100) {
        let f = corpus_field(seed);
        let s2 = s1 - gap;
        let strong = besov_norm(&f, BesovParams::with_sp(s1, 2.0).unwrap());
        let weak = besov_norm(&f, BesovParams::with_sp(s2, 2.0).unwrap());
        prop_assert!(weak <= 2f64.powf(gap) * strong * (1.0 + 1e-12));
    }
}
