use fbmlab::averaging::{DirectFunctional, LocalTimeFunctional};
use fbmlab::besov::DriftSpec;
use fbmlab::fbm::*;
use fbmlab::localtime::{occupation_density, SpaceGrid};
use fbmlab::stats::linear_fit;
use fbmlab::young::*;
use fbmlab::Error;
use proptest::prelude::*;

fn fbm_path(h: f64, n: usize, seed: u64) -> SamplePath {
    sample_fbm_circulant(Grid::new(1.0, n).unwrap(), HurstParam::new(h).unwrap(), RngSeed::new(seed)).unwrap()
}

fn smooth_drift() -> DriftSpec {
    DriftSpec::gaussian(1.0, 0.3).unwrap()
}

#[test]
fn y_independent_integral_is_exact() {
    let g = Grid::new(2.0, 64).unwrap();
    let a = AnalyticFunctional::new(g, |t, _| 1.5 * t);
    let x = SamplePath::from_fn(g, PathLabel::Generic, |t| t.sin()).unwrap();
    let r = nly_integral(&a, &x, 8, 40, 10).unwrap();
    for s in &r.sums {
        assert!((s - 1.5 * (g.time(40) - g.time(8))).abs() < 1e-14);
    }
}

#[test]
fn linear_functional_on_constant_path() {
    let g = Grid::new(1.0, 32).unwrap();
    let a = AnalyticFunctional::new(g, |t, y| t * y);
    let x = SamplePath::constant(g, 0.7).unwrap();
    let r = nly_integral(&a, &x, 0, 32, 8).unwrap();
    assert!(r.sums.iter().all(|s| (s - 0.7).abs() < 1e-15));
}

#[test]
fn integral_matches_time_quadrature() {
    let w = fbm_path(0.3, 4096, 1);
    let x = SamplePath::from_fn(w.grid(), PathLabel::Generic, |t| 0.3 * (3.0 * t).cos()).unwrap();
    let b = smooth_drift();
    let a = DirectFunctional::new(b.clone(), w.clone()).unwrap();
    let r = nly_integral(&a, &x, 0, 4096, 12).unwrap();
    let dt = w.grid().dt();
    let oracle: f64 = (0..4096)
        .map(|k| {
            let f = |i: usize| b.eval(x.values()[i] + w.values()[i]).unwrap();
            0.5 * dt * (f(k) + f(k + 1))
        })
        .sum();
    // germs freeze x at the left end of each step: an O(Δt) difference
    assert!((r.value - oracle).abs() < dt, "{} vs {oracle}", r.value);
    // the trace is a Cauchy sequence
    assert!(r.trace.last().unwrap() < &r.trace[0]);
}

#[test]
fn integral_is_additive() {
    let w = fbm_path(0.3, 1024, 2);
    let x = fbm_path(0.45, 1024, 3);
    let a = DirectFunctional::new(smooth_drift(), w).unwrap();
    let whole = nly_integral(&a, &x, 0, 1024, 12).unwrap().value;
    let left = nly_integral(&a, &x, 0, 512, 12).unwrap().value;
    let right = nly_integral(&a, &x, 512, 1024, 12).unwrap().value;
    assert!((whole - left - right).abs() < 1e-12);
}

#[test]
fn sewing_defect_vanishes_exactly() {
    let w = fbm_path(0.3, 256, 4);
    let g = w.grid();
    let exps = YoungExponents { p: 1.2, q: 2.5, eta: 0.6 };
    let flat = AnalyticFunctional::new(g, |t, _| t * t);
    let r = sewing_residual(&flat, &w, 0, 256, exps).unwrap();
    assert_eq!(r.lhs, 0.0);
    let a = DirectFunctional::new(smooth_drift(), w.clone()).unwrap();
    let c = SamplePath::constant(g, 0.2).unwrap();
    assert_eq!(sewing_residual(&a, &c, 10, 200, exps).unwrap().lhs, 0.0);
    let bad = YoungExponents { p: 2.0, q: 2.0, eta: 0.5 };
    assert!(matches!(sewing_residual(&a, &c, 0, 256, bad), Err(Error::Precondition(_))));
}

#[test]
fn sewing_ratio_is_bounded_over_corpus() {
    let exps = YoungExponents { p: 1.0, q: 1.0 / 0.45, eta: 0.5 };
    let mut ratios = Vec::new();
    for seed in 0..6 {
        let w = fbm_path(0.3, 1024, 10 + seed);
        let x = fbm_path(0.45, 1024, 100 + seed);
        let a = DirectFunctional::new(smooth_drift(), w).unwrap();
        let r = sewing_residual(&a, &x, 0, 1024, exps).unwrap();
        assert!(r.ratio.is_finite());
        ratios.push(r.ratio);
        // stable under refinement of the path
        let coarse_w = fbm_path(0.3, 1024, 10 + seed).subsample(4).unwrap();
        let a2 = DirectFunctional::new(smooth_drift(), coarse_w).unwrap();
        let r2 = sewing_residual(&a2, &x.subsample(4).unwrap(), 0, 256, exps).unwrap();
        assert!(r2.ratio < 10.0 * r.ratio.max(1e-3));
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(max < 10.0, "ratios {ratios:?}");
}

#[test]
fn euler_on_constant_functional() {
    let g = Grid::new(1.0, 64).unwrap();
    let a = AnalyticFunctional::new(g, |t, _| 2.0 * t);
    let y = nly_solve_euler(&a, 0.5, Grid::new(1.0, 8).unwrap()).unwrap();
    for (k, v) in y.values().iter().enumerate() {
        assert!((v - (0.5 + 2.0 * g.time(k))).abs() < 1e-14);
    }
    assert!(nly_solve_euler(&a, 0.0, Grid::new(1.0, 7).unwrap()).is_err());
}

#[test]
fn euler_converges_to_exponential_at_first_order() {
    let fine = Grid::new(1.0, 1 << 12).unwrap();
    let a = AnalyticFunctional::new(fine, |t, y| t * y);
    let ns = [16usize, 32, 64, 128, 256, 512];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let y = nly_solve_euler(&a, 1.0, Grid::new(1.0, n).unwrap()).unwrap();
            (y.values()[1 << 12] - 1f64.exp()).abs()
        })
        .collect();
    let x: Vec<f64> = ns.iter().map(|&n| (1.0 / n as f64).ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let order = linear_fit(&x, &y).unwrap().slope;
    assert!((order - 1.0).abs() <= 0.15, "order {order}");
}

#[test]
fn euler_residual_decreases_under_refinement() {
    let w = fbm_path(0.3, 4096, 5);
    let a = DirectFunctional::new(DriftSpec::gaussian(1.0, 0.1).unwrap(), w).unwrap();
    let ns = [16usize, 64, 256, 1024];
    let res: Vec<f64> = ns
        .iter()
        .map(|&n| nly_residual(&a, &nly_solve_euler(&a, 0.1, Grid::new(1.0, n).unwrap()).unwrap()).unwrap())
        .collect();
    assert!(res.windows(2).all(|p| p[1] < p[0]), "{res:?}");
    let x: Vec<f64> = ns.iter().map(|&n| (1.0 / n as f64).ln()).collect();
    let y: Vec<f64> = res.iter().map(|e| e.ln()).collect();
    assert!(linear_fit(&x, &y).unwrap().slope > 0.0);
    // solving on the functional's own grid leaves no defect
    let full = nly_solve_euler(&a, 0.1, Grid::new(1.0, 4096).unwrap()).unwrap();
    assert!(nly_residual(&a, &full).unwrap() < 1e-14);
}

#[test]
fn zero_functional_has_zero_residual() {
    let g = Grid::new(1.0, 16).unwrap();
    let a = AnalyticFunctional::new(g, |_, _| 0.0);
    assert_eq!(nly_residual(&a, &SamplePath::constant(g, 3.0).unwrap()).unwrap(), 0.0);
}

#[test]
fn point_mass_euler_is_nondecreasing() {
    let w = fbm_path(0.25, 2048, 6);
    let lt = occupation_density(&w, SpaceGrid::covering(&w, 2048).unwrap()).unwrap();
    let a = LocalTimeFunctional::new(DriftSpec::dirac(1.0), &lt);
    let y = nly_solve_euler(&a, 0.0, Grid::new(1.0, 2048).unwrap()).unwrap();
    assert!(y.values().windows(2).all(|p| p[1] >= p[0]));
    assert!(y.values()[2048] > 0.0);
}

#[test]
fn stability_gap_examples() {
    let w = fbm_path(0.3, 512, 7);
    let g = w.grid();
    let exps = YoungExponents { p: 1.0, q: 2.5, eta: 0.5 };
    let a = DirectFunctional::new(smooth_drift(), w.clone()).unwrap();
    let x = fbm_path(0.45, 512, 8);
    assert_eq!(stability_gap(&a, &x, &x, 0, 512, 0.2, exps).unwrap().gap, 0.0);
    let flat = AnalyticFunctional::new(g, |t, _| t);
    let y = x.map(PathLabel::Generic, |v| v + 0.3).unwrap();
    assert_eq!(stability_gap(&flat, &x, &y, 0, 512, 0.2, exps).unwrap().gap, 0.0);
    assert!(matches!(stability_gap(&a, &x, &y, 0, 512, 0.7, exps), Err(Error::Precondition(_))));
    let r = stability_gap(&a, &x, &y, 0, 512, 0.2, exps).unwrap();
    assert!(r.ratio.is_finite() && r.ratio > 0.0);
}

#[test]
fn stability_gap_scales_with_holder_exponent() {
    let g = Grid::new(1.0, 128).unwrap();
    let eta = 0.5;
    let a = AnalyticFunctional::new(g, move |t, y: f64| t * y.abs().powf(eta));
    let exps = YoungExponents { p: 1.0, q: 2.0, eta };
    let x = SamplePath::constant(g, 0.0).unwrap();
    let eps: Vec<f64> = (1..8).map(|i| 10f64.powi(-i)).collect();
    let gaps: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let y = SamplePath::constant(g, e).unwrap();
            stability_gap(&a, &x, &y, 0, 128, 0.25, exps).unwrap().gap
        })
        .collect();
    let fit = linear_fit(&eps.iter().map(|e| e.ln()).collect::<Vec<_>>(), &gaps.iter().map(|v| v.ln()).collect::<Vec<_>>()).unwrap();
    assert!((fit.slope - eta).abs() < 1e-6, "slope {}", fit.slope);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pvar_monotone_in_p(seed in 0u64..1000, p in 1.0f64..4.0, dp in 0.0f64..2.0) {
        let x = fbm_path(0.4, 64, seed);
        let lo = pvar_seminorm(&x, p).unwrap();
        let hi = pvar_seminorm(&x, p + dp).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12));
        prop_assert!(lo >= (x.values()[64] - x.values()[0]).abs() * (1.0 - 1e-12));
    }

    #[test]
    fn pvar_matches_brute_force(v in proptest::collection::vec(-2.0f64..2.0, 2..9), p in 1.0f64..3.0) {
        let g = Grid::new(1.0, v.len() - 1).unwrap();
        let x = SamplePath::new(g, v.clone(), PathLabel::Generic).unwrap();
        let n = v.len();
        let mut best = 0.0f64;
        // every subset of interior points together with both ends
        for mask in 0u32..(1 << (n - 2)) {
            let mut pts = vec![0];
            pts.extend((1..n - 1).filter(|i| mask & (1 << (i - 1)) != 0));
            pts.push(n - 1);
            let s: f64 = pts.windows(2).map(|w| (v[w[1]] - v[w[0]]).abs().powf(p)).sum();
            best = best.max(s);
        }
        let dp = pvar_seminorm(&x, p).unwrap();
        prop_assert!((dp - best.powf(1.0 / p)).abs() <= 1e-12 * dp.max(1.0));
    }

    #[test]
    fn control_is_superadditive(seed in 0u64..1000, p in 1.0f64..3.0) {
        let x = fbm_path(0.3, 64, seed);
        let c = ControlEstimate::from_pvar(&x, p, 13).unwrap();
        prop_assert!(c.superadditivity_defect() <= 1e-12);
        prop_assert_eq!(c.get(3, 3), 0.0);
    }

    #[test]
    fn chen_relation(seed in 0u64..1000, s in 0usize..40, u in 0usize..40, t in 0usize..40, y in -1.0f64..1.0) {
        let w = fbm_path(0.3, 128, seed);
        let a = DirectFunctional::new(smooth_drift(), w).unwrap();
        let mut k = [s, s + u, s + u + t];
        k.sort();
        let lhs = a.increment(k[0], k[1], y).unwrap() + a.increment(k[1], k[2], y).unwrap();
        let rhs = a.increment(k[0], k[2], y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-14);
        prop_assert_eq!(a.increment(k[1], k[1], y).unwrap(), 0.0);
    }
}
