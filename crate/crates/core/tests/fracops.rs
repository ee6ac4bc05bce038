use fbmlab::fbm::*;
use fbmlab::fracops::*;
use fbmlab::special::gamma;
use proptest::prelude::*;

fn hurst(h: f64) -> HurstParam {
    HurstParam::new(h).unwrap()
}

fn path(n: usize, f: impl Fn(f64) -> f64) -> SamplePath {
    SamplePath::from_fn(Grid::new(1.0, n).unwrap(), PathLabel::Generic, f).unwrap()
}

/// Smooth, rough, oscillating and random paths on one grid.
fn corpus(n: usize) -> Vec<SamplePath> {
    let mut out = Vec::new();
    for k in 1..=10 {
        let k = k as f64;
        out.push(path(n, |t| (k * t).sin()));
        out.push(path(n, |t| (k * t).cos()));
        out.push(path(n, |t| t.powf(0.1 * k)));
        out.push(path(n, |t| ((t - 0.1 * k + 0.05).abs()).sqrt()));
    }
    let g = Grid::new(1.0, n).unwrap();
    for seed in 0..10 {
        out.push(sample_fbm_circulant(g, hurst(0.1 + 0.04 * seed as f64), RngSeed::new(seed)).unwrap());
    }
    out
}

#[test]
fn operator_annihilates_constants() {
    for h in [0.1, 0.25, 0.3, 0.45] {
        let c = path(2048, |_| 3.7);
        let out = operator_a(&c, &OperatorConfig::new(hurst(h))).unwrap();
        assert!(out.sup_norm() <= 1e-10, "H={h}: {}", out.sup_norm());
    }
}

#[test]
fn half_is_the_identity() {
    let w = sample_bm(Grid::new(1.0, 256).unwrap(), RngSeed::new(1));
    assert_eq!(fbm_to_bm(&w, hurst(0.5)).unwrap().values(), w.values());
    assert_eq!(bm_to_fbm(&w, hurst(0.5)).unwrap().values(), w.values());
    assert!(HurstParam::new(0.7).is_err());
}

#[test]
fn first_order_integral_is_the_trapezoid_rule() {
    let f = path(100, |t| (3.0 * t).exp());
    let out = riemann_liouville(1.0, &f).unwrap();
    let dt = f.grid().dt();
    let mut acc = 0.0;
    for k in 1..=100 {
        acc += 0.5 * dt * (f.values()[k - 1] + f.values()[k]);
        assert!((out.values()[k] - acc).abs() <= 1e-12 * acc);
    }
}

#[test]
fn fractional_integrals_compose() {
    for (name, f) in [("one", path(4096, |_| 1.0)), ("sin", path(4096, |t| (2.0 * t).sin()))] {
        let twice = riemann_liouville(0.25, &riemann_liouville(0.25, &f).unwrap()).unwrap();
        let once = riemann_liouville(0.5, &f).unwrap();
        for k in [256, 1024, 4096] {
            let (a, b) = (twice.values()[k], once.values()[k]);
            assert!((a - b).abs() <= 1e-4 * b.abs(), "{name} k={k}: {a} vs {b}");
        }
        if name == "one" {
            let exact = 1.0 / gamma(1.5);
            assert!((once.values()[4096] - exact).abs() <= 1e-12);
        }
    }
}

#[test]
fn cell_exact_weights_beat_midpoint() {
    let one = path(256, |_| 1.0);
    let exact = |t: f64| t.powf(0.2) / gamma(1.2);
    let err = |q| {
        let out = riemann_liouville_with(0.2, &one, q).unwrap();
        (1..=256).map(|k| (out.values()[k] - exact(one.grid().time(k))).abs()).fold(0.0, f64::max)
    };
    assert!(err(Quadrature::CellExact) < 1e-12);
    assert!(err(Quadrature::Midpoint) > 1e-3);
}

#[test]
fn roundtrip_recovers_the_driving_motion() {
    let h = hurst(0.3);
    let sampler = VolterraSampler::new(Grid::new(1.0, 4096).unwrap(), h).unwrap();
    for seed in 0..5 {
        let pair = sampler.sample(RngSeed::new(seed));
        let w = fbm_to_bm(&pair.fbm, h).unwrap();
        let rel = w.sup_distance(&pair.bm).unwrap() / pair.bm.sup_norm();
        assert!(rel <= 0.05, "seed {seed}: {rel}");
        let back = bm_to_fbm(&w, h).unwrap();
        let rel = back.sup_distance(&pair.fbm).unwrap() / pair.fbm.sup_norm();
        assert!(rel <= 0.05, "seed {seed}: fbm roundtrip {rel}");
    }
}

#[test]
fn kernel_map_output_has_fbm_covariance() {
    let h = hurst(0.3);
    let g = Grid::new(1.0, 64).unwrap();
    let sampler = VolterraSampler::new(g, h).unwrap();
    let paths: Vec<Vec<f64>> = ensemble(10_000, 8, |seed| sampler.apply(&sample_bm(g, seed).increments()).unwrap());
    for (i, j) in [(16, 16), (32, 64), (64, 64), (8, 56)] {
        let emp = paths.iter().map(|p| p[i] * p[j]).sum::<f64>() / paths.len() as f64;
        let exact = fbm_covariance(g.time(i), g.time(j), h).unwrap();
        assert!((emp - exact).abs() <= 0.05 * exact, "({i},{j}): {emp} vs {exact}");
    }
    let w = sample_bm(g, RngSeed::new(2));
    assert_eq!(bm_to_fbm(&w, h).unwrap().values(), sampler.apply(&w.increments()).unwrap().as_slice());
}

#[test]
fn brownian_calibration_and_fbm_image_pass_the_law_checks() {
    let g = Grid::new(1.0, 1024).unwrap();
    let bms: Vec<SamplePath> = ensemble(600, 1, |seed| sample_bm(g, seed));
    let r = gaussianity_diagnostic(&bms).unwrap();
    assert!((r.variance_slope.unwrap() - 1.0).abs() <= 0.05 && r.lag1_correlation.abs() < 0.05, "{r:?}");
    assert!((r.kurtosis - 3.0).abs() <= 0.3);
    let h = hurst(0.3);
    let sampler = CirculantSampler::new(g, h).unwrap();
    let images: Vec<SamplePath> = ensemble(600, 2, |seed| fbm_to_bm(&sampler.sample(seed), h).unwrap());
    let r = gaussianity_diagnostic(&images).unwrap();
    assert!((r.variance_slope.unwrap() - 1.0).abs() <= 0.05 && r.lag1_correlation.abs() < 0.05, "{r:?}");
    assert!((r.kurtosis - 3.0).abs() <= 0.3);
}

#[test]
fn degenerate_and_small_ensembles() {
    let c: Vec<SamplePath> = (0..500).map(|_| path(64, |_| 1.0)).collect();
    assert!(gaussianity_diagnostic(&c).unwrap().degenerate);
    assert!(gaussianity_diagnostic(&c[..10]).is_err());
}

#[test]
fn boundedness_ratio_stays_below_the_term_bound() {
    for h in [0.1, 0.3, 0.45] {
        let bound = boundedness_constant(hurst(h)).unwrap();
        let worst = corpus(1024).iter().map(|f| boundedness_ratio(f, hurst(h)).unwrap()).fold(0.0, f64::max);
        assert!(worst.is_finite() && worst <= bound, "H={h}: {worst} vs {bound}");
    }
}

#[test]
fn term_decomposition_matches_direct_composition() {
    let cfg = OperatorConfig::new(hurst(0.3));
    for f in corpus(1024) {
        assert!(decomposition_discrepancy(&f, &cfg).unwrap() <= 1e-6);
    }
}

#[test]
fn operator_is_causal() {
    let h = hurst(0.2);
    let f = sample_fbm_circulant(Grid::new(1.0, 512).unwrap(), h, RngSeed::new(5)).unwrap();
    let full = fbm_to_bm(&f, h).unwrap();
    let head = SamplePath::new(Grid::new(0.5, 256).unwrap(), f.values()[..=256].to_vec(), PathLabel::Fbm).unwrap();
    let part = fbm_to_bm(&head, h).unwrap();
    for (a, b) in part.values().iter().zip(full.values()) {
        assert!((a - b).abs() <= 1e-12 * full.sup_norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn operators_are_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0, h in 0.05f64..0.49) {
        let g = Grid::new(1.0, 300).unwrap();
        let f = sample_bm(g, RngSeed::new(seed));
        let k = sample_bm(g, RngSeed::new(seed + 1000));
        let mix = SamplePath::new(g, f.values().iter().zip(k.values()).map(|(x, y)| a * x + b * y).collect(), PathLabel::Generic).unwrap();
        let cfg = OperatorConfig::new(hurst(h));
        let ops: [&dyn Fn(&SamplePath) -> SamplePath; 3] = [
            &|p| pi_tilde(0.5 - h, p).unwrap(),
            &|p| riemann_liouville(0.5 - h, p).unwrap(),
            &|p| operator_a(p, &cfg).unwrap(),
        ];
        for op in ops {
            let (lf, lk, lm) = (op(&f), op(&k), op(&mix));
            let scale = lf.sup_norm().max(lk.sup_norm()) * (a.abs() + b.abs()) + 1.0;
            for i in 0..=300 {
                prop_assert!((lm.values()[i] - a * lf.values()[i] - b * lk.values()[i]).abs() <= 1e-12 * scale);
            }
        }
    }
}
