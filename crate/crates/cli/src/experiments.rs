//! The experiments: each composes library operations, writes long-format
//! CSVs and a JSON report, and returns its headline metrics.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use fbmlab::averaging::{averaging_direct, averaging_via_localtime};
use fbmlab::besov::DriftSpec;
use fbmlab::fbm::{
    ensemble, fbm_covariance, write_path_csv, FbmSampler, Grid, HurstParam, PathLabel, SamplePath, VolterraSampler,
};
use fbmlab::fracops::{decomposition_discrepancy, fbm_to_bm, gaussianity_diagnostic, operator_a, OperatorConfig};
use fbmlab::localtime::{occupation_density, occupation_formula_residual, FnSpace, SpaceGrid};
use fbmlab::solver::{
    skew_fbm_on, solve_mollified_on, solve_pathbypath_on, uniqueness_diagnostic, Method, RegularityAccumulator, SolveConfig,
    UniquenessSetup, WindowPolicy,
};
use fbmlab::stats::median;
use fbmlab::young::{sewing_residual, AnalyticFunctional, YoungExponents};
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig};
use crate::manifest::Artifacts;

pub type Metrics = BTreeMap<String, f64>;

struct Setup {
    grid: Grid,
    hurst: HurstParam,
    drift: DriftSpec,
}

pub fn execute(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Metrics> {
    let setup = Setup { grid: cfg.grid()?, hurst: cfg.hurst()?, drift: cfg.drift()? };
    match cfg.experiment {
        Experiment::SampleFbm => sample_fbm(cfg, &setup, art),
        Experiment::LocalTime => local_time(cfg, &setup, art),
        Experiment::Averaging => averaging(cfg, &setup, art),
        Experiment::Skew => skew(cfg, &setup, art),
        Experiment::Uniqueness => uniqueness(cfg, &setup, art),
        Experiment::RegularityScan => regularity(cfg, &setup, art),
        Experiment::OperatorRoundtrip => roundtrip(cfg, &setup, art),
        Experiment::InvariantSuite => invariants(cfg, &setup, art),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> fbmlab::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn sample_fbm(cfg: &ExperimentConfig, s: &Setup, art: &mut Artifacts) -> Result<Metrics> {
    let sampler = FbmSampler::new(cfg.noise, s.grid, s.hurst)?;
    let paths = ensemble(cfg.paths, cfg.seed, |seed| sampler.sample(seed));
    for (i, p) in paths.iter().enumerate() {
        art.write(&format!("paths/path_{i:04}.csv"), |w| Ok(write_path_csv(p, w)?))?;
    }
    let n = s.grid.n_steps();
    let probes = [(n / 4, n / 4), (n / 4, n / 2), (n / 2, n), (n, n), (n / 8, 3 * n / 4)];
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, j) in probes {
        let (ti, tj) = (s.grid.time(i), s.grid.time(j));
        let exact = fbm_covariance(ti, tj, s.hurst)?;
        let emp = paths.iter().map(|p| p.values()[i] * p.values()[j]).sum::<f64>() / paths.len() as f64;
        let rel = if exact != 0.0 { (emp - exact).abs() / exact.abs() } else { emp.abs() };
        worst = worst.max(rel);
        rows.push(json!({ "s": ti, "t": tj, "empirical": emp, "exact": exact, "rel_error": rel }));
    }
    art.write_json("report.json", &json!({ "paths": paths.len(), "covariance_probes": rows }))?;
    Ok(Metrics::from([("max_covariance_rel_error".into(), worst)]))
}

fn local_time(cfg: &ExperimentConfig, s: &Setup, art: &mut Artifacts) -> Result<Metrics> {
    let lt_cfg = cfg.local_time.as_ref().context("missing local_time section")?;
    let sampler = FbmSampler::new(cfg.noise, s.grid, s.hurst)?;
    let cells = lt_cfg.cells + lt_cfg.cells % 2;
    let results = ensemble(cfg.paths, cfg.seed, |seed| -> Result<(Vec<u8>, f64, f64)> {
        let p = sampler.sample(seed);
        let field = occupation_density(&p, SpaceGrid::covering(&p, cells)?)?;
        let residual = occupation_formula_residual(&p, &field, &FnSpace(|_| 1.0))?;
        let n = p.grid().n_steps();
        let mass = (field.total_mass(n) - p.grid().t_end()).abs();
        Ok((csv_bytes(|b| field.write_csv(lt_cfg.stride, b))?, residual, mass))
    });
    let mut metrics = Metrics::from([("constant_residual".into(), 0.0), ("mass_error".into(), 0.0)]);
    let mut per_path = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let (bytes, residual, mass) = r?;
        art.write(&format!("local_time/path_{i:04}.csv"), |w| Ok(w.write_all(&bytes)?))?;
        bump(&mut metrics, "constant_residual", residual);
        bump(&mut metrics, "mass_error", mass);
        per_path.push(json!({ "path": i, "constant_residual": residual, "mass_error": mass }));
    }
    art.write_json("report.json", &json!({ "cells": cells, "paths": per_path }))?;
    Ok(metrics)
}

fn bump(m: &mut Metrics, key: &str, v: f64) {
    let e = m.entry(key.into()).or_insert(v);
    *e = e.max(v);
}

fn averaging(cfg: &ExperimentConfig, s: &Setup, art: &mut Artifacts) -> Result<Metrics> {
    let lt_cfg = cfg.local_time.as_ref().context("missing local_time section")?;
    let sampler = FbmSampler::new(cfg.noise, s.grid, s.hurst)?;
    let cells = lt_cfg.cells + lt_cfg.cells % 2;
    let pointwise = !matches!(s.drift, DriftSpec::Dirac { .. } | DriftSpec::PowerCusp { .. });
    let results = ensemble(cfg.paths, cfg.seed, |seed| -> Result<(Vec<u8>, Option<f64>, f64)> {
        let p = sampler.sample(seed);
        let lt = occupation_density(&p, SpaceGrid::covering(&p, cells)?)?;
        let via = averaging_via_localtime(&s.drift, &lt)?;
        let disc = if pointwise {
            let direct = averaging_direct(&s.drift, &p, via.space_grid())?;
            Some(direct.sup_distance(&via)? / via.sup_norm().max(f64::MIN_POSITIVE))
        } else {
            None
        };
        Ok((csv_bytes(|b| via.write_csv(lt_cfg.stride, b))?, disc, via.sup_norm()))
    });
    let mut metrics = Metrics::new();
    let mut per_path = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let (bytes, disc, sup) = r?;
        art.write(&format!("averaged/path_{i:04}.csv"), |w| Ok(w.write_all(&bytes)?))?;
        if let Some(d) = disc {
            bump(&mut metrics, "two_route_discrepancy", d);
        }
        bump(&mut metrics, "sup_norm", sup);
        per_path.push(json!({ "path": i, "two_route_discrepancy": disc, "sup_norm": sup }));
    }
    art.write_json("report.json", &json!({ "drift": s.drift.describe(), "cells": cells, "paths": per_path }))?;
    Ok(metrics)
}

fn write_bundle_rows(w: &mut dyn Write, rows: &[(usize, SamplePath, SamplePath, SamplePath)]) -> Result<()> {
    writeln!(w, "path,t,x,b,k")?;
    for (i, x, b, k) in rows {
        for j in 0..x.values().len() {
            writeln!(w, "{i},{},{},{},{}", x.grid().time(j), x.values()[j], b.values()[j], k.values()[j])?;
        }
    }
    Ok(())
}

fn skew(cfg: &ExperimentConfig, s: &Setup, art: &mut Artifacts) -> Result<Metrics> {
    let DriftSpec::Dirac { mass } = s.drift else { bail!("skew needs a dirac drift") };
    let x0 = cfg.solver.as_ref().map_or(0.0, |c| c.x0);
    let sampler = FbmSampler::new(cfg.noise, s.grid, s.hurst)?;
    let bundles = ensemble(cfg.paths, cfg.seed, |seed| skew_fbm_on(mass, s.hurst, &sampler.sample(seed), x0));
    let mut rows = Vec::new();
    let (mut decomposition, mut min_inc) = (0.0f64, f64::INFINITY);
    let mut warnings = Vec::new();
    for (i, b) in bundles.into_iter().enumerate() {
        let b = b?;
        for j in 0..b.x.values().len() {
            let d = b.x.values()[j] - (x0 + b.k.values()[j] + b.b_path.values()[j]);
            decomposition = decomposition.max(d.abs());
        }
        min_inc = b.k.values().windows(2).map(|w| w[1] - w[0]).fold(min_inc, f64::min);
        warnings.extend(b.diagnostics.warnings.iter().cloned());
        rows.push((i, b.x, b.b_path, b.k));
    }
    warnings.sort();
    warnings.dedup();
    art.write("skew.csv", |w| write_bundle_rows(w, &rows))?;
    let final_k: Vec<f64> = rows.iter().map(|r| *r.3.values().last().unwrap()).collect();
    art.write_json("report.json", &json!({ "a": mass, "x0": x0, "final_k": final_k, "warnings": warnings }))?;
    Ok(Metrics::from([("decomposition_error".into(), decomposition), ("min_k_increment".into(), min_inc)]))
}

fn uniqueness(cfg: &ExperimentConfig, s: &Setup, art: &mut Artifacts) -> Result<Metrics> {
    let u = cfg.uniqueness.as_ref().context("missing uniqueness section")?;
    let setup = UniquenessSetup {
        drift: &s.drift,
        hurst: s.hurst,
        grid: s.grid,
        noise: cfg.noise,
        x0: cfg.solver.as_ref().map_or(0.0, |c| c.x0),
        seed: cfg.seed,
        paths: cfg.paths,
        levels: &u.levels,
    };
    let report = uniqueness_diagnostic(&setup, u.family_a, u.family_b)?;
    art.write("distances.csv", |w| {
        writeln!(w, "level,path,distance")?;
        for l in &report.levels {
            for (i, d) in l.distances.iter().enumerate() {
                writeln!(w, "{},{i},{d}", l.level)?;
            }
        }
        Ok(())
    })?;
    let summary: Vec<_> = report
        .levels
        .iter()
        .map(|l| json!({ "level": l.level, "median": l.median, "q10": l.q10, "q90": l.q90 }))
        .collect();
    art.write_json(
        "report.json",
        &json!({
            "family_a": report.family_a,
            "family_b": report.family_b,
            "levels": summary,
            "median_sup_noise": report.median_sup_noise,
            "strictly_decreasing": report.strictly_decreasing,
            "warnings": report.warnings,
        }),
    )?;
    let last = report.levels.last().context("no levels")?.median;
    Ok(Metrics::from([
        ("final_median".into(), last),
        ("final_ratio".into(), last / report.median_sup_noise),
        ("strictly_decreasing".into(), if report.strictly_decreasing { 1.0 } else { 0.0 }),
    ]))
}

fn regularity(cfg: &ExperimentConfig, s: &Setup, art: &mut Artifacts) -> Result<Metrics> {
    let r = cfg.regularity.as_ref().context("missing regularity section")?;
    let (method, x0, cells) = cfg.solver.as_ref().map_or((Method::PathByPath, 0.0, 0), |c| (c.method(), c.x0, c.cells));
    let sampler = FbmSampler::new(cfg.noise, s.grid, s.hurst)?;
    let acc = Mutex::new(RegularityAccumulator::new(r.moment, &r.lags)?);
    let outcomes = ensemble(cfg.paths, cfg.seed, |seed| -> Result<()> {
        let mut c = SolveConfig::new(s.drift.clone(), s.hurst, s.grid, method, seed);
        c.x0 = x0;
        c.noise = cfg.noise;
        c.window = WindowPolicy { cells, ..WindowPolicy::default() };
        let b = sampler.sample(seed);
        let bundle = match method {
            Method::PathByPath => solve_pathbypath_on(&c, &b)?,
            Method::Mollified { .. } => solve_mollified_on(&c, &b)?,
        };
        acc.lock().unwrap().add(&bundle.k)?;
        Ok(())
    });
    outcomes.into_iter().collect::<Result<Vec<()>>>()?;
    let report = acc.into_inner().unwrap().finish()?;
    art.write("moments.csv", |w| {
        writeln!(w, "lag,moment")?;
        for (l, m) in report.lags.iter().zip(&report.moments) {
            writeln!(w, "{l},{m}")?;
        }
        Ok(())
    })?;
    art.write_json("report.json", &json!({ "drift": s.drift.describe(), "method": method, "regression": report }))?;
    Ok(report.exponent.map(|e| Metrics::from([("exponent".into(), e)])).unwrap_or_default())
}

fn roundtrip(cfg: &ExperimentConfig, s: &Setup, art: &mut Artifacts) -> Result<Metrics> {
    let sampler = VolterraSampler::new(s.grid, s.hurst)?;
    let op = OperatorConfig::new(s.hurst);
    let results = ensemble(cfg.paths, cfg.seed, |seed| -> Result<(SamplePath, f64, f64)> {
        let pair = sampler.sample(seed);
        let w = fbm_to_bm(&pair.fbm, s.hurst)?;
        let rel = w.sup_distance(&pair.bm)? / pair.bm.sup_norm();
        let disc = if s.hurst.value() < 0.5 { decomposition_discrepancy(&pair.fbm, &op)? } else { 0.0 };
        Ok((w, rel, disc))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    art.write("roundtrip.csv", |w| {
        writeln!(w, "path,roundtrip_error,decomposition_discrepancy")?;
        for (i, (_, rel, disc)) in results.iter().enumerate() {
            writeln!(w, "{i},{rel},{disc}")?;
        }
        Ok(())
    })?;
    let errors: Vec<f64> = results.iter().map(|r| r.1).collect();
    let mut metrics = Metrics::from([
        ("max_roundtrip_error".into(), errors.iter().cloned().fold(0.0, f64::max)),
        ("median_roundtrip_error".into(), median(&errors)),
    ]);
    let law = if results.len() >= 500 {
        let images: Vec<SamplePath> = results.into_iter().map(|r| r.0).collect();
        let g = gaussianity_diagnostic(&images)?;
        if let Some(slope) = g.variance_slope {
            metrics.insert("variance_slope".into(), slope);
        }
        metrics.insert("lag1_correlation".into(), g.lag1_correlation);
        metrics.insert("kurtosis".into(), g.kurtosis);
        Some(g)
    } else {
        None
    };
    art.write_json("report.json", &json!({ "hurst": s.hurst.value(), "metrics": metrics, "law": law }))?;
    Ok(metrics)
}

fn invariants(cfg: &ExperimentConfig, s: &Setup, art: &mut Artifacts) -> Result<Metrics> {
    let sampler = FbmSampler::new(cfg.noise, s.grid, s.hurst)?;
    let h = s.hurst.value();
    let exps = cfg.young.unwrap_or(YoungExponents { p: 1.0, q: 1.0 / h + 1.0, eta: 1.0 });
    let n = s.grid.n_steps();
    let results = ensemble(cfg.paths, cfg.seed, |seed| -> Result<Metrics> {
        let b = sampler.sample(seed);
        let mut m = Metrics::new();
        let lt = occupation_density(&b, SpaceGrid::covering(&b, (n + n % 2).max(16))?)?;
        m.insert("local_time_mass_error".into(), (lt.total_mass(n) - s.grid.t_end()).abs());
        if h < 0.5 {
            let c = SamplePath::constant(s.grid, 1.3)?;
            m.insert("operator_constant_residual".into(), operator_a(&c, &OperatorConfig::new(s.hurst))?.sup_norm());
        }
        let x0 = 0.3;
        let bundle = skew_fbm_on(1.0, s.hurst, &b, x0)?;
        let d = (0..=n)
            .map(|j| (bundle.x.values()[j] - (x0 + bundle.k.values()[j] + bundle.b_path.values()[j])).abs())
            .fold(0.0, f64::max);
        m.insert("decomposition_error".into(), d);
        let a = AnalyticFunctional::new(s.grid, |t: f64, _y: f64| t.sin());
        let sew = sewing_residual(&a, &b.clone().with_label(PathLabel::Generic), 0, n, exps)?;
        m.insert("sewing_defect".into(), sew.lhs);
        Ok(m)
    });
    let mut metrics = Metrics::new();
    let mut per_path = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let m = r.with_context(|| format!("path {i}"))?;
        for (k, v) in &m {
            bump(&mut metrics, k, *v);
        }
        per_path.push(json!({ "path": i, "checks": m }));
    }
    art.write_json("report.json", &json!({ "exponents": exps, "paths": per_path }))?;
    Ok(metrics)
}
