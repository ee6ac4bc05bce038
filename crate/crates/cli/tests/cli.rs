use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use fbmlab_cli::config::parse;
use fbmlab_cli::manifest::{ResultManifest, Status, MANIFEST};
use fbmlab_cli::{load, output_dir, run};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SAMPLE: &str = r#"
experiment = "sample-fbm"
hurst = 0.5
seed = 11
paths = 10
noise = "circulant"

[grid]
n_steps = 64
"#;

fn files_in(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in walk(dir) {
        out.push(e.strip_prefix(dir).unwrap().to_string_lossy().into_owned());
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn shipped_configs_validate() {
    let mut n = 0;
    for e in fs::read_dir(configs_dir()).unwrap() {
        let p = e.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        load(&text, None).unwrap_or_else(|e| panic!("{}: {e:#}", p.display()));
        n += 1;
    }
    assert_eq!(n, 8);
}

#[test]
fn brownian_sampling_writes_paths_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(SAMPLE, None).unwrap();
    let m = run(&cfg, dir.path()).unwrap();
    assert_eq!(m.status, Status::Success);
    assert_eq!(m.files.len(), 11);
    assert_eq!(files_in(&dir.path().join("paths")).len(), 10);
    assert!(dir.path().join("report.json").exists());
    assert!(m.metrics.contains_key("max_covariance_rel_error"));
    let on_disk: ResultManifest = serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(on_disk.config_hash, m.config_hash);
}

#[test]
fn reruns_reproduce_checksums() {
    let cfg = load(SAMPLE, None).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run(&cfg, a.path()).unwrap();
    let mb = run(&cfg, b.path()).unwrap();
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.config_hash, mb.config_hash);
    let other = load(SAMPLE, Some(12)).unwrap();
    let c = tempfile::tempdir().unwrap();
    let mc = run(&other, c.path()).unwrap();
    assert_ne!(ma.files, mc.files);
    assert_ne!(ma.config_hash, mc.config_hash);
}

#[test]
fn failed_runs_leave_only_a_failure_manifest() {
    // skips validation, which would reject a non-point-mass skew drift
    let cfg = parse(
        r#"
experiment = "skew"
hurst = 0.3
[grid]
n_steps = 32
[drift]
kind = "gaussian"
mass = 1.0
variance = 1.0
"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run(&cfg, dir.path()).unwrap();
    assert_eq!(m.status, Status::Error);
    assert!(m.error.unwrap().contains("skew"));
    assert!(m.files.is_empty());
    assert_eq!(files_in(dir.path()), vec![MANIFEST.to_string()]);
}

#[test]
fn metrics_outside_their_band_are_threshold_failures() {
    let text = format!("{SAMPLE}\n[acceptance]\nmax_covariance_rel_error = [-1.0, -0.5]\n");
    let dir = tempfile::tempdir().unwrap();
    let m = run(&load(&text, None).unwrap(), dir.path()).unwrap();
    assert_eq!(m.status, Status::ThresholdFailure);
    assert_eq!(m.failed_thresholds, vec!["max_covariance_rel_error".to_string()]);
    assert_eq!(m.files.len(), 11);
}

#[test]
fn validation_rules() {
    let bad = |text: &str, needle: &str| {
        let e = format!("{:#}", load(text, None).unwrap_err());
        assert!(e.contains(needle), "{e}");
    };
    bad(
        "experiment = \"skew\"\nhurst = 0.3\n[grid]\nn_steps = 8\n[drift]\nkind = \"linear\"\nslope = 1.0\n[solver]\nmethod = \"pathbypath\"\n",
        "finite measure or a bounded function",
    );
    bad(
        "experiment = \"invariant-suite\"\nhurst = 0.3\n[grid]\nn_steps = 8\n[young]\np = 2.0\nq = 2.0\neta = 1.0\n",
        "must exceed 1",
    );
    bad("experiment = \"sample-fbm\"\nhurst = 0.3\n[grid]\nn_steps = 8\n[acceptance]\nexponent = [0.0, 1.0]\n", "acceptance.exponent");
    bad("experiment = \"sample-fbm\"\nhurst = 0.7\n[grid]\nn_steps = 8\n", "hurst");
    bad("experiment = \"sample-fbm\"\nhurst = 0.3\n[grid]\nn_steps = 8\nbogus = 1\n", "line 5, column 1");
    bad("experiment = \"regularity-scan\"\nhurst = 0.3\npaths = 10\n[grid]\nn_steps = 8\n[drift]\nkind = \"dirac\"\nmass = 1.0\n[regularity]\nlags = [4, 16]\n", "regularity.lags");
    load(
        "experiment = \"skew\"\nhurst = 0.25\n[grid]\nn_steps = 8\n[drift]\nkind = \"dirac\"\nmass = 1.0\n[solver]\nmethod = \"pathbypath\"\n",
        None,
    )
    .unwrap();
}

#[test]
fn output_directory_precedence() {
    let mut cfg = load(SAMPLE, None).unwrap();
    assert_eq!(output_dir(&cfg, None, None), PathBuf::from("out/sample-fbm"));
    assert_eq!(output_dir(&cfg, None, Some(Path::new("/r"))), PathBuf::from("/r/out/sample-fbm"));
    cfg.output = Some(PathBuf::from("/abs"));
    assert_eq!(output_dir(&cfg, None, Some(Path::new("/r"))), PathBuf::from("/abs"));
    assert_eq!(output_dir(&cfg, Some(Path::new("x")), Some(Path::new("/r"))), PathBuf::from("x"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fbmlab");
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.toml");
    fs::write(&ok, SAMPLE).unwrap();
    let failing = dir.path().join("fail.toml");
    fs::write(&failing, format!("{SAMPLE}\n[acceptance]\nmax_covariance_rel_error = [-1.0, -0.5]\n")).unwrap();
    let broken = dir.path().join("broken.toml");
    fs::write(&broken, "experiment = 3").unwrap();
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    let out = dir.path().join("out");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    assert_eq!(code(&["list-experiments"]), 0);
    assert_eq!(code(&["validate", "--config", &s(&ok)]), 0);
    assert_eq!(code(&["validate", "--config", &s(&broken)]), 1);
    assert_eq!(code(&["--threads", "2", "run", "--config", &s(&ok), "--out", &s(&out), "--seed-override", "5"]), 0);
    let m: ResultManifest = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(m.seed, 5);
    assert_eq!(code(&["run", "--config", &s(&failing), "--out", &s(&out)]), 2);
}
