//! Experiment harness: TOML configs in, long-format CSVs, JSON reports and a
//! checksummed manifest out.

pub mod config;
pub mod experiments;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Result};

use config::ExperimentConfig;
use manifest::{sha256_hex, write_manifest, Artifacts, ResultManifest, Status};

/// Environment variable that relocates relative output directories.
pub const OUT_ROOT_VAR: &str = "FBMLAB_OUT_ROOT";

/// Parses and validates a config; the error lists every problem found.
pub fn load(text: &str, seed_override: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match config::parse(text) {
        Ok(c) => c,
        Err(e) => bail!("invalid config: {e}"),
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let issues = cfg.validate();
    if !issues.is_empty() {
        let lines: Vec<String> = issues.iter().map(|i| format!("  {i}")).collect();
        bail!("invalid config:\n{}", lines.join("\n"));
    }
    Ok(cfg)
}

/// `--out`, else the config's `output` (under the root override when
/// relative), else `out/<experiment>`.
pub fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>, root: Option<&Path>) -> PathBuf {
    if let Some(o) = out {
        return o.to_path_buf();
    }
    let base = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
    match root {
        Some(r) if base.is_relative() => r.join(base),
        _ => base,
    }
}

/// Hash of the validated configuration in canonical JSON form.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(cfg)?.as_bytes()))
}

/// Runs a validated config into `out` and writes the manifest. Execution
/// errors are recorded in a failure manifest rather than returned.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<ResultManifest> {
    let start = Instant::now();
    let mut manifest = ResultManifest {
        experiment: cfg.experiment.name().into(),
        status: Status::Success,
        config_hash: config_hash(cfg)?,
        code_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        wall_time_s: 0.0,
        files: Vec::new(),
        metrics: Default::default(),
        failed_thresholds: Vec::new(),
        error: None,
    };
    let mut art = Artifacts::new(out)?;
    match experiments::execute(cfg, &mut art) {
        Ok(metrics) => {
            manifest.files = art.commit(out)?;
            for (name, [lo, hi]) in &cfg.acceptance {
                match metrics.get(name) {
                    Some(v) if (*lo..=*hi).contains(v) => {}
                    _ => manifest.failed_thresholds.push(name.clone()),
                }
            }
            if !manifest.failed_thresholds.is_empty() {
                manifest.status = Status::ThresholdFailure;
            }
            manifest.metrics = metrics;
        }
        Err(e) => {
            art.discard();
            manifest.status = Status::Error;
            manifest.error = Some(format!("{} experiment failed: {e:#}", cfg.experiment));
        }
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    write_manifest(out, &manifest)?;
    Ok(manifest)
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Success => 0,
        Status::ThresholdFailure => 2,
        Status::Error => 1,
    }
}
