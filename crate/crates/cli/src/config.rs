//! Experiment configuration files (TOML) and their validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use fbmlab::besov::DriftSpec;
use fbmlab::fbm::{Grid, HurstParam, NoiseSource};
use fbmlab::solver::{Method, MollifierSchedule};
use fbmlab::young::YoungExponents;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SampleFbm,
    LocalTime,
    Averaging,
    Skew,
    Uniqueness,
    RegularityScan,
    OperatorRoundtrip,
    InvariantSuite,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::SampleFbm,
        Experiment::LocalTime,
        Experiment::Averaging,
        Experiment::Skew,
        Experiment::Uniqueness,
        Experiment::RegularityScan,
        Experiment::OperatorRoundtrip,
        Experiment::InvariantSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SampleFbm => "sample-fbm",
            Experiment::LocalTime => "local-time",
            Experiment::Averaging => "averaging",
            Experiment::Skew => "skew",
            Experiment::Uniqueness => "uniqueness",
            Experiment::RegularityScan => "regularity-scan",
            Experiment::OperatorRoundtrip => "operator-roundtrip",
            Experiment::InvariantSuite => "invariant-suite",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::SampleFbm => "sample fBm paths and probe the empirical covariance",
            Experiment::LocalTime => "occupation densities of sampled paths",
            Experiment::Averaging => "averaged drift field T^B b by local time and by direct quadrature",
            Experiment::Skew => "skew fBm bundles X = x0 + K + B",
            Experiment::Uniqueness => "cross-family distances of mollified solutions",
            Experiment::RegularityScan => "Hölder-in-L^m exponent of K = X - B",
            Experiment::OperatorRoundtrip => "fBm to Bm operator against the driving Bm, plus law checks",
            Experiment::InvariantSuite => "exact identities across modules on sampled paths",
        }
    }

    /// Headline metrics an acceptance table may refer to.
    pub fn metrics(self) -> &'static [&'static str] {
        match self {
            Experiment::SampleFbm => &["max_covariance_rel_error"],
            Experiment::LocalTime => &["constant_residual", "mass_error"],
            Experiment::Averaging => &["two_route_discrepancy", "sup_norm"],
            Experiment::Skew => &["decomposition_error", "min_k_increment"],
            Experiment::Uniqueness => &["final_median", "final_ratio", "strictly_decreasing"],
            Experiment::RegularityScan => &["exponent"],
            Experiment::OperatorRoundtrip => &[
                "max_roundtrip_error",
                "median_roundtrip_error",
                "variance_slope",
                "lag1_correlation",
                "kurtosis",
            ],
            Experiment::InvariantSuite => &[
                "local_time_mass_error",
                "operator_constant_residual",
                "decomposition_error",
                "sewing_defect",
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    pub n_steps: usize,
}

fn default_t_end() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftConfig {
    Dirac { mass: f64 },
    Gaussian { mass: f64, variance: f64 },
    Cusp { amplitude: f64, exponent: f64, cutoff: f64 },
    Constant { value: f64 },
    Linear { slope: f64 },
}

impl DriftConfig {
    pub fn build(&self) -> fbmlab::Result<DriftSpec> {
        Ok(match *self {
            DriftConfig::Dirac { mass } => DriftSpec::dirac(mass),
            DriftConfig::Gaussian { mass, variance } => DriftSpec::gaussian(mass, variance)?,
            DriftConfig::Cusp { amplitude, exponent, cutoff } => DriftSpec::power_cusp(amplitude, exponent, cutoff)?,
            DriftConfig::Constant { value } => DriftSpec::constant(value),
            DriftConfig::Linear { slope } => DriftSpec::Smooth(fbmlab::besov::SmoothFn::linear(slope)),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Mollified,
    Pathbypath,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: MethodKind,
    /// Mollification level for the mollified method.
    pub level: Option<u32>,
    #[serde(default)]
    pub x0: f64,
    /// Space cells of the local-time window (`0`: one per time step).
    #[serde(default)]
    pub cells: usize,
}

impl SolverConfig {
    pub fn method(&self) -> Method {
        match self.method {
            MethodKind::Mollified => Method::Mollified { n: self.level.unwrap_or(1) },
            MethodKind::Pathbypath => Method::PathByPath,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalTimeConfig {
    pub cells: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessConfig {
    pub levels: Vec<u32>,
    #[serde(default = "MollifierSchedule::reciprocal")]
    pub family_a: MollifierSchedule,
    #[serde(default = "MollifierSchedule::odd_reciprocal")]
    pub family_b: MollifierSchedule,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityConfig {
    #[serde(default = "default_moment")]
    pub moment: f64,
    pub lags: Vec<usize>,
}

fn default_moment() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub hurst: f64,
    pub grid: GridConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub noise: NoiseSource,
    pub output: Option<PathBuf>,
    pub drift: Option<DriftConfig>,
    pub solver: Option<SolverConfig>,
    pub local_time: Option<LocalTimeConfig>,
    pub uniqueness: Option<UniquenessConfig>,
    pub regularity: Option<RegularityConfig>,
    pub young: Option<YoungExponents>,
    /// Metric name to `[lo, hi]`; a run outside the band is a threshold failure.
    #[serde(default)]
    pub acceptance: BTreeMap<String, [f64; 2]>,
}

fn default_paths() -> usize {
    1
}

/// A rejected configuration: field path and reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, toml::de::Error> {
    toml::from_str(text)
}

impl ExperimentConfig {
    pub fn grid(&self) -> fbmlab::Result<Grid> {
        Grid::new(self.grid.t_end, self.grid.n_steps)
    }

    pub fn hurst(&self) -> fbmlab::Result<HurstParam> {
        HurstParam::new(self.hurst)
    }

    pub fn drift(&self) -> fbmlab::Result<DriftSpec> {
        match &self.drift {
            Some(d) => d.build(),
            None => Ok(DriftSpec::zero()),
        }
    }

    /// Schema and cross-field checks; empty when the configuration can run.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut fail = |field: &str, message: String| issues.push(ConfigIssue { field: field.into(), message });
        if let Err(e) = self.hurst() {
            fail("hurst", e.to_string());
        }
        if let Err(e) = self.grid() {
            fail("grid", e.to_string());
        }
        let n = self.grid.n_steps;
        if self.paths == 0 {
            fail("paths", "must be at least 1".into());
        }
        if self.noise == NoiseSource::Cholesky && n > 4096 {
            fail("noise", format!("the Cholesky sampler is limited to 4096 steps, got {n}"));
        }
        let drift = match self.drift() {
            Ok(d) => Some(d),
            Err(e) => {
                fail("drift", e.to_string());
                None
            }
        };
        if let Some(y) = &self.young {
            if let Err(e) = y.check() {
                fail("young", e.to_string());
            }
        }
        for name in self.acceptance.keys() {
            if !self.experiment.metrics().contains(&name.as_str()) {
                fail(
                    &format!("acceptance.{name}"),
                    format!("unknown metric for {}; expected one of {:?}", self.experiment, self.experiment.metrics()),
                );
            }
        }
        for (name, [lo, hi]) in &self.acceptance {
            if !(lo <= hi) {
                fail(&format!("acceptance.{name}"), format!("empty band [{lo}, {hi}]"));
            }
        }
        if let Some(s) = &self.solver {
            match s.method {
                MethodKind::Mollified if s.level.unwrap_or(0) == 0 => {
                    fail("solver.level", "the mollified method needs a level ≥ 1".into())
                }
                MethodKind::Pathbypath => {
                    if let Some(d) = &drift {
                        if !(d.is_measure() || d.is_bounded()) {
                            fail(
                                "solver.method",
                                format!(
                                    "path-by-path solving requires the drift to be a finite measure or a bounded function; {} is neither",
                                    d.describe()
                                ),
                            );
                        }
                    }
                }
                _ => {}
            }
        }
        let need = |section: &str, present: bool, issues: &mut Vec<ConfigIssue>| {
            if !present {
                issues.push(ConfigIssue {
                    field: section.into(),
                    message: format!("required by the {} experiment", self.experiment),
                });
            }
        };
        match self.experiment {
            Experiment::LocalTime => need("local_time", self.local_time.is_some(), &mut issues),
            Experiment::Averaging => {
                need("local_time", self.local_time.is_some(), &mut issues);
                need("drift", self.drift.is_some(), &mut issues);
            }
            Experiment::Skew => {
                if !matches!(self.drift, Some(DriftConfig::Dirac { .. })) {
                    issues.push(ConfigIssue { field: "drift".into(), message: "skew needs a dirac drift".into() });
                }
            }
            Experiment::Uniqueness => {
                need("drift", self.drift.is_some(), &mut issues);
                need("uniqueness", self.uniqueness.is_some(), &mut issues);
                if let Some(u) = &self.uniqueness {
                    if u.levels.is_empty() || u.levels.contains(&0) {
                        issues.push(ConfigIssue { field: "uniqueness.levels".into(), message: "levels must be ≥ 1".into() });
                    }
                    if u.family_a == u.family_b {
                        issues.push(ConfigIssue {
                            field: "uniqueness.family_b".into(),
                            message: "the two mollifier families must differ".into(),
                        });
                    }
                    let bad = |m: &MollifierSchedule| !(m.scale > 0.0 && m.offset >= 0.0);
                    if bad(&u.family_a) || bad(&u.family_b) {
                        issues.push(ConfigIssue {
                            field: "uniqueness".into(),
                            message: "schedules need scale > 0 and offset ≥ 0".into(),
                        });
                    }
                }
            }
            Experiment::RegularityScan => {
                need("drift", self.drift.is_some(), &mut issues);
                need("regularity", self.regularity.is_some(), &mut issues);
                if self.paths < 100 {
                    issues.push(ConfigIssue { field: "paths".into(), message: "the regularity scan needs at least 100 paths".into() });
                }
                if let Some(r) = &self.regularity {
                    if r.lags.len() < 2 || r.lags.iter().any(|&l| l == 0 || l > n) {
                        issues.push(ConfigIssue {
                            field: "regularity.lags".into(),
                            message: format!("need at least two lags in 1..={n}"),
                        });
                    }
                    if !(r.moment > 0.0) {
                        issues.push(ConfigIssue { field: "regularity.moment".into(), message: "must be positive".into() });
                    }
                }
            }
            Experiment::OperatorRoundtrip => {
                if self.noise != NoiseSource::Volterra {
                    issues.push(ConfigIssue {
                        field: "noise".into(),
                        message: "the roundtrip needs the driving Bm, only the volterra source keeps it".into(),
                    });
                }
            }
            Experiment::SampleFbm | Experiment::InvariantSuite => {}
        }
        if let Some(lt) = &self.local_time {
            if lt.cells < 2 {
                issues.push(ConfigIssue { field: "local_time.cells".into(), message: "need at least 2 cells".into() });
            }
        }
        issues
    }
}
