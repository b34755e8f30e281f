use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RunMode;
use crate::construction::{ProfileSpec, WeightSequence};
use crate::error::Error;
use crate::orlicz::OrliczSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field { path: path.into(), message: message.into() }
    }
}

/// A single value or a list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

pub type NList = OneOrMany<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightGenerator {
    /// `b_k = √n/(√k + √(k−1))`.
    SqrtPrefix,
    /// Sorted uniform draws from `[0.05, 1]`, fresh for every `n`.
    RandomDecreasing,
    Ones,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsSpec {
    Named(WeightGenerator),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    Theorem1 {
        #[serde(default)]
        n: Option<NList>,
        weights: OneOrMany<WeightsSpec>,
    },
    Theorem2 {
        n: NList,
        orlicz: OrliczSpec,
        #[serde(default)]
        constant: Option<f64>,
    },
    Lemma4 {
        n: NList,
    },
    Lemma5 {
        n: NList,
    },
    Lemma6 {
        n: NList,
        /// Length of `b`; defaults to `2n`.
        #[serde(default)]
        s: Option<usize>,
    },
    Lemma7 {
        #[serde(flatten)]
        profile: ProfileSpec,
        #[serde(default = "default_grid")]
        grid: usize,
    },
}

fn default_grid() -> usize {
    64
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Theorem1 { .. } => "theorem1",
            Self::Theorem2 { .. } => "theorem2",
            Self::Lemma4 { .. } => "lemma4",
            Self::Lemma5 { .. } => "lemma5",
            Self::Lemma6 { .. } => "lemma6",
            Self::Lemma7 { .. } => "lemma7",
        }
    }

    pub fn default_trials(&self) -> usize {
        match self {
            Self::Lemma4 { .. } => 200,
            Self::Lemma5 { .. } => 50,
            _ => 100,
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Self::Lemma4 { .. } | Self::Lemma5 { .. } => 1e-12,
            _ => 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: Option<RunMode>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Overrides the exact-enumeration size limit.
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(flatten)]
    pub kind: ExperimentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub mode: RunMode,
    pub tolerance: Option<f64>,
    pub experiments: Vec<ExperimentConfig>,
}

impl SuiteConfig {
    /// Experiment name, `<kind>_<index>` when unnamed.
    pub fn experiment_name(&self, index: usize) -> String {
        let e = &self.experiments[index];
        e.name.clone().unwrap_or_else(|| format!("{}_{index}", e.kind.name()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    mode: Option<RunMode>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default)]
    experiments: Vec<Value>,
}

/// Parses and validates a suite config.
pub fn parse_config(text: &str) -> Result<SuiteConfig, ConfigError> {
    let raw: RawSuite = serde_json::from_str(text)
        .map_err(|e| ConfigError::Syntax { line: e.line(), column: e.column(), message: strip_position(&e) })?;
    let mut experiments = Vec::with_capacity(raw.experiments.len());
    for (i, v) in raw.experiments.into_iter().enumerate() {
        let e: ExperimentConfig = serde_json::from_value(v)
            .map_err(|e| ConfigError::field(format!("experiments[{i}]"), e.to_string()))?;
        experiments.push(e);
    }
    let cfg = SuiteConfig { seed: raw.seed, mode: raw.mode.unwrap_or(RunMode::Exact), tolerance: raw.tolerance, experiments };
    validate(&cfg)?;
    Ok(cfg)
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

fn check_mode(path: &str, mode: &RunMode) -> Result<(), ConfigError> {
    if let RunMode::Mc { samples: 0 } = mode {
        return Err(ConfigError::field(format!("{path}.mode.mc.samples"), "must be at least 1"));
    }
    Ok(())
}

fn check_tolerance(path: String, tol: Option<f64>) -> Result<(), ConfigError> {
    match tol {
        Some(t) if !(t >= 0.0 && t.is_finite()) => Err(ConfigError::field(path, "must be finite and nonnegative")),
        _ => Ok(()),
    }
}

fn check_n_list(path: &str, n: &NList) -> Result<Vec<usize>, ConfigError> {
    let list = n.to_vec();
    if list.is_empty() {
        return Err(ConfigError::field(format!("{path}.n"), "list is empty"));
    }
    if let Some(i) = list.iter().position(|&v| v == 0) {
        return Err(ConfigError::field(format!("{path}.n[{i}]"), "n must be at least 1"));
    }
    Ok(list)
}

/// Maps a weight validation failure onto the offending entry.
pub(crate) fn weights_error(path: &str, err: Error) -> ConfigError {
    match err {
        Error::NotDecreasing { index } => ConfigError::field(
            format!("{path}[{index}]"),
            format!("weights must be nonincreasing (entry {index} exceeds entry {})", index - 1),
        ),
        Error::NotPositive { index } => ConfigError::field(format!("{path}[{index}]"), "weights must be strictly positive"),
        other => ConfigError::field(path, other.to_string()),
    }
}

fn validate(cfg: &SuiteConfig) -> Result<(), ConfigError> {
    check_mode("", &cfg.mode).map_err(|_| ConfigError::field("mode.mc.samples", "must be at least 1"))?;
    check_tolerance("tolerance".into(), cfg.tolerance)?;
    let mut names = BTreeSet::new();
    for (i, e) in cfg.experiments.iter().enumerate() {
        let path = format!("experiments[{i}]");
        let name = cfg.experiment_name(i);
        if name.is_empty() || name == "suite" || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(ConfigError::field(
                format!("{path}.name"),
                "must be nonempty, use only [A-Za-z0-9_.-] and differ from \"suite\"",
            ));
        }
        if !names.insert(name.clone()) {
            return Err(ConfigError::field(format!("{path}.name"), format!("duplicate experiment name {name:?}")));
        }
        if e.trials == Some(0) {
            return Err(ConfigError::field(format!("{path}.trials"), "must be at least 1"));
        }
        if let Some(m) = &e.mode {
            check_mode(&path, m)?;
        }
        check_tolerance(format!("{path}.tolerance"), e.tolerance)?;
        match &e.kind {
            ExperimentKind::Theorem1 { n, weights } => {
                let specs = weights.to_vec();
                if specs.is_empty() {
                    return Err(ConfigError::field(format!("{path}.weights"), "list is empty"));
                }
                let many = matches!(weights, OneOrMany::Many(_)) && !matches!(&specs[..], [WeightsSpec::Explicit(_)]);
                let ns = match n {
                    Some(n) => check_n_list(&path, n)?,
                    None => {
                        let explicit = specs.iter().find_map(|s| match s {
                            WeightsSpec::Explicit(v) => Some(v.len()),
                            _ => None,
                        });
                        match explicit {
                            Some(len) => vec![len],
                            None => return Err(ConfigError::field(format!("{path}.n"), "missing and not implied by explicit weights")),
                        }
                    }
                };
                for (j, s) in specs.iter().enumerate() {
                    let wpath = if many { format!("{path}.weights[{j}]") } else { format!("{path}.weights") };
                    if let WeightsSpec::Explicit(v) = s {
                        WeightSequence::new(v.clone()).map_err(|err| weights_error(&wpath, err))?;
                        if let Some(&bad) = ns.iter().find(|&&n| n != v.len()) {
                            return Err(ConfigError::field(
                                wpath,
                                format!("has {} entries but n = {bad}", v.len()),
                            ));
                        }
                    }
                }
            }
            ExperimentKind::Theorem2 { n, orlicz, constant } => {
                check_n_list(&path, n)?;
                orlicz.orlicz().map_err(|err| ConfigError::field(format!("{path}.orlicz"), err.to_string()))?;
                if let Some(c) = constant {
                    if !(*c >= 1.0 && c.is_finite()) {
                        return Err(ConfigError::field(format!("{path}.constant"), "must be finite and at least 1"));
                    }
                }
            }
            ExperimentKind::Lemma4 { n } | ExperimentKind::Lemma5 { n } => {
                check_n_list(&path, n)?;
            }
            ExperimentKind::Lemma6 { n, s } => {
                let ns = check_n_list(&path, n)?;
                if let Some(s) = s {
                    if let Some(&bad) = ns.iter().find(|&&n| n > *s) {
                        return Err(ConfigError::field(format!("{path}.s"), format!("s = {s} is smaller than n = {bad}")));
                    }
                }
            }
            ExperimentKind::Lemma7 { profile, grid } => {
                profile.build().map_err(|err| ConfigError::field(format!("{path}.alpha"), err.to_string()))?;
                if *grid == 0 {
                    return Err(ConfigError::field(format!("{path}.grid"), "must be at least 1"));
                }
            }
        }
    }
    Ok(())
}
