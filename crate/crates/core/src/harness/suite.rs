use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ConfigError, ExperimentConfig, ExperimentKind, SuiteConfig, WeightGenerator, WeightsSpec};
use super::{verify_theorem1, verify_theorem2, RunMode, SandwichReport, SandwichSettings};
use crate::combinatorics::{
    ave_max_matrix, ave_max_tensor, b_norm, dual_from_b, lemma6_bracket, BNormMethod, BracketedAverage, Matrix,
    Tensor3,
};
use crate::construction::{reconstruct_h_check, sqrt_prefix_b, DensityF, WeightSequence};
use crate::error::{Error, Result};

/// Environment variable that overrides the config's master seed.
pub const SEED_ENV: &str = "ORLICZ_SEED";

/// Absolute tolerance on `F(1) = √H(1)` in the reconstruction suite.
const F_ONE_TOL: f64 = 1e-9;

/// Exhaustive b-norm cross-checks are run when there are at most this many
/// allocations.
const ORACLE_LIMIT: u64 = 200_000;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// Already resolved against the environment; see [`resolve_master_seed`].
    pub seed: Option<u64>,
    pub mode: Option<RunMode>,
    pub tolerance: Option<f64>,
}

/// CLI flag, then environment, then config.
pub fn resolve_master_seed(flag: Option<u64>, env: Option<&str>, config: u64) -> std::result::Result<u64, ConfigError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| ConfigError::Field {
            path: SEED_ENV.into(),
            message: format!("{v:?} is not an unsigned integer"),
        }),
        None => Ok(config),
    }
}

/// One CSV line: `value_lhs` is the bracketed quantity, `value_rhs` the
/// reference it is compared with, `lower`/`upper` the absolute bounds.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub n: usize,
    pub trial: usize,
    pub value_lhs: f64,
    pub value_rhs: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub experiment: String,
    pub kind: String,
    pub index: usize,
    pub master_seed: u64,
    pub seed: u64,
    pub mode: RunMode,
    pub tolerance: f64,
    pub config: ExperimentConfig,
    pub pass: bool,
    pub error: Option<String>,
    pub summary: Value,
    pub rows: Vec<CsvRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub master_seed: u64,
    pub pass: bool,
    pub experiments: Vec<ExperimentOutcome>,
}

/// Seed of experiment `index`: stream `index` of the master generator.
fn derived_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Runs one experiment. Library errors become a failed outcome with the
/// message recorded.
pub fn run_experiment(cfg: &SuiteConfig, index: usize, opts: &RunOptions) -> ExperimentOutcome {
    let e = &cfg.experiments[index];
    let master_seed = opts.seed.unwrap_or(cfg.seed);
    let seed = e.seed.unwrap_or_else(|| derived_seed(master_seed, index));
    let mode = opts.mode.or(e.mode).unwrap_or(cfg.mode);
    let tolerance = opts.tolerance.or(e.tolerance).or(cfg.tolerance).unwrap_or_else(|| e.kind.default_tolerance());
    let ctx = Ctx {
        name: cfg.experiment_name(index),
        trials: e.trials.unwrap_or_else(|| e.kind.default_trials()),
        cutoff: e.cutoff,
        seed,
        mode,
        tolerance,
    };
    let (pass, error, summary, rows) = match ctx.run(&e.kind) {
        Ok((summary, rows)) => (rows.iter().all(|r| r.pass), None, summary, rows),
        Err(err) => (false, Some(err.to_string()), Value::Null, Vec::new()),
    };
    ExperimentOutcome {
        experiment: ctx.name,
        kind: e.kind.name().into(),
        index,
        master_seed,
        seed,
        mode,
        tolerance,
        config: e.clone(),
        pass,
        error,
        summary,
        rows,
    }
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`.
pub fn write_reports(dir: &Path, outcome: &ExperimentOutcome) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(dir.join(format!("{}.csv", outcome.experiment)))?;
    if outcome.rows.is_empty() {
        w.write_record(["experiment", "n", "trial", "value_lhs", "value_rhs", "lower", "upper", "pass"])?;
    }
    for r in &outcome.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(outcome).map_err(io::Error::other)?;
    fs::write(dir.join(format!("{}.json", outcome.experiment)), json + "\n")
}

/// Runs every experiment in order, writing reports as it goes, then a
/// `suite.json` index.
pub fn run_suite(cfg: &SuiteConfig, opts: &RunOptions) -> io::Result<SuiteOutcome> {
    let dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from("reports"));
    fs::create_dir_all(&dir)?;
    let mut experiments = Vec::with_capacity(cfg.experiments.len());
    for index in 0..cfg.experiments.len() {
        let outcome = run_experiment(cfg, index, opts);
        write_reports(&dir, &outcome)?;
        experiments.push(outcome);
    }
    let suite = SuiteOutcome {
        master_seed: opts.seed.unwrap_or(cfg.seed),
        pass: experiments.iter().all(|e| e.pass),
        experiments,
    };
    let index: Vec<Value> = suite
        .experiments
        .iter()
        .map(|e| json!({"experiment": e.experiment, "kind": e.kind, "seed": e.seed, "pass": e.pass, "rows": e.rows.len(), "error": e.error}))
        .collect();
    let json = serde_json::to_string_pretty(&json!({"master_seed": suite.master_seed, "pass": suite.pass, "experiments": index}))
        .map_err(io::Error::other)?;
    fs::write(dir.join("suite.json"), json + "\n")?;
    Ok(suite)
}

struct Ctx {
    name: String,
    trials: usize,
    cutoff: Option<usize>,
    seed: u64,
    mode: RunMode,
    tolerance: f64,
}

impl Ctx {
    #[allow(clippy::too_many_arguments)]
    fn row(&self, n: usize, trial: usize, lhs: f64, rhs: f64, lower: f64, upper: f64, pass: bool) -> CsvRow {
        CsvRow { experiment: self.name.clone(), n, trial, value_lhs: lhs, value_rhs: rhs, lower, upper, pass }
    }

    fn settings(&self, seed: u64) -> SandwichSettings {
        SandwichSettings { trials: self.trials, seed, mode: self.mode, cutoff: self.cutoff, tolerance: self.tolerance }
    }

    fn sandwich_rows(&self, report: &SandwichReport, rows: &mut Vec<CsvRow>) {
        for t in &report.trials {
            rows.push(self.row(report.n, t.trial, t.ave, t.norm, t.lower, t.upper, t.pass));
        }
    }

    fn run(&self, kind: &ExperimentKind) -> Result<(Value, Vec<CsvRow>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut rows = Vec::new();
        let summary = match kind {
            ExperimentKind::Theorem1 { n, weights } => {
                let specs = weights.to_vec();
                let ns = match n {
                    Some(n) => n.to_vec(),
                    None => specs
                        .iter()
                        .find_map(|s| match s {
                            WeightsSpec::Explicit(v) => Some(vec![v.len()]),
                            _ => None,
                        })
                        .unwrap_or_default(),
                };
                let mut reports = Vec::new();
                for n in ns {
                    let ws = specs.iter().map(|s| build_weights(s, n, &mut rng)).collect::<Result<Vec<_>>>()?;
                    let report = verify_theorem1(n, &ws, &self.settings(rng.next_u64()))?;
                    self.sandwich_rows(&report, &mut rows);
                    reports.push(report);
                }
                json!({ "reports": reports })
            }
            ExperimentKind::Theorem2 { n, orlicz, constant } => {
                let m = orlicz.orlicz()?;
                let dual = orlicz.dual()?;
                let mut reports = Vec::new();
                for n in n.to_vec() {
                    let report = verify_theorem2(&m, &dual, n, *constant, 1e-10, &self.settings(rng.next_u64()))?;
                    self.sandwich_rows(&report, &mut rows);
                    reports.push(report);
                }
                let per_n: Vec<Value> = reports
                    .iter()
                    .map(|r| json!({"n": r.n, "min_ratio": r.min_ratio, "max_ratio": r.max_ratio, "width": r.width(),
                                    "corridor_pass": r.corridor.iter().all(|c| c.pass)}))
                    .collect();
                let lo = reports.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
                let hi = reports.iter().map(|r| r.max_ratio).fold(f64::NEG_INFINITY, f64::max);
                json!({ "band": {"lower": lo, "upper": hi, "width": hi / lo}, "per_n": per_n, "reports": reports })
            }
            ExperimentKind::Lemma4 { n } | ExperimentKind::Lemma5 { n } => {
                let tensor = matches!(kind, ExperimentKind::Lemma5 { .. });
                let mut tight = Vec::new();
                for n in n.to_vec() {
                    let mut min_slack = f64::INFINITY;
                    for trial in 0..self.trials {
                        let r = if tensor {
                            let t = Tensor3::new(n, random_entries(&mut rng, n * n * n, trial))?;
                            ave_max_tensor(&t, self.mode.with_seed(self.cutoff, rng.next_u64()))?
                        } else {
                            let m = Matrix::new(n, random_entries(&mut rng, n * n, trial))?;
                            ave_max_matrix(&m, self.mode.with_seed(self.cutoff, rng.next_u64()))?
                        };
                        min_slack = min_slack.min(bracket_slack(&r));
                        let v = r.estimate.value();
                        rows.push(self.row(n, trial, v, r.upper, r.lower, r.upper, r.holds(self.tolerance)));
                    }
                    tight.push(json!({"n": n, "min_relative_slack": min_slack}));
                }
                json!({ "per_n": tight })
            }
            ExperimentKind::Lemma6 { n, s } => {
                let (mut checked, mut mismatches) = (0usize, 0usize);
                for n in n.to_vec() {
                    let s = s.unwrap_or(2 * n);
                    for trial in 0..self.trials {
                        let b = random_decreasing(&mut rng, s, 0.0)?;
                        let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                        if trial % 4 == 3 {
                            for v in x.iter_mut().step_by(2) {
                                *v = 0.0;
                            }
                        }
                        let dual = dual_from_b(&b)?;
                        let r = lemma6_bracket(&x, &b, &dual, self.tolerance)?;
                        let mut agrees = true;
                        if allocations(n, s) <= ORACLE_LIMIT {
                            checked += 1;
                            agrees = b_norm(&x, &b, BNormMethod::Exhaustive)? == r.b_norm;
                            mismatches += usize::from(!agrees);
                        }
                        let pass = r.holds() && agrees;
                        rows.push(self.row(n, trial, r.orlicz_norm, r.b_norm, r.b_norm, 2.0 * r.b_norm, pass));
                    }
                }
                json!({ "oracle_checked": checked, "oracle_mismatches": mismatches })
            }
            ExperimentKind::Lemma7 { profile, grid } => {
                let hp = profile.build()?;
                let points: Vec<f64> = (1..=*grid).map(|k| k as f64 / *grid as f64).collect();
                let report = reconstruct_h_check(&hp, &points, self.tolerance)?;
                for (k, p) in report.points.iter().enumerate() {
                    let pass = p.deviation <= self.tolerance;
                    rows.push(self.row(*grid, k, p.reconstructed, p.h, p.h - self.tolerance, p.h + self.tolerance, pass));
                }
                let f_one = DensityF::new(hp.clone(), 1e-11).cumulative(1.0)?;
                let target = hp.h(1.0).sqrt();
                let pass = (f_one - target).abs() <= F_ONE_TOL;
                rows.push(self.row(*grid, *grid, f_one, target, target - F_ONE_TOL, target + F_ONE_TOL, pass));
                json!({ "profile": hp.label(), "max_deviation": report.max_deviation, "f_at_one": f_one })
            }
        };
        Ok((summary, rows))
    }
}

fn bracket_slack(r: &BracketedAverage) -> f64 {
    let v = r.estimate.value();
    ((v - r.lower).min(r.upper - v)) / r.upper.max(f64::MIN_POSITIVE)
}

fn allocations(n: usize, s: usize) -> u64 {
    let (top, k) = ((s + n - 1) as u64, (n - 1) as u64);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(top - i) / (i + 1))
}

/// Nonincreasing weights drawn uniformly from `[floor, 1]`, with a positive
/// floor even when `floor = 0`.
fn random_decreasing<R: Rng>(rng: &mut R, len: usize, floor: f64) -> Result<WeightSequence> {
    let lo = floor.max(1e-3);
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(lo..=1.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    WeightSequence::new(v)
}

fn build_weights<R: Rng>(spec: &WeightsSpec, n: usize, rng: &mut R) -> Result<WeightSequence> {
    match spec {
        WeightsSpec::Named(WeightGenerator::SqrtPrefix) => sqrt_prefix_b(n),
        WeightsSpec::Named(WeightGenerator::Ones) => WeightSequence::new(vec![1.0; n]),
        WeightsSpec::Named(WeightGenerator::RandomDecreasing) => random_decreasing(rng, n, 0.05),
        WeightsSpec::Explicit(v) if v.len() == n => WeightSequence::new(v.clone()),
        WeightsSpec::Explicit(v) => Err(Error::LengthMismatch { expected: n, found: v.len() }),
    }
}

/// Nonnegative entries; the distribution rotates between uniform, cubed
/// exponential and half-sparse uniform with the trial index.
fn random_entries<R: Rng>(rng: &mut R, len: usize, trial: usize) -> Vec<f64> {
    (0..len)
        .map(|_| match trial % 3 {
            0 => rng.gen::<f64>(),
            1 => {
                let e: f64 = rng.sample(Exp1);
                e * e * e
            }
            _ => {
                let u: f64 = rng.gen();
                if rng.gen_bool(0.5) { 0.0 } else { u }
            }
        })
        .collect()
}
