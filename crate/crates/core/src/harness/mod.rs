//! Sandwich verifications and lemma suites, config ingestion and reports.

mod config;
mod suite;

pub use config::{
    parse_config, ConfigError, ExperimentConfig, ExperimentKind, NList, OneOrMany, SuiteConfig, WeightGenerator,
    WeightsSpec,
};
pub use suite::{
    resolve_master_seed, run_experiment, run_suite, write_reports, CsvRow, ExperimentOutcome, RunOptions,
    SuiteOutcome, SEED_ENV,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{ave_quadratic, tensor_lower_factor, Estimate, Mode};
use crate::construction::{knots_from_weights, orlicz_from_knots, shifted_tail_values, weights_from_orlicz, WeightSequence};
use crate::error::{Error, Result};
use crate::orlicz::{orlicz_norm, DualFunction, OrliczFunction};

/// Relative slack on the weight corridor; the right end is an equality.
pub const CORRIDOR_SLACK: f64 = 1e-8;

/// `1 − 1/2! + 1/3! − … + (−1)^{n+1}/n!` as an exact rational.
pub fn c_n_exact(n: usize) -> BigRational {
    let mut sum = BigRational::zero();
    let mut fact = BigInt::one();
    for k in 1..=n {
        fact *= k;
        let term = BigRational::new(BigInt::one(), fact.clone());
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

pub fn c_n(n: usize) -> f64 {
    c_n_exact(n).to_f64().expect("c_n lies in [0, 1]")
}

/// `(1/(2√5))·(n−1)²/(n²+(n−1)²)`; zero at `n = 1`.
pub fn sandwich_lower(n: usize) -> f64 {
    tensor_lower_factor(n) / (2.0 * 5f64.sqrt())
}

/// `2√2 / c_n`.
pub fn sandwich_upper(n: usize) -> f64 {
    2.0 * 2f64.sqrt() / c_n(n)
}

/// How permutation averages are evaluated inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Exact,
    Mc { samples: usize },
}

impl RunMode {
    /// The combinatorics mode, with `seed` used only in Monte Carlo mode.
    pub fn with_seed(self, cutoff: Option<usize>, seed: u64) -> Mode {
        match self {
            RunMode::Exact => Mode::Exact { cutoff },
            RunMode::Mc { samples } => Mode::MonteCarlo { samples, seed },
        }
    }

    pub fn samples(self) -> Option<usize> {
        match self {
            RunMode::Exact => None,
            RunMode::Mc { samples } => Some(samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub mode: RunMode,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichSettings {
    /// Random trial vectors per weight sequence, on top of the edge vectors.
    pub trials: usize,
    pub seed: u64,
    pub mode: RunMode,
    pub cutoff: Option<usize>,
    /// Relative slack on both bounds.
    pub tolerance: f64,
}

/// `e_1`, the all-ones vector and `2^{-i}`, followed by `trials` i.i.d.
/// standard normal vectors.
pub fn trial_vectors<R: Rng>(n: usize, trials: usize, rng: &mut R) -> Vec<(String, Vec<f64>)> {
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut out = vec![
        ("e1".to_string(), e1),
        ("ones".to_string(), vec![1.0; n]),
        ("geometric".to_string(), (0..n).map(|i| 0.5f64.powi(i as i32)).collect()),
    ];
    for t in 0..trials {
        out.push((format!("normal{t}"), (0..n).map(|_| rng.sample(StandardNormal)).collect()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichTrial {
    pub trial: usize,
    pub weights_index: usize,
    pub label: String,
    pub x: Vec<f64>,
    pub ave: f64,
    pub half_width_99: Option<f64>,
    pub mc_seed: Option<u64>,
    pub norm: f64,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Weight corridor at one knot: `lower ≤ value ≤ upper`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorridorPoint {
    pub l: usize,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub n: usize,
    pub weights: Vec<Vec<f64>>,
    pub trials: Vec<SandwichTrial>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub theoretical_lower: f64,
    pub theoretical_upper: f64,
    pub tolerance: f64,
    /// The lower constant is zero, so the lower bound says nothing.
    pub lower_vacuous: bool,
    pub corridor: Vec<CorridorPoint>,
    pub pass: bool,
    pub provenance: Provenance,
}

impl SandwichReport {
    /// `max_ratio / min_ratio`.
    pub fn width(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

fn sandwich(
    n: usize,
    weights: &[WeightSequence],
    duals: &[DualFunction],
    constants: (f64, f64),
    settings: &SandwichSettings,
) -> Result<SandwichReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut trials = Vec::new();
    for (wi, (a, dual)) in weights.iter().zip(duals).enumerate() {
        if a.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: a.len() });
        }
        for (label, x) in trial_vectors(n, settings.trials, &mut rng) {
            let mc_seed = rng.next_u64();
            let est = ave_quadratic(&x, a, settings.mode.with_seed(settings.cutoff, mc_seed))?;
            let norm = orlicz_norm(&x, dual, 1e-12)?;
            let ave = est.value();
            let (lower, upper) = (constants.0 * norm, constants.1 * norm);
            let pass = ave >= lower * (1.0 - settings.tolerance) && ave <= upper * (1.0 + settings.tolerance);
            let half_width_99 = match est {
                Estimate::Exact(_) => None,
                Estimate::MonteCarlo(m) => Some(m.half_width_99),
            };
            trials.push(SandwichTrial {
                trial: trials.len(),
                weights_index: wi,
                label,
                x,
                ave,
                half_width_99,
                mc_seed: half_width_99.map(|_| mc_seed),
                norm,
                ratio: ave / norm,
                lower,
                upper,
                pass,
            });
        }
    }
    let min_ratio = trials.iter().map(|t| t.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = trials.iter().map(|t| t.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(SandwichReport {
        n,
        weights: weights.iter().map(|w| w.as_slice().to_vec()).collect(),
        pass: trials.iter().all(|t| t.pass),
        trials,
        min_ratio,
        max_ratio,
        theoretical_lower: constants.0,
        theoretical_upper: constants.1,
        tolerance: settings.tolerance,
        lower_vacuous: constants.0 == 0.0,
        corridor: Vec::new(),
        provenance: Provenance { seed: settings.seed, mode: settings.mode, samples: settings.mode.samples() },
    })
}

/// Checks the two-sided sandwich for the norm built from each weight
/// sequence through its knots.
pub fn verify_theorem1(n: usize, weights: &[WeightSequence], settings: &SandwichSettings) -> Result<SandwichReport> {
    let duals = weights
        .iter()
        .map(|a| orlicz_from_knots(&knots_from_weights(a)?))
        .collect::<Result<Vec<_>>>()?;
    sandwich(n, weights, &duals, (sandwich_lower(n), sandwich_upper(n)), settings)
}

/// Generates weights from a normalized, strictly 2-concave `M` and records
/// the ratios `Ave/‖x‖_M` together with the knot corridor.
///
/// Without `constant` the ratio bounds are `[0, ∞)`; with `constant = c`
/// they are `[1/c, c]`. The corridor is always asserted.
pub fn verify_theorem2(
    m: &OrliczFunction,
    dual: &DualFunction,
    n: usize,
    constant: Option<f64>,
    weight_tol: f64,
    settings: &SandwichSettings,
) -> Result<SandwichReport> {
    let a = weights_from_orlicz(m, n, weight_tol)?;
    let constants = match constant {
        Some(c) => (1.0 / c, c),
        None => (0.0, f64::INFINITY),
    };
    let mut report = sandwich(n, std::slice::from_ref(&a), std::slice::from_ref(dual), constants, settings)?;
    report.lower_vacuous = constant.is_none();
    report.corridor = theorem2_corridor(&a, dual)?;
    report.pass = report.pass && report.corridor.iter().all(|c| c.pass);
    Ok(report)
}

/// `K_l ≤ (M*)^{-1}(l/n) ≤ K'_l` where `K` uses the tail `Σ_{j>l} a_j²` and
/// `K'` the shifted tail `Σ_{j=l}^{n−1} a_j²`.
pub fn theorem2_corridor(a: &WeightSequence, dual: &DualFunction) -> Result<Vec<CorridorPoint>> {
    let n = a.len();
    let lower = knots_from_weights(a)?;
    let upper = shifted_tail_values(a);
    (1..=n)
        .map(|l| {
            let lo = lower.knots()[l].1;
            let hi = upper[l - 1];
            let value = dual.inverse(l as f64 / n as f64)?;
            let pass = lo <= value * (1.0 + CORRIDOR_SLACK) && value <= hi * (1.0 + CORRIDOR_SLACK);
            Ok(CorridorPoint { l, lower: lo, value, upper: hi, pass })
        })
        .collect()
}
