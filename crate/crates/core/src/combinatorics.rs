//! Permutation averages, nonincreasing rearrangements and the combinatorial
//! norms that bracket them.
//!
//! Every average over the symmetric group comes in two flavours: exact
//! enumeration (Heap's algorithm, fixed visiting order) and a seeded Monte
//! Carlo estimate. Sampling runs in fixed-size chunks, each with its own
//! ChaCha stream derived from the master seed, so an estimate depends only on
//! `(seed, samples)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construction::{orlicz_from_knots, WeightSequence};
use crate::error::{Error, Result};
use crate::harness::c_n;
use crate::orlicz::{orlicz_norm, DualFunction};
use crate::piecewise::PiecewiseAffine;

/// Largest `n` enumerated exactly over single permutations by default.
pub const EXACT_CUTOFF: usize = 10;
/// Largest `n` enumerated exactly over permutation pairs by default.
pub const EXACT_PAIR_CUTOFF: usize = 6;
/// Samples per independent PRNG stream in Monte Carlo mode.
pub const MC_CHUNK: usize = 1024;
/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    n: usize,
    entries: Vec<f64>,
}

impl Matrix {
    /// Row-major `n × n` matrix with nonnegative entries.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        check_cube(n, 2, &entries)?;
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.len(), rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor3 {
    n: usize,
    entries: Vec<f64>,
}

impl Tensor3 {
    /// `n × n × n` tensor with nonnegative entries, index order `(i, j, k)`.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        check_cube(n, 3, &entries)?;
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[(i * self.n + j) * self.n + k]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

fn check_cube(n: usize, dim: u32, entries: &[f64]) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let expected = n.pow(dim);
    if entries.len() != expected {
        return Err(Error::LengthMismatch { expected, found: entries.len() });
    }
    if let Some(i) = entries.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("entry {i} is negative or not finite")));
    }
    Ok(())
}

/// Values sorted nonincreasing. Ties are irrelevant for every quantity built
/// from the table, so no tie-breaking rule is applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RearrangementTable {
    pub s: Vec<f64>,
    pub source_size: usize,
}

impl RearrangementTable {
    /// `Σ_{k≤m} s(k)`.
    pub fn top_sum(&self, m: usize) -> f64 {
        self.s.iter().take(m).sum()
    }
}

pub fn rearrange(values: &[f64]) -> RearrangementTable {
    let mut s = values.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    RearrangementTable { source_size: s.len(), s }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full enumeration; `cutoff` overrides the default size limit.
    Exact { cutoff: Option<usize> },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Mode {
    pub fn exact() -> Self {
        Mode::Exact { cutoff: None }
    }

    pub fn mc(samples: usize, seed: u64) -> Self {
        Mode::MonteCarlo { samples, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_99: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width_99
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    Exact(f64),
    MonteCarlo(McEstimate),
}

impl Estimate {
    pub fn value(&self) -> f64 {
        match self {
            Estimate::Exact(v) => *v,
            Estimate::MonteCarlo(e) => e.mean,
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Visits every permutation of `0..n` once, in Heap's-algorithm order.
pub fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut visit: F) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_cutoff(n: usize, cutoff: Option<usize>, default: usize) -> Result<()> {
    let max = cutoff.unwrap_or(default);
    if n > max {
        return Err(Error::TooLargeForExact { n, max });
    }
    Ok(())
}

/// Mean and 99% half-width of `samples` draws of `draw(rng)`.
fn monte_carlo<F: FnMut(&mut ChaCha8Rng) -> f64>(samples: usize, seed: u64, mut draw: F) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidInput("Monte Carlo mode needs at least one sample".into()));
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    let mut count = 0usize;
    for chunk in 0..samples.div_ceil(MC_CHUNK) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let len = MC_CHUNK.min(samples - chunk * MC_CHUNK);
        for _ in 0..len {
            let v = draw(&mut rng);
            count += 1;
            let delta = v - mean;
            mean += delta / count as f64;
            m2 += delta * (v - mean);
        }
    }
    let half_width_99 = if samples > 1 {
        Z_99 * (m2 / (samples - 1) as f64).sqrt() / (samples as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(McEstimate { mean, half_width_99, samples, seed })
}

fn random_permutation(rng: &mut ChaCha8Rng, perm: &mut [usize]) {
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    perm.shuffle(rng);
}

/// `Ave_π (Σ_i |x_i a_{π(i)}|²)^{1/2}`.
pub fn ave_quadratic(x: &[f64], a: &WeightSequence, mode: Mode) -> Result<Estimate> {
    let n = a.len();
    if x.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: x.len() });
    }
    let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
    let a2: Vec<f64> = a.as_slice().iter().map(|v| v * v).collect();
    let value = |perm: &[usize]| -> f64 {
        let mut s = 0.0;
        for (i, &p) in perm.iter().enumerate() {
            s += x2[i] * a2[p];
        }
        s.sqrt()
    };
    match mode {
        Mode::Exact { cutoff } => {
            check_cutoff(n, cutoff, EXACT_CUTOFF)?;
            let mut acc = Accumulator::default();
            for_each_permutation(n, |p| acc.add(value(p)));
            Ok(Estimate::Exact(acc.total() / factorial(n)))
        }
        Mode::MonteCarlo { samples, seed } => {
            let mut perm = vec![0; n];
            let est = monte_carlo(samples, seed, |rng| {
                random_permutation(rng, &mut perm);
                value(&perm)
            })?;
            Ok(Estimate::MonteCarlo(est))
        }
    }
}

/// A permutation average together with its combinatorial bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketedAverage {
    pub estimate: Estimate,
    pub lower: f64,
    pub upper: f64,
}

impl BracketedAverage {
    pub fn holds(&self, slack: f64) -> bool {
        let v = self.estimate.value();
        self.lower - slack <= v && v <= self.upper + slack
    }
}

/// `Ave_π max_i a(i, π(i))` with the bracket
/// `[c_n·(1/n) Σ_{k≤n} s(k), (1/n) Σ_{k≤n} s(k)]` over the rearrangement of
/// all `n²` entries.
pub fn ave_max_matrix(m: &Matrix, mode: Mode) -> Result<BracketedAverage> {
    let n = m.n();
    let value = |perm: &[usize]| perm.iter().enumerate().map(|(i, &p)| m.get(i, p)).fold(0.0, f64::max);
    let estimate = match mode {
        Mode::Exact { cutoff } => {
            check_cutoff(n, cutoff, EXACT_CUTOFF)?;
            let mut acc = Accumulator::default();
            for_each_permutation(n, |p| acc.add(value(p)));
            Estimate::Exact(acc.total() / factorial(n))
        }
        Mode::MonteCarlo { samples, seed } => {
            let mut perm = vec![0; n];
            Estimate::MonteCarlo(monte_carlo(samples, seed, |rng| {
                random_permutation(rng, &mut perm);
                value(&perm)
            })?)
        }
    };
    let upper = rearrange(m.entries()).top_sum(n) / n as f64;
    Ok(BracketedAverage { estimate, lower: c_n(n) * upper, upper })
}

/// `Ave_{π,σ} max_i a(i, π(i), σ(i))` with the bracket
/// `[((n−1)²/(n²+(n−1)²))·(1/n²) Σ_{k≤n²} s(k), (1/n²) Σ_{k≤n²} s(k)]`,
/// `s` the rearrangement of all `n³` entries.
pub fn ave_max_tensor(t: &Tensor3, mode: Mode) -> Result<BracketedAverage> {
    let n = t.n();
    let value = |pi: &[usize], sigma: &[usize]| {
        (0..n).map(|i| t.get(i, pi[i], sigma[i])).fold(0.0, f64::max)
    };
    let estimate = match mode {
        Mode::Exact { cutoff } => {
            check_cutoff(n, cutoff, EXACT_PAIR_CUTOFF)?;
            let mut perms = Vec::new();
            for_each_permutation(n, |p| perms.push(p.to_vec()));
            let mut acc = Accumulator::default();
            for pi in &perms {
                for sigma in &perms {
                    acc.add(value(pi, sigma));
                }
            }
            let count = perms.len() as f64;
            Estimate::Exact(acc.total() / (count * count))
        }
        Mode::MonteCarlo { samples, seed } => {
            let (mut pi, mut sigma) = (vec![0; n], vec![0; n]);
            Estimate::MonteCarlo(monte_carlo(samples, seed, |rng| {
                random_permutation(rng, &mut pi);
                random_permutation(rng, &mut sigma);
                value(&pi, &sigma)
            })?)
        }
    };
    let n2 = n * n;
    let upper = rearrange(t.entries()).top_sum(n2) / n2 as f64;
    Ok(BracketedAverage { estimate, lower: tensor_lower_factor(n) * upper, upper })
}

/// `(n−1)² / (n² + (n−1)²)`.
pub fn tensor_lower_factor(n: usize) -> f64 {
    let (n, m) = (n as f64, n as f64 - 1.0);
    m * m / (n * n + m * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BNormMethod {
    /// One unit at a time to the largest marginal gain `b_{k_i+1}·|x_i|`.
    Greedy,
    /// All allocations with `k_i ≥ 0`.
    Exhaustive,
    /// All allocations with `k_i ≥ 1`.
    ExhaustivePositive,
}

/// Largest number of allocations the exhaustive oracle will visit.
pub const EXHAUSTIVE_LIMIT: u64 = 20_000_000;

fn allocation_value(ax: &[f64], prefix: &[f64], k: &[usize]) -> f64 {
    let mut s = 0.0;
    for (i, &ki) in k.iter().enumerate() {
        s += prefix[ki] * ax[i];
    }
    s
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// `max_{Σ k_i = s} Σ_i (Σ_{j≤k_i} b_j)·|x_i|` with `s = b.len()` and the
/// chosen allocation.
pub fn b_norm_allocation(x: &[f64], b: &WeightSequence, method: BNormMethod) -> Result<(f64, Vec<usize>)> {
    let s = b.len();
    let n = x.len();
    if n == 0 || n > s {
        return Err(Error::LengthMismatch { expected: s, found: n });
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("entry {v} is not finite")));
    }
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let prefix = b.prefix_sums();
    let bs = b.as_slice();
    match method {
        BNormMethod::Greedy => {
            let mut k = vec![0usize; n];
            for _ in 0..s {
                let mut best = 0;
                let mut gain = f64::NEG_INFINITY;
                for i in 0..n {
                    if k[i] < s {
                        let g = bs[k[i]] * ax[i];
                        if g > gain {
                            gain = g;
                            best = i;
                        }
                    }
                }
                k[best] += 1;
            }
            Ok((allocation_value(&ax, &prefix, &k), k))
        }
        BNormMethod::Exhaustive | BNormMethod::ExhaustivePositive => {
            let min_part = usize::from(method == BNormMethod::ExhaustivePositive);
            if s < min_part * n {
                return Err(Error::InvalidInput(format!("cannot give {n} parts at least {min_part} from {s}")));
            }
            let free = (s - min_part * n) as u64;
            let count = binomial(free + n as u64 - 1, n as u64 - 1);
            if count > EXHAUSTIVE_LIMIT {
                return Err(Error::TooLargeForExact { n, max: s });
            }
            let mut k = vec![min_part; n];
            let mut best = (f64::NEG_INFINITY, k.clone());
            compositions(&mut k, 0, s - min_part * n, min_part, &mut |k| {
                let v = allocation_value(&ax, &prefix, k);
                if v > best.0 {
                    best = (v, k.to_vec());
                }
            });
            Ok(best)
        }
    }
}

fn compositions<F: FnMut(&[usize])>(k: &mut [usize], i: usize, remaining: usize, base: usize, visit: &mut F) {
    if i == k.len() - 1 {
        k[i] = base + remaining;
        visit(k);
        return;
    }
    for take in 0..=remaining {
        k[i] = base + take;
        compositions(k, i + 1, remaining - take, base, visit);
    }
}

/// The b-norm; see [`b_norm_allocation`].
pub fn b_norm(x: &[f64], b: &WeightSequence, method: BNormMethod) -> Result<f64> {
    Ok(b_norm_allocation(x, b, method)?.0)
}

/// The dual with `M*(Σ_{j≤l} b_j) = l/s`, affine in between.
pub fn dual_from_b(b: &WeightSequence) -> Result<DualFunction> {
    let s = b.len() as f64;
    let knots = b.prefix_sums().into_iter().enumerate().map(|(l, v)| (l as f64 / s, v)).collect();
    orlicz_from_knots(&PiecewiseAffine::new(knots)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma6Report {
    pub b_norm: f64,
    pub orlicz_norm: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

impl Lemma6Report {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// `‖x‖_b ≤ ‖x‖_M ≤ 2‖x‖_b` for the dual built by [`dual_from_b`].
/// `tol` is an absolute slack for the comparison.
pub fn lemma6_bracket(x: &[f64], b: &WeightSequence, dual: &DualFunction, tol: f64) -> Result<Lemma6Report> {
    let bn = b_norm(x, b, BNormMethod::Greedy)?;
    let on = orlicz_norm(x, dual, 1e-12)?;
    Ok(Lemma6Report { b_norm: bn, orlicz_norm: on, lower_holds: bn <= on + tol, upper_holds: on <= 2.0 * bn + tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> WeightSequence {
        WeightSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut seen = std::collections::BTreeSet::new();
        for_each_permutation(5, |p| {
            assert!(seen.insert(p.to_vec()));
        });
        assert_eq!(seen.len(), 120);
        let mut count = 0;
        for_each_permutation(1, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn rearrange_examples() {
        assert_eq!(rearrange(&[1.0, 3.0, 2.0]).s, vec![3.0, 2.0, 1.0]);
        assert_eq!(rearrange(&[0.5; 3]).s, vec![0.5; 3]);
        let id = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = rearrange(id.entries());
        assert_eq!(r.s, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.source_size, 4);
    }

    #[test]
    fn ave_quadratic_examples() {
        let a = w(&[2.0, 1.0]);
        let v = ave_quadratic(&[1.0, 1.0], &a, Mode::exact()).unwrap().value();
        assert!((v - 5f64.sqrt()).abs() < 1e-15);
        let v = ave_quadratic(&[1.0, 0.0], &a, Mode::exact()).unwrap().value();
        assert!((v - 1.5).abs() < 1e-15);
        let x = [0.3, -1.2, 2.0, 0.7];
        let v = ave_quadratic(&x, &w(&[1.0; 4]), Mode::exact()).unwrap().value();
        let l2 = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        assert!((v - l2).abs() < 1e-14);
    }

    #[test]
    fn cutoffs_are_enforced() {
        let a = w(&[1.0; 11]);
        assert_eq!(
            ave_quadratic(&[1.0; 11], &a, Mode::exact()),
            Err(Error::TooLargeForExact { n: 11, max: 10 })
        );
        let t = Tensor3::new(7, vec![1.0; 343]).unwrap();
        assert!(matches!(ave_max_tensor(&t, Mode::exact()), Err(Error::TooLargeForExact { .. })));
        assert!(ave_quadratic(&[1.0; 3], &w(&[1.0; 3]), Mode::Exact { cutoff: Some(2) }).is_err());
    }

    #[test]
    fn identity_matrix_hits_lower_bound() {
        let id = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = ave_max_matrix(&id, Mode::exact()).unwrap();
        assert_eq!(r.estimate.value(), 0.5);
        assert_eq!(r.upper, 1.0);
        assert_eq!(r.lower, 0.5);
    }

    #[test]
    fn constant_inputs() {
        let m = Matrix::new(4, vec![2.5; 16]).unwrap();
        let r = ave_max_matrix(&m, Mode::exact()).unwrap();
        assert!((r.estimate.value() - 2.5).abs() < 1e-15);
        assert!((r.upper - 2.5).abs() < 1e-15);
        assert!((r.lower - 2.5 * c_n(4)).abs() < 1e-15);
        let t = Tensor3::new(3, vec![2.0; 27]).unwrap();
        let r = ave_max_tensor(&t, Mode::exact()).unwrap();
        assert!((r.estimate.value() - 2.0).abs() < 1e-15);
        assert!((r.lower - 2.0 * 4.0 / 13.0).abs() < 1e-15);
        let one = Tensor3::new(1, vec![0.7]).unwrap();
        assert_eq!(ave_max_tensor(&one, Mode::exact()).unwrap().estimate.value(), 0.7);
        let one = Matrix::new(1, vec![0.7]).unwrap();
        let r = ave_max_matrix(&one, Mode::exact()).unwrap();
        assert_eq!((r.estimate.value(), r.lower, r.upper), (0.7, 0.7, 0.7));
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let a = w(&[3.0, 2.0, 1.0, 0.5]);
        let x = [1.0, -0.5, 0.25, 2.0];
        let e1 = ave_quadratic(&x, &a, Mode::mc(5000, 9)).unwrap();
        let e2 = ave_quadratic(&x, &a, Mode::mc(5000, 9)).unwrap();
        assert_eq!(e1, e2);
        let e3 = ave_quadratic(&x, &a, Mode::mc(5000, 10)).unwrap();
        assert_ne!(e1, e3);
        let Estimate::MonteCarlo(m) = e1 else { panic!() };
        assert_eq!((m.samples, m.seed), (5000, 9));
        assert!(m.half_width_99 > 0.0);
        assert!(ave_quadratic(&x, &a, Mode::mc(0, 1)).is_err());
    }

    #[test]
    fn b_norm_examples() {
        let b = w(&[2.0, 1.0]);
        assert_eq!(b_norm_allocation(&[1.0, 1.0], &b, BNormMethod::Greedy).unwrap(), (4.0, vec![1, 1]));
        assert_eq!(b_norm(&[1.0, 1.0], &b, BNormMethod::Exhaustive).unwrap(), 4.0);
        let b = w(&[3.0, 2.0, 0.5]);
        assert_eq!(b_norm(&[-2.0], &b, BNormMethod::Greedy).unwrap(), 11.0);
        assert_eq!(b_norm(&[0.0, 2.0, 0.0], &b, BNormMethod::Greedy).unwrap(), 11.0);
        assert_eq!(b_norm(&[0.0, 2.0, 0.0], &b, BNormMethod::Exhaustive).unwrap(), 11.0);
        assert!(matches!(b_norm(&[1.0; 4], &b, BNormMethod::Greedy), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn positive_parts_oracle_agrees_when_all_entries_nonzero() {
        let b = w(&[1.0, 0.8, 0.5, 0.4, 0.1]);
        let x = [1.0, 0.9, 0.2];
        let free = b_norm(&x, &b, BNormMethod::Exhaustive).unwrap();
        let positive = b_norm(&x, &b, BNormMethod::ExhaustivePositive).unwrap();
        assert!(positive <= free);
        assert_eq!(free, b_norm(&x, &b, BNormMethod::Greedy).unwrap());
    }

    #[test]
    fn lemma6_unit_vector() {
        let b = w(&[1.0, 0.6, 0.3, 0.1]);
        let d = dual_from_b(&b).unwrap();
        let r = lemma6_bracket(&[1.0, 0.0], &b, &d, 1e-12).unwrap();
        assert!((r.b_norm - 2.0).abs() < 1e-15);
        assert!((r.orlicz_norm - 2.0).abs() < 1e-12);
        assert!(r.holds());
        assert!((d.inverse(1.0).unwrap() - 2.0).abs() < 1e-15);
    }
}
