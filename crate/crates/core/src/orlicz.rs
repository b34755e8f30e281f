//! Orlicz functions, their duals, and the two classical norms they induce.
//!
//! An Orlicz function `M` is stored on `t >= 0` only; every public evaluation
//! goes through `|t|`. The dual is
//!
//! ```text
//! M*(t) = ∫_0^t (M')^{-1}(s) ds = t·u − M(u),   where M'(u) = t,
//! ```
//!
//! and the Orlicz norm is the dual-sup functional
//! `‖x‖_M = sup { Σ x_i y_i : Σ M*(y_i) ≤ 1 }`, taken over `y ∈ R^n`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{solve_increasing, ROOT_REL_TOL};
use crate::piecewise::PiecewiseAffine;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative margin used to certify strict monotonicity of `M'`.
pub const STRICTNESS_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum OrliczKind {
    /// `coefficient · |t|^exponent`.
    Power { coefficient: f64, exponent: f64 },
    /// Conjugate of a piecewise-affine dual given by its knots.
    PiecewiseAffineDual(PiecewiseAffine),
    UserDefined,
}

#[derive(Clone)]
pub struct OrliczFunction {
    value: RealFn,
    derivative: RealFn,
    second: Option<RealFn>,
    kind: OrliczKind,
}

impl fmt::Debug for OrliczFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrliczFunction")
            .field("kind", &self.kind)
            .field("has_second_derivative", &self.second.is_some())
            .finish()
    }
}

impl OrliczFunction {
    /// `coefficient · |t|^exponent` with `exponent >= 1`.
    pub fn scaled_power(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0 && coefficient.is_finite()) {
            return Err(Error::InvalidInput(format!("power coefficient must be positive, got {coefficient}")));
        }
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidInput(format!("power exponent must be >= 1, got {exponent}")));
        }
        let (c, p) = (coefficient, exponent);
        Ok(Self {
            value: Arc::new(move |t: f64| c * t.powf(p)),
            derivative: Arc::new(move |t: f64| c * p * t.powf(p - 1.0)),
            second: Some(Arc::new(move |t: f64| c * p * (p - 1.0) * t.powf(p - 2.0))),
            kind: OrliczKind::Power { coefficient: c, exponent: p },
        })
    }

    /// `|t|^p`.
    pub fn power(p: f64) -> Result<Self> {
        Self::scaled_power(1.0, p)
    }

    /// `|t|^p / p`, whose dual is `|t|^q / q` with `1/p + 1/q = 1`.
    pub fn power_over_exponent(p: f64) -> Result<Self> {
        Self::scaled_power(1.0 / p, p)
    }

    /// A user-supplied function. Without `second`, `M''` falls back to a
    /// central difference with step `max(1e-5, 1e-5·t)`.
    pub fn from_fns<V, D>(value: V, derivative: D, second: Option<RealFn>) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { value: Arc::new(value), derivative: Arc::new(derivative), second, kind: OrliczKind::UserDefined }
    }

    /// The conjugate of a convex piecewise-affine dual with knots `(y_k, M*(y_k))`.
    ///
    /// `M(s) = max_k (s·y_k − M*(y_k))` for `s` up to the final slope of the
    /// dual, and `+inf` beyond it (the dual continues with its final slope).
    pub fn from_dual_knots(dual: PiecewiseAffine) -> Result<Self> {
        if let Some(index) = dual.convexity_violation(1e-9) {
            return Err(Error::NotConvex { index });
        }
        let knots: Arc<[(f64, f64)]> = dual.knots().into();
        let slopes: Arc<[f64]> = dual.slopes().into();
        let last = *slopes.last().expect("two knots");
        // Active knot for s: the last knot whose incoming slope is <= s.
        let active = {
            let slopes = slopes.clone();
            move |s: f64| slopes.partition_point(|&sl| sl <= s)
        };
        let value = {
            let knots = knots.clone();
            let active = active.clone();
            move |s: f64| {
                if s > last {
                    return f64::INFINITY;
                }
                let (y, v) = knots[active(s)];
                (s * y - v).max(0.0)
            }
        };
        let derivative = move |s: f64| if s > last { f64::INFINITY } else { knots[active(s)].0 };
        Ok(Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            second: Some(Arc::new(|_| 0.0)),
            kind: OrliczKind::PiecewiseAffineDual(dual),
        })
    }

    pub fn kind(&self) -> &OrliczKind {
        &self.kind
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.value)(t.abs())
    }

    /// `M'(|t|)`.
    pub fn derivative(&self, t: f64) -> f64 {
        (self.derivative)(t.abs())
    }

    /// `M''(|t|)`, exact if supplied, else by central differences.
    pub fn second_derivative(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.second {
            Some(s) => s(t),
            None => {
                let h = (1e-5f64).max(1e-5 * t).min(0.5 * t);
                ((self.derivative)(t + h) - (self.derivative)(t - h)) / (2.0 * h)
            }
        }
    }

    /// `t ↦ M(α·t)`.
    pub fn with_scaled_argument(&self, alpha: f64) -> Self {
        let (v, d) = (self.value.clone(), self.derivative.clone());
        let second: RealFn = match &self.second {
            Some(s) => {
                let s = s.clone();
                Arc::new(move |t| alpha * alpha * s(alpha * t))
            }
            None => {
                let d = d.clone();
                Arc::new(move |t: f64| {
                    let x = alpha * t;
                    let h = (1e-5f64).max(1e-5 * x).min(0.5 * x);
                    alpha * alpha * (d(x + h) - d(x - h)) / (2.0 * h)
                })
            }
        };
        let kind = match &self.kind {
            OrliczKind::Power { coefficient, exponent } => {
                OrliczKind::Power { coefficient: coefficient * alpha.powf(*exponent), exponent: *exponent }
            }
            _ => OrliczKind::UserDefined,
        };
        Self {
            value: Arc::new(move |t| v(alpha * t)),
            derivative: Arc::new(move |t| alpha * d(alpha * t)),
            second: Some(second),
            kind,
        }
    }

    /// `u·M'(u) − M(u)`, i.e. `M*(M'(u))`.
    pub(crate) fn legendre_gap(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        ((self.derivative)(u) * u - (self.value)(u)).max(0.0)
    }

    /// Checks the Orlicz-function invariants on a sample grid of positive
    /// points: `M(0) = 0`, positivity, three-point convexity and monotone `M'`.
    pub fn validate(&self, grid: &[f64], tol: f64) -> Result<()> {
        if self.eval(0.0).abs() > tol {
            return Err(Error::InvalidInput(format!("M(0) = {} is not zero", self.eval(0.0))));
        }
        for &t in grid {
            if !(self.eval(t) > 0.0) {
                return Err(Error::InvalidInput(format!("M({t}) is not positive")));
            }
        }
        for w in grid.windows(3) {
            let lambda = (w[2] - w[1]) / (w[2] - w[0]);
            let chord = lambda * self.eval(w[0]) + (1.0 - lambda) * self.eval(w[2]);
            if self.eval(w[1]) > chord + tol * chord.abs().max(1.0) {
                return Err(Error::InvalidInput(format!("M is not convex near {}", w[1])));
            }
        }
        for w in grid.windows(2) {
            if self.derivative(w[1]) < self.derivative(w[0]) - tol * self.derivative(w[0]).abs().max(1.0) {
                return Err(Error::InvalidInput(format!("M' decreases near {}", w[1])));
            }
        }
        Ok(())
    }
}

/// The dual function `M*` together with its inverse.
#[derive(Debug, Clone)]
pub struct DualFunction {
    repr: DualRepr,
}

#[derive(Debug, Clone)]
enum DualRepr {
    /// `M*` computed from a strictly convex `M` through the Legendre identity.
    Smooth { source: OrliczFunction, t_max: f64, rel_tol: f64 },
    /// `M*` given by knots, continued past the last knot with its final slope.
    Knots(PiecewiseAffine),
}

impl DualFunction {
    /// A dual given directly by its knots `(t_k, M*(t_k))`.
    pub fn from_knots(knots: PiecewiseAffine) -> Self {
        Self { repr: DualRepr::Knots(knots) }
    }

    /// Knots of a piecewise-affine dual; `None` for smooth duals.
    pub fn knots(&self) -> Option<&PiecewiseAffine> {
        match &self.repr {
            DualRepr::Knots(k) => Some(k),
            DualRepr::Smooth { .. } => None,
        }
    }

    /// Upper end of the domain on which `M*` is representable.
    pub fn t_max(&self) -> f64 {
        match &self.repr {
            DualRepr::Smooth { t_max, .. } => *t_max,
            DualRepr::Knots(_) => f64::INFINITY,
        }
    }

    /// The Orlicz function this is dual to.
    pub fn source(&self) -> Result<OrliczFunction> {
        match &self.repr {
            DualRepr::Smooth { source, .. } => Ok(source.clone()),
            DualRepr::Knots(k) => OrliczFunction::from_dual_knots(k.clone()),
        }
    }

    fn check_domain(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("dual argument {t} is not finite")));
        }
        if t > self.t_max() {
            return Err(Error::DomainExceeded { value: t, limit: self.t_max() });
        }
        Ok(t)
    }

    /// `(M')^{-1}(t)`, the point where the Legendre supremum is attained.
    fn primal_point(source: &OrliczFunction, t: f64, rel_tol: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        solve_increasing(|u| source.derivative(u), t, 1.0, rel_tol)
    }

    /// `M*(|t|)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let t = self.check_domain(t)?;
        match &self.repr {
            DualRepr::Knots(k) => Ok(k.eval(t)),
            DualRepr::Smooth { source, rel_tol, .. } => {
                let u = Self::primal_point(source, t, *rel_tol)?;
                Ok((t * u - source.eval(u)).max(0.0))
            }
        }
    }

    /// `M*'(|t|) = (M')^{-1}(|t|)`; the right derivative for knot duals.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        let t = self.check_domain(t)?;
        match &self.repr {
            DualRepr::Knots(k) => {
                let s = k.slopes();
                let idx = k.knots().partition_point(|&(x, _)| x <= t);
                Ok(s[idx.saturating_sub(1).min(s.len() - 1)])
            }
            DualRepr::Smooth { source, rel_tol, .. } => Self::primal_point(source, t, *rel_tol),
        }
    }

    /// `(M*)^{-1}(v)` for `v >= 0`.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput(format!("inverse dual argument {v} must be finite and >= 0")));
        }
        match &self.repr {
            DualRepr::Knots(k) => Ok(k.inverse()?.eval(v)),
            DualRepr::Smooth { source, rel_tol, t_max } => {
                if v == 0.0 {
                    return Ok(0.0);
                }
                // M*(M'(u)) = u M'(u) − M(u) is increasing in u.
                let u = solve_increasing(|u| source.legendre_gap(u), v, 1.0, *rel_tol)?;
                let y = source.derivative(u);
                if y > *t_max {
                    return Err(Error::DomainExceeded { value: y, limit: *t_max });
                }
                Ok(y)
            }
        }
    }

    /// `M*` viewed as an Orlicz function in its own right (smooth duals only).
    ///
    /// Outside the dual domain the returned callables produce NaN.
    pub fn as_orlicz(&self) -> Result<OrliczFunction> {
        let DualRepr::Smooth { source, t_max, rel_tol } = &self.repr else {
            return Err(Error::InvalidInput("piecewise-affine duals are not smooth Orlicz functions".into()));
        };
        let (t_max, rel_tol) = (*t_max, *rel_tol);
        let m = source.clone();
        let value = {
            let m = m.clone();
            move |t: f64| {
                if t > t_max {
                    return f64::NAN;
                }
                Self::primal_point(&m, t, rel_tol).map_or(f64::NAN, |u| (t * u - m.eval(u)).max(0.0))
            }
        };
        let derivative = {
            let m = m.clone();
            move |t: f64| if t > t_max { f64::NAN } else { Self::primal_point(&m, t, rel_tol).unwrap_or(f64::NAN) }
        };
        let second: RealFn = Arc::new(move |t: f64| {
            if t > t_max {
                return f64::NAN;
            }
            Self::primal_point(&m, t, rel_tol).map_or(f64::NAN, |u| 1.0 / m.second_derivative(u))
        });
        Ok(OrliczFunction::from_fns(value, derivative, Some(second)))
    }
}

/// Builds `M*` for a strictly convex `M` on `[0, t_max]` (`t_max` may be
/// infinite).
///
/// Strict convexity is certified by probing `M'` on a geometric grid that
/// covers the preimage of `[0, t_max]`; `M'` must increase by a relative
/// margin at every step. `tol` bounds the relative error of the inner root
/// solves.
pub fn conjugate_dual(m: &OrliczFunction, t_max: f64, tol: f64) -> Result<DualFunction> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let mut s_hi = 1.0;
    if t_max.is_finite() {
        let mut steps = 0;
        while m.derivative(s_hi) < t_max {
            s_hi *= 2.0;
            steps += 1;
            if steps > 1000 {
                return Err(Error::NotStrictlyConvex { at: s_hi });
            }
        }
    } else {
        s_hi = 1e4;
    }
    const PROBES: usize = 97;
    let s_lo = s_hi * 1e-8;
    let ratio = (s_hi / s_lo).powf(1.0 / (PROBES - 1) as f64);
    let mut prev = m.derivative(s_lo);
    let mut s = s_lo;
    for _ in 1..PROBES {
        s *= ratio;
        let d = m.derivative(s);
        if !(d - prev > STRICTNESS_MARGIN * d.abs()) {
            return Err(Error::NotStrictlyConvex { at: s });
        }
        prev = d;
    }
    Ok(DualFunction { repr: DualRepr::Smooth { source: m.clone(), t_max, rel_tol: tol.min(ROOT_REL_TOL) } })
}

fn abs_entries(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidInput("vector must have at least one entry".into()));
    }
    x.iter()
        .map(|&v| if v.is_finite() { Ok(v.abs()) } else { Err(Error::InvalidInput(format!("entry {v} is not finite"))) })
        .collect()
}

/// `sup { Σ x_i y_i : Σ M*(y_i) ≤ 1 }`.
///
/// Smooth duals: the maximizer is `y_i = M'(k·|x_i|)` with `k > 0` fixed by
/// `Σ M*(y_i) = 1`, a one-dimensional monotone root solve.
///
/// Piecewise-affine duals: the problem is a fractional knapsack over the
/// affine pieces of `M*` (width `w`, cost per unit `slope`), solved exactly by
/// taking pieces in order of decreasing `|x_i| / slope`.
pub fn orlicz_norm(x: &[f64], dual: &DualFunction, tol: f64) -> Result<f64> {
    let a = abs_entries(x)?;
    if a.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    match &dual.repr {
        DualRepr::Knots(knots) => knapsack_norm(&a, knots),
        DualRepr::Smooth { source, t_max, .. } => {
            let amax = a.iter().cloned().fold(0.0, f64::max);
            let rel = (tol * 1e-2).min(1e-12);
            let k = solve_increasing(|k| a.iter().map(|&ai| source.legendre_gap(k * ai)).sum(), 1.0, 1.0 / amax, rel)?;
            let mut norm = 0.0;
            for &ai in &a {
                let y = source.derivative(k * ai);
                if y > *t_max {
                    return Err(Error::DomainExceeded { value: y, limit: *t_max });
                }
                norm += ai * y;
            }
            Ok(norm)
        }
    }
}

fn knapsack_norm(a: &[f64], knots: &PiecewiseAffine) -> Result<f64> {
    if let Some(index) = knots.convexity_violation(1e-9) {
        return Err(Error::NotConvex { index });
    }
    // (width, cost, slope) per piece; the final piece is the unbounded extension.
    let k = knots.knots();
    let mut pieces: Vec<(f64, f64, f64)> = k
        .windows(2)
        .map(|w| {
            let width = w[1].0 - w[0].0;
            let cost = w[1].1 - w[0].1;
            (width, cost, cost / width)
        })
        .collect();
    let last_slope = pieces.last().expect("two knots").2;
    if !(last_slope > 0.0) {
        return Err(Error::NotStrictlyIncreasing { index: k.len() - 1 });
    }
    pieces.push((f64::INFINITY, f64::INFINITY, last_slope));

    let mut items: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * pieces.len());
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, piece) in pieces.iter().enumerate() {
            // Zero-cost pieces are free; they come first.
            let ratio = if piece.2 > 0.0 { ai / piece.2 } else { f64::INFINITY };
            items.push((ratio, j, i));
        }
    }
    items.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));

    let mut budget = 1.0;
    let mut value = 0.0;
    for (_, j, i) in items {
        let (width, cost, slope) = pieces[j];
        if cost <= budget {
            budget -= cost;
            value += a[i] * width;
        } else {
            value += a[i] * budget / slope;
            break;
        }
    }
    Ok(value)
}

/// The gauge `λ > 0` with `Σ M(x_i / λ) = 1`.
///
/// The zero vector has no such `λ`; by convention it returns `0`.
pub fn luxemburg_norm(x: &[f64], m: &OrliczFunction, tol: f64) -> Result<f64> {
    let a = abs_entries(x)?;
    let amax = a.iter().cloned().fold(0.0, f64::max);
    if amax == 0.0 {
        return Ok(0.0);
    }
    let rel = (tol * 1e-2).min(1e-12);
    let k = solve_increasing(|k| a.iter().map(|&ai| m.eval(k * ai)).sum(), 1.0, 1.0 / amax, rel)?;
    if !(k > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(1.0 / k)
}

/// The scale `α` for which `t ↦ M(α t)` has dual equal to 1 at 1.
pub fn normalizing_scale(m: &OrliczFunction) -> Result<f64> {
    let dual = conjugate_dual(m, f64::INFINITY, ROOT_REL_TOL)?;
    Ok(1.0 / dual.inverse(1.0)?)
}

/// Rescales the argument of `M` so that its dual satisfies `M̃*(1) = 1`.
///
/// With `M̃(t) = M(α t)` the dual is `M̃*(s) = M*(s/α)`, so `α = 1/(M*)^{-1}(1)`.
/// The property is re-verified on the result to `1e-8`.
pub fn normalize_dual_at_one(m: &OrliczFunction) -> Result<OrliczFunction> {
    let alpha = normalizing_scale(m)?;
    let scaled = if (alpha - 1.0).abs() <= 4.0 * f64::EPSILON { m.clone() } else { m.with_scaled_argument(alpha) };
    let check = conjugate_dual(&scaled, f64::INFINITY, ROOT_REL_TOL)?.eval(1.0)?;
    if (check - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { value: check });
    }
    Ok(scaled)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityViolation {
    pub left: f64,
    pub middle: f64,
    pub right: f64,
    /// `(M(√t_mid) − chord) / |M(√t_mid)|`, negative for a violation.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoConcavityReport {
    pub two_concave: bool,
    /// Smallest relative margin over all triples; positive means strict.
    pub min_margin: f64,
    pub violations: Vec<ConcavityViolation>,
}

impl TwoConcavityReport {
    pub fn is_strict(&self, margin: f64) -> bool {
        self.two_concave && self.min_margin > margin
    }
}

/// Three-point concavity test of `t ↦ M(√t)` on every consecutive triple of
/// `grid` (strictly increasing, positive, at least three points).
pub fn two_concavity_check(m: &OrliczFunction, grid: &[f64]) -> Result<TwoConcavityReport> {
    if grid.len() < 3 {
        return Err(Error::InvalidInput("concavity grid needs at least three points".into()));
    }
    if grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("concavity grid must be positive and strictly increasing".into()));
    }
    let g = |t: f64| m.eval(t.sqrt());
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    for w in grid.windows(3) {
        let lambda = (w[2] - w[1]) / (w[2] - w[0]);
        let chord = lambda * g(w[0]) + (1.0 - lambda) * g(w[2]);
        let mid = g(w[1]);
        let margin = (mid - chord) / mid.abs().max(f64::MIN_POSITIVE);
        min_margin = min_margin.min(margin);
        if margin < -1e-12 {
            violations.push(ConcavityViolation { left: w[0], middle: w[1], right: w[2], margin });
        }
    }
    Ok(TwoConcavityReport { two_concave: violations.is_empty(), min_margin, violations })
}

/// Serializable description of an Orlicz function, as accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrliczSpec {
    /// `M(t) = |t|^p`, `p ∈ [1, 2]`.
    Power(f64),
    /// `|t|^p` rescaled so that `M*(1) = 1`.
    PowerNormalized(f64),
    /// Knots `(t, M*(t))` of a piecewise-affine dual.
    DualKnots(Vec<(f64, f64)>),
}

impl OrliczSpec {
    fn exponent(p: f64) -> Result<f64> {
        if (1.0..=2.0).contains(&p) {
            Ok(p)
        } else {
            Err(Error::InvalidInput(format!("power exponent must lie in [1, 2], got {p}")))
        }
    }

    /// The Orlicz function itself.
    pub fn orlicz(&self) -> Result<OrliczFunction> {
        match self {
            Self::Power(p) => OrliczFunction::power(Self::exponent(*p)?),
            Self::PowerNormalized(p) => normalize_dual_at_one(&OrliczFunction::power(Self::exponent(*p)?)?),
            Self::DualKnots(k) => OrliczFunction::from_dual_knots(PiecewiseAffine::new(k.clone())?),
        }
    }

    /// The dual function, on an unbounded domain.
    pub fn dual(&self) -> Result<DualFunction> {
        match self {
            Self::DualKnots(k) => Ok(DualFunction::from_knots(PiecewiseAffine::new(k.clone())?)),
            _ => conjugate_dual(&self.orlicz()?, f64::INFINITY, ROOT_REL_TOL),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> OrliczFunction {
        OrliczFunction::power(2.0).unwrap()
    }

    #[test]
    fn dual_of_square_is_quarter_square() {
        let d = conjugate_dual(&square(), 10.0, 1e-12).unwrap();
        assert!((d.eval(2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((d.eval(-3.0).unwrap() - 2.25).abs() < 1e-12);
        assert!((d.inverse(1.0).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn dual_of_three_halves_power() {
        let d = conjugate_dual(&OrliczFunction::power_over_exponent(1.5).unwrap(), 5.0, 1e-12).unwrap();
        for t in [0.1, 0.7, 1.0, 2.5, 5.0] {
            assert!((d.eval(t).unwrap() - t.powi(3) / 3.0).abs() < 1e-9 * (1.0 + t.powi(3)));
        }
    }

    #[test]
    fn absolute_value_is_not_strictly_convex() {
        let m = OrliczFunction::power(1.0).unwrap();
        assert!(matches!(conjugate_dual(&m, 1.0, 1e-10), Err(Error::NotStrictlyConvex { .. })));
    }

    #[test]
    fn dual_domain_is_enforced() {
        let d = conjugate_dual(&square(), 1.0, 1e-10).unwrap();
        assert!(matches!(d.eval(1.5), Err(Error::DomainExceeded { .. })));
        assert!(matches!(orlicz_norm(&[1.0], &d, 1e-10), Err(Error::DomainExceeded { .. })));
    }

    #[test]
    fn orlicz_norm_of_unit_vector_is_inverse_dual_at_one() {
        let d = conjugate_dual(&square(), 10.0, 1e-12).unwrap();
        let v = orlicz_norm(&[1.0, 0.0, 0.0], &d, 1e-10).unwrap();
        assert!((v - d.inverse(1.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn orlicz_norm_of_square_matches_cauchy_schwarz() {
        // sup{y1 + y2 : (y1² + y2²)/4 ≤ 1} = 2√2
        let d = conjugate_dual(&square(), 10.0, 1e-12).unwrap();
        let v = orlicz_norm(&[1.0, 1.0], &d, 1e-10).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_vector_has_zero_norms() {
        let d = conjugate_dual(&square(), 10.0, 1e-12).unwrap();
        assert_eq!(orlicz_norm(&[0.0, -0.0], &d, 1e-10).unwrap(), 0.0);
        assert_eq!(luxemburg_norm(&[0.0], &square(), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn luxemburg_examples() {
        let m = square();
        assert!((luxemburg_norm(&[1.0, 0.0, 0.0], &m, 1e-12).unwrap() - 1.0).abs() < 1e-10);
        assert!((luxemburg_norm(&[1.0, 1.0], &m, 1e-12).unwrap() - 2f64.sqrt()).abs() < 1e-10);
        let m = OrliczFunction::power(1.5).unwrap();
        let v = luxemburg_norm(&[1.0; 4], &m, 1e-12).unwrap();
        assert!((v - 4f64.powf(2.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn normalization_of_square() {
        assert!((normalizing_scale(&square()).unwrap() - 0.5).abs() < 1e-10);
        let m = normalize_dual_at_one(&square()).unwrap();
        assert!((m.eval(2.0) - 1.0).abs() < 1e-9);
        let d = conjugate_dual(&m, 10.0, 1e-12).unwrap();
        assert!((d.eval(1.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn normalization_is_identity_when_already_normalized() {
        // M(t) = t²/4 has M*(t) = t², so M*(1) = 1.
        let m = OrliczFunction::scaled_power(0.25, 2.0).unwrap();
        assert!((normalizing_scale(&m).unwrap() - 1.0).abs() < 1e-10);
        let n = normalize_dual_at_one(&m).unwrap();
        for t in [0.3, 1.0, 4.0] {
            assert!((n.eval(t) - m.eval(t)).abs() < 1e-9 * m.eval(t));
        }
    }

    #[test]
    fn normalization_of_cube_over_three() {
        let m = normalize_dual_at_one(&OrliczFunction::scaled_power(1.0 / 3.0, 3.0).unwrap()).unwrap();
        let d = conjugate_dual(&m, f64::INFINITY, 1e-12).unwrap();
        assert!((d.eval(1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn two_concavity_examples() {
        let grid: Vec<f64> = (1..=40).map(|k| k as f64 * 0.25).collect();
        let r = two_concavity_check(&OrliczFunction::power(1.5).unwrap(), &grid).unwrap();
        assert!(r.two_concave && r.is_strict(1e-10));
        let r = two_concavity_check(&square(), &grid).unwrap();
        assert!(r.two_concave);
        assert!(!r.is_strict(1e-10));
        let r = two_concavity_check(&OrliczFunction::power(4.0).unwrap(), &grid).unwrap();
        assert!(!r.two_concave);
        assert_eq!(r.violations.len(), grid.len() - 2);
        assert!(two_concavity_check(&square(), &[1.0, 2.0]).is_err());
        assert!(two_concavity_check(&square(), &[1.0, 3.0, 2.0]).is_err());
    }

    #[test]
    fn conjugate_of_knot_dual() {
        // M*(y) = y on [0,1], slope 2 afterwards.
        let knots = PiecewiseAffine::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).unwrap();
        let m = OrliczFunction::from_dual_knots(knots).unwrap();
        assert_eq!(m.eval(0.5), 0.0);
        assert_eq!(m.eval(1.5), 0.5);
        assert_eq!(m.eval(2.0), 1.0);
        assert_eq!(m.eval(2.5), f64::INFINITY);
        assert!(matches!(
            OrliczFunction::from_dual_knots(PiecewiseAffine::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)]).unwrap()),
            Err(Error::NotConvex { index: 1 })
        ));
    }

    #[test]
    fn knapsack_norm_on_identity_dual() {
        // M*(y) = y: the constraint is Σ|y_i| ≤ 1, so the norm is max |x_i|.
        let d = DualFunction::from_knots(PiecewiseAffine::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap());
        assert_eq!(orlicz_norm(&[0.3, -0.7, 0.2], &d, 1e-12).unwrap(), 0.7);
    }

    #[test]
    fn spec_schema_parses() {
        let s: OrliczSpec = serde_json::from_str(r#"{"power": 1.5}"#).unwrap();
        assert_eq!(s, OrliczSpec::Power(1.5));
        let s: OrliczSpec = serde_json::from_str(r#"{"power_normalized": 1.25}"#).unwrap();
        assert_eq!(s, OrliczSpec::PowerNormalized(1.25));
        let s: OrliczSpec = serde_json::from_str(r#"{"dual_knots": [[0,0],[1,1]]}"#).unwrap();
        assert!(s.dual().unwrap().knots().is_some());
        assert!(OrliczSpec::Power(3.0).orlicz().is_err());
    }

    #[test]
    fn validate_accepts_powers_and_rejects_concave() {
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.2).collect();
        assert!(OrliczFunction::power(1.3).unwrap().validate(&grid, 1e-12).is_ok());
        let sqrt = OrliczFunction::from_fns(|t: f64| t.sqrt(), |t: f64| 0.5 / t.sqrt(), None);
        assert!(sqrt.validate(&grid, 1e-12).is_err());
    }

    #[test]
    fn finite_difference_second_derivative() {
        let m = OrliczFunction::from_fns(|t: f64| t.powi(3), |t: f64| 3.0 * t * t, None);
        assert!((m.second_derivative(2.0) - 12.0).abs() < 1e-6);
        let s = m.with_scaled_argument(0.5);
        assert!((s.second_derivative(2.0) - 0.25 * 6.0).abs() < 1e-6);
    }
}
