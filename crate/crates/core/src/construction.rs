//! Both directions of the correspondence between weight sequences and
//! Orlicz functions.
//!
//! * Weights to Orlicz: the inverse dual `(M*)^{-1}` is the piecewise-affine
//!   function with values
//!   `{ ((1/n) Σ_{i≤l} a_i)² + (l/n)·(1/n) Σ_{i>l} a_i² }^{1/2}` at `l/n`.
//! * Orlicz to weights: with the concave profile `H = ((M*)^{-1})²`, the
//!   density
//!   `f(t) = −½ ∫_t^1 H''(s) / √(H(s) − sH'(s)) ds + √H(1) − √(H(1) − H'(1))`
//!   reproduces `H(t) = (∫_0^t f)² + t ∫_t^1 f²`, and `a_l = n ∫_{(l−1)/n}^{l/n} f`.
//!
//! `f` is generally unbounded at 0. Its primitive is never integrated across
//! the origin; it is evaluated through the identity
//! `∫_0^t f = t·f(t) + √(H(t) − tH'(t))`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{integrate, solve_increasing, QUAD_ABS_TOL, QUAD_REL_TOL, ROOT_REL_TOL};
use crate::orlicz::{conjugate_dual, two_concavity_check, DualFunction, OrliczFunction};
pub use crate::piecewise::PiecewiseAffine;

/// Relative floor on `H(s) − sH'(s)`; below it a profile counts as degenerate.
pub const DEGENERACY_MARGIN: f64 = 1e-12;

/// Margin certifying strict 2-concavity before building weights.
pub const TWO_CONCAVITY_MARGIN: f64 = 1e-10;

/// Finite nonincreasing positive weights `a_1 ≥ … ≥ a_n > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightSequence(Vec<f64>);

impl WeightSequence {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidInput("weight sequence must be nonempty".into()));
        }
        for (i, &v) in a.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NotPositive { index: i });
            }
        }
        if let Some(i) = (1..a.len()).find(|&i| a[i] > a[i - 1]) {
            return Err(Error::NotDecreasing { index: i });
        }
        Ok(Self(a))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Prefix sums `B(k) = Σ_{j≤k} a_j` for `k = 0..=n`.
    pub fn prefix_sums(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for &v in &self.0 {
            acc += v;
            out.push(acc);
        }
        out
    }
}

impl<'de> Deserialize<'de> for WeightSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        WeightSequence::new(v).map_err(serde::de::Error::custom)
    }
}

fn dual_knot_values(a: &WeightSequence, shifted_tail: bool) -> Vec<f64> {
    let a = a.as_slice();
    let n = a.len();
    let nf = n as f64;
    // tail[l] = Σ_{i ≥ l} a_i² (0-based)
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + a[i] * a[i];
    }
    let mut prefix = 0.0;
    (1..=n)
        .map(|l| {
            prefix += a[l - 1];
            let t = if shifted_tail {
                // Σ_{j=l}^{n−1} a_j², 1-based
                if l < n { tail[l - 1] - a[n - 1] * a[n - 1] } else { 0.0 }
            } else {
                tail[l]
            };
            let head = prefix / nf;
            (head * head + (l as f64 / nf) * (t.max(0.0) / nf)).sqrt()
        })
        .collect()
}

/// `(M*)^{-1}` at the knots `l/n`, `l = 1..=n`, plus the origin, flagged
/// and certified concave.
pub fn knots_from_weights(a: &WeightSequence) -> Result<PiecewiseAffine> {
    let n = a.len() as f64;
    let mut knots = vec![(0.0, 0.0)];
    knots.extend(dual_knot_values(a, false).into_iter().enumerate().map(|(i, v)| ((i + 1) as f64 / n, v)));
    PiecewiseAffine::new_concave(knots, 1e-9)
}

/// Knot values with the tail sum shifted to `Σ_{j=l}^{n−1} a_j²`.
///
/// For weights produced by [`weights_from_orlicz`] these bound `(M*)^{-1}(l/n)`
/// from above, while the values of [`knots_from_weights`] bound it from below.
pub fn shifted_tail_values(a: &WeightSequence) -> Vec<f64> {
    dual_knot_values(a, true)
}

/// The dual `M*` obtained by inverting the knots of `(M*)^{-1}`.
pub fn orlicz_from_knots(inv_knots: &PiecewiseAffine) -> Result<DualFunction> {
    Ok(DualFunction::from_knots(inv_knots.inverse()?))
}

/// `b_k = √(nk) − √(n(k−1))`, so that `Σ_{j≤k} b_j = √(nk)`.
pub fn sqrt_prefix_b(n: usize) -> Result<WeightSequence> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let rn = (n as f64).sqrt();
    WeightSequence::new((1..=n).map(|k| rn / ((k as f64).sqrt() + ((k - 1) as f64).sqrt())).collect())
}

/// `(N*)^{-1}` for the products `a_i b_k`: knots at `l/n²` with values
/// `(1/n²) Σ_{j≤l} t(j)`, `t` the nonincreasing rearrangement of the products.
pub fn product_knots(a: &WeightSequence, b: &WeightSequence) -> Result<PiecewiseAffine> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), found: b.len() });
    }
    let n2 = (a.len() * a.len()) as f64;
    let mut products: Vec<f64> =
        a.as_slice().iter().flat_map(|&ai| b.as_slice().iter().map(move |&bk| ai * bk)).collect();
    products.sort_by(|x, y| y.total_cmp(x));
    let mut knots = Vec::with_capacity(products.len() + 1);
    knots.push((0.0, 0.0));
    let mut acc = 0.0;
    for (j, t) in products.into_iter().enumerate() {
        acc += t;
        knots.push(((j + 1) as f64 / n2, acc / n2));
    }
    PiecewiseAffine::new_concave(knots, 1e-9)
}

/// One evaluation of a concave profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub h: f64,
    pub dh: f64,
    pub ddh: f64,
    /// `H(t) − t·H'(t)`, possibly computed by a cancellation-free formula.
    pub gap: f64,
}

type ProfileFn = Arc<dyn Fn(f64) -> ProfilePoint + Send + Sync>;

/// A concave increasing `H` on `[0, 1]` with `H(0) = 0`, together with its
/// first two derivatives on `(0, 1]`.
#[derive(Clone)]
pub struct ConcaveProfile {
    eval: ProfileFn,
    label: String,
}

impl fmt::Debug for ConcaveProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConcaveProfile").field("label", &self.label).finish()
    }
}

impl ConcaveProfile {
    /// `H(t) = t^α`, `0 < α ≤ 1`.
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("profile exponent must lie in (0, 1], got {alpha}")));
        }
        let eval = move |t: f64| {
            let h = t.powf(alpha);
            ProfilePoint {
                h,
                dh: alpha * t.powf(alpha - 1.0),
                ddh: alpha * (alpha - 1.0) * t.powf(alpha - 2.0),
                gap: (1.0 - alpha) * h,
            }
        };
        Ok(Self { eval: Arc::new(eval), label: format!("power({alpha})") })
    }

    pub fn from_fns<H, D, DD>(h: H, dh: D, ddh: DD) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        DD: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let eval = move |t: f64| {
            let (v, d) = (h(t), dh(t));
            ProfilePoint { h: v, dh: d, ddh: ddh(t), gap: v - t * d }
        };
        Self { eval: Arc::new(eval), label: "user".into() }
    }

    /// `H = ((M*)^{-1})²` for a strictly convex `M`.
    ///
    /// Parametrized by the primal point `u` with `u·M'(u) − M(u) = t`:
    /// `(M*)^{-1}(t) = M'(u)`, `H' = 2M'(u)/u`,
    /// `H'' = 2/u² − 2M'(u)/(u³ M''(u))` and
    /// `H − tH' = M'(u)·(2M(u)/u − M'(u))`.
    pub fn from_orlicz(m: &OrliczFunction) -> Self {
        let label = format!("orlicz({})", m_kind_label(m));
        let m = m.clone();
        let eval = move |t: f64| {
            if t == 0.0 {
                return ProfilePoint { h: 0.0, dh: f64::INFINITY, ddh: f64::NEG_INFINITY, gap: 0.0 };
            }
            match solve_increasing(|u| m.legendre_gap(u), t, 1.0, ROOT_REL_TOL * 1e-2) {
                Ok(u) => {
                    let g = m.derivative(u);
                    let mu = m.eval(u);
                    ProfilePoint {
                        h: g * g,
                        dh: 2.0 * g / u,
                        ddh: 2.0 / (u * u) - 2.0 * g / (u * u * u * m.second_derivative(u)),
                        gap: g * (2.0 * mu / u - g),
                    }
                }
                Err(_) => ProfilePoint { h: f64::NAN, dh: f64::NAN, ddh: f64::NAN, gap: f64::NAN },
            }
        };
        Self { eval: Arc::new(eval), label }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn at(&self, t: f64) -> ProfilePoint {
        (self.eval)(t)
    }

    pub fn h(&self, t: f64) -> f64 {
        self.at(t).h
    }

    fn gap_checked(&self, t: f64) -> Result<ProfilePoint> {
        let p = self.at(t);
        if !(p.gap.is_finite() && p.h.is_finite() && p.ddh.is_finite()) {
            return Err(Error::InvalidInput(format!("profile evaluation failed at t = {t}")));
        }
        if p.gap <= DEGENERACY_MARGIN * p.h.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateProfile { at: t, gap: p.gap });
        }
        Ok(p)
    }

    /// Checks `H(0) = 0`, monotonicity, concavity and `H − tH' > 0` on `grid`.
    pub fn validate(&self, grid: &[f64], tol: f64) -> Result<()> {
        if self.h(0.0).abs() > tol {
            return Err(Error::InvalidInput(format!("H(0) = {} is not zero", self.h(0.0))));
        }
        for w in grid.windows(2) {
            if self.h(w[1]) < self.h(w[0]) - tol {
                return Err(Error::InvalidInput(format!("H decreases near {}", w[1])));
            }
        }
        for w in grid.windows(3) {
            let lambda = (w[2] - w[1]) / (w[2] - w[0]);
            if self.h(w[1]) < lambda * self.h(w[0]) + (1.0 - lambda) * self.h(w[2]) - tol {
                return Err(Error::InvalidInput(format!("H is not concave near {}", w[1])));
            }
        }
        for &t in grid {
            self.gap_checked(t)?;
        }
        Ok(())
    }
}

fn m_kind_label(m: &OrliczFunction) -> String {
    match m.kind() {
        crate::orlicz::OrliczKind::Power { coefficient, exponent } => format!("{coefficient}·t^{exponent}"),
        crate::orlicz::OrliczKind::PiecewiseAffineDual(_) => "piecewise".into(),
        crate::orlicz::OrliczKind::UserDefined => "user".into(),
    }
}

/// The density `f` of a profile and its primitive `F(t) = ∫_0^t f`.
#[derive(Debug, Clone)]
pub struct DensityF {
    profile: ConcaveProfile,
    tol: f64,
}

impl DensityF {
    /// `tol` is the absolute quadrature tolerance for `f`.
    pub fn new(profile: ConcaveProfile, tol: f64) -> Self {
        Self { profile, tol }
    }

    pub fn profile(&self) -> &ConcaveProfile {
        &self.profile
    }

    /// `f(t)` for `t ∈ (0, 1]`.
    pub fn f(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidInput(format!("f is defined on (0, 1], got {t}")));
        }
        let end = self.profile.gap_checked(1.0)?;
        self.profile.gap_checked(t)?;
        let integral = if t == 1.0 {
            0.0
        } else {
            // s = e^v turns the power-law blow-up at small s into an exponential.
            let mut failure: Option<Error> = None;
            let r = integrate(
                |v| {
                    let s = v.exp();
                    match self.profile.gap_checked(s) {
                        Ok(p) => p.ddh * s / p.gap.sqrt(),
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                t.ln(),
                0.0,
                self.tol,
                QUAD_REL_TOL,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            r?.value
        };
        let value = -0.5 * integral + end.h.sqrt() - end.gap.sqrt();
        Ok(value.max(0.0))
    }

    /// `F(t) = ∫_0^t f = t·f(t) + √(H(t) − tH'(t))`, with `F(0) = 0`.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let gap = self.profile.gap_checked(t)?.gap;
        Ok(t * self.f(t)? + gap.sqrt())
    }

    /// `t · √(−(H(t)/t)')`, which equals `√(H(t) − tH'(t))`.
    pub fn boundary_term(&self, t: f64) -> Result<f64> {
        Ok(self.profile.gap_checked(t)?.gap.sqrt())
    }

    /// `∫_t^1 f(s)² ds` by nested quadrature in `log s`.
    pub fn tail_square_integral(&self, t: f64) -> Result<f64> {
        if t == 1.0 {
            return Ok(0.0);
        }
        let mut failure: Option<Error> = None;
        let r = integrate(
            |v| {
                let s = v.exp();
                match self.f(s) {
                    Ok(fs) => fs * fs * s,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            t.ln(),
            0.0,
            self.tol.max(1e-12),
            QUAD_REL_TOL,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(r?.value)
    }
}

/// `f(t)` by adaptive quadrature to absolute tolerance `tol`.
pub fn f_from_profile(hp: &ConcaveProfile, t: f64, tol: f64) -> Result<f64> {
    DensityF::new(hp.clone(), tol).f(t)
}

/// `∫_0^t f` through the closed-form identity, with default quadrature
/// tolerance for the `f(t)` term.
pub fn cumulative_f(hp: &ConcaveProfile, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("F is defined on [0, 1], got {t}")));
    }
    DensityF::new(hp.clone(), QUAD_ABS_TOL).cumulative(t)
}

/// `a_l = n·(F(l/n) − F((l−1)/n))` for a profile.
pub fn weights_from_profile(hp: &ConcaveProfile, n: usize, tol: f64) -> Result<WeightSequence> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let density = DensityF::new(hp.clone(), tol);
    let nf = n as f64;
    let cumulative: Vec<f64> = (0..=n).map(|l| density.cumulative(l as f64 / nf)).collect::<Result<_>>()?;
    WeightSequence::new(cumulative.windows(2).map(|w| nf * (w[1] - w[0])).collect())
}

/// Weights whose permutation-averaged ℓ² norm is equivalent to `‖·‖_M`.
///
/// `M` must be strictly convex and strictly 2-concave, with `M*(1) = 1`.
pub fn weights_from_orlicz(m: &OrliczFunction, n: usize, tol: f64) -> Result<WeightSequence> {
    let dual = conjugate_dual(m, f64::INFINITY, ROOT_REL_TOL)?;
    let at_one = dual.eval(1.0)?;
    if (at_one - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { value: at_one });
    }
    let u1 = solve_increasing(|u| m.legendre_gap(u), 1.0, 1.0, ROOT_REL_TOL)?;
    let grid: Vec<f64> = (0..64).map(|k| (u1 * 1e-4 * (4e4f64).powf(k as f64 / 63.0)).powi(2)).collect();
    let report = two_concavity_check(m, &grid)?;
    if !report.is_strict(TWO_CONCAVITY_MARGIN) {
        return Err(Error::NotTwoConcave { margin: report.min_margin });
    }
    weights_from_profile(&ConcaveProfile::from_orlicz(m), n, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionPoint {
    pub t: f64,
    pub h: f64,
    pub reconstructed: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub points: Vec<ReconstructionPoint>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `H(t)` with `F(t)² + t ∫_t^1 f²` on every grid point.
pub fn reconstruct_h_check(hp: &ConcaveProfile, grid: &[f64], tol: f64) -> Result<ReconstructionReport> {
    let density = DensityF::new(hp.clone(), 1e-11);
    let mut points = Vec::with_capacity(grid.len());
    for &t in grid {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidInput(format!("grid point {t} is outside (0, 1]")));
        }
        let big_f = density.cumulative(t)?;
        let reconstructed = big_f * big_f + t * density.tail_square_integral(t)?;
        let h = hp.h(t);
        points.push(ReconstructionPoint { t, h, reconstructed, deviation: (h - reconstructed).abs() });
    }
    let max_deviation = points.iter().map(|p| p.deviation).fold(0.0, f64::max);
    Ok(ReconstructionReport { points, max_deviation, tolerance: tol, pass: max_deviation <= tol })
}

/// Serializable profile description, e.g. `{"profile": "power", "alpha": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum ProfileSpec {
    Power { alpha: f64 },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<ConcaveProfile> {
        match self {
            Self::Power { alpha } => ConcaveProfile::power(*alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> WeightSequence {
        WeightSequence::new(v.to_vec()).unwrap()
    }

    fn sqrt_profile_f(t: f64) -> f64 {
        2f64.sqrt() / 6.0 * (t.powf(-0.75) - 1.0) + 1.0 - 2f64.sqrt() / 2.0
    }

    #[test]
    fn weight_validation() {
        assert_eq!(WeightSequence::new(vec![1.0, 2.0]), Err(Error::NotDecreasing { index: 1 }));
        assert_eq!(WeightSequence::new(vec![1.0, 0.0]), Err(Error::NotPositive { index: 1 }));
        assert!(WeightSequence::new(vec![]).is_err());
        let r: std::result::Result<WeightSequence, _> = serde_json::from_str("[1.0, 3.0]");
        assert!(r.unwrap_err().to_string().contains("nonincreasing"));
    }

    #[test]
    fn knots_for_flat_pair() {
        let k = knots_from_weights(&w(&[1.0, 1.0])).unwrap();
        assert_eq!(k.knots().len(), 3);
        assert_eq!(k.knots()[0], (0.0, 0.0));
        assert_eq!(k.knots()[1].0, 0.5);
        assert!((k.knots()[1].1 - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(k.knots()[2], (1.0, 1.0));
        assert!(k.is_flagged_concave());
    }

    #[test]
    fn knots_for_single_weight() {
        let k = knots_from_weights(&w(&[2.5])).unwrap();
        assert_eq!(k.knots(), &[(0.0, 0.0), (1.0, 2.5)]);
    }

    #[test]
    fn knots_for_two_one() {
        let k = knots_from_weights(&w(&[2.0, 1.0])).unwrap();
        assert!((k.knots()[1].1 - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((k.knots()[2].1 - 1.5).abs() < 1e-15);
    }

    #[test]
    fn dual_from_knots() {
        let id = PiecewiseAffine::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let d = orlicz_from_knots(&id).unwrap();
        assert_eq!(d.eval(0.4).unwrap(), 0.4);
        let d = orlicz_from_knots(&knots_from_weights(&w(&[1.0, 1.0])).unwrap()).unwrap();
        assert!((d.eval(0.5f64.sqrt()).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.eval(1.0).unwrap() - 1.0).abs() < 1e-15);
        let flat = PiecewiseAffine::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(orlicz_from_knots(&flat), Err(Error::NotStrictlyIncreasing { .. })));
    }

    #[test]
    fn sqrt_prefix_examples() {
        let b = sqrt_prefix_b(4).unwrap();
        let expect = [2.0, 2.0 * (2f64.sqrt() - 1.0), 2.0 * (3f64.sqrt() - 2f64.sqrt()), 2.0 * (2.0 - 3f64.sqrt())];
        for (x, y) in b.as_slice().iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(sqrt_prefix_b(1).unwrap().as_slice(), &[1.0]);
        for n in [3usize, 7, 20] {
            let p = sqrt_prefix_b(n).unwrap().prefix_sums();
            for (k, s) in p.iter().enumerate() {
                assert!((s - ((n * k) as f64).sqrt()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn product_knot_examples() {
        let k = product_knots(&w(&[1.0]), &w(&[1.0])).unwrap();
        assert_eq!(k.knots(), &[(0.0, 0.0), (1.0, 1.0)]);
        let r2 = 2f64.sqrt();
        let k = product_knots(&w(&[1.0, 1.0]), &w(&[r2, 2.0 - r2])).unwrap();
        let expect = [r2 / 4.0, 2.0 * r2 / 4.0, (2.0 + r2) / 4.0, 1.0];
        for (l, e) in expect.iter().enumerate() {
            assert_eq!(k.knots()[l + 1].0, (l + 1) as f64 / 4.0);
            assert!((k.knots()[l + 1].1 - e).abs() < 1e-15);
        }
        assert_eq!(
            product_knots(&w(&[1.0]), &w(&[1.0, 0.5])),
            Err(Error::LengthMismatch { expected: 1, found: 2 })
        );
    }

    #[test]
    fn density_of_sqrt_profile_matches_closed_form() {
        let hp = ConcaveProfile::power(0.5).unwrap();
        for t in [1.0, 0.5, 0.1, 1e-3, 1e-6] {
            let f = f_from_profile(&hp, t, 1e-12).unwrap();
            let exact = sqrt_profile_f(t);
            assert!((f - exact).abs() < 1e-9 * exact.max(1.0), "t={t}: {f} vs {exact}");
        }
        assert!((f_from_profile(&hp, 1.0, 1e-9).unwrap() - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn affine_profile_is_degenerate() {
        let hp = ConcaveProfile::from_fns(|t| t, |_| 1.0, |_| 0.0);
        assert!(matches!(f_from_profile(&hp, 0.5, 1e-9), Err(Error::DegenerateProfile { .. })));
        assert!(matches!(cumulative_f(&hp, 0.5), Err(Error::DegenerateProfile { .. })));
    }

    #[test]
    fn cumulative_endpoints() {
        let hp = ConcaveProfile::power(0.7).unwrap();
        assert_eq!(cumulative_f(&hp, 0.0).unwrap(), 0.0);
        assert!((cumulative_f(&hp, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(cumulative_f(&hp, 1.5).is_err());
    }

    #[test]
    fn cumulative_at_half_for_sqrt_profile() {
        let hp = ConcaveProfile::power(0.5).unwrap();
        let exact = 0.5 * sqrt_profile_f(0.5) + 0.5f64.sqrt() * 0.5f64.powf(0.25);
        assert!((cumulative_f(&hp, 0.5).unwrap() - exact).abs() < 1e-12);
        assert!((exact - 0.821_400_222_544_115_7).abs() < 1e-15);
    }

    #[test]
    fn single_weight_is_sqrt_h_one() {
        let a = weights_from_profile(&ConcaveProfile::power(0.6).unwrap(), 1, 1e-10).unwrap();
        assert!((a.as_slice()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weights_require_normalized_and_two_concave() {
        let m = OrliczFunction::power(1.5).unwrap();
        assert!(matches!(weights_from_orlicz(&m, 4, 1e-10), Err(Error::NotNormalized { .. })));
        let m = crate::orlicz::normalize_dual_at_one(&OrliczFunction::power(2.0).unwrap()).unwrap();
        assert!(matches!(weights_from_orlicz(&m, 4, 1e-10), Err(Error::NotTwoConcave { .. })));
        let m = crate::orlicz::normalize_dual_at_one(&OrliczFunction::power(3.0).unwrap()).unwrap();
        assert!(matches!(weights_from_orlicz(&m, 4, 1e-10), Err(Error::NotTwoConcave { .. })));
    }

    #[test]
    fn profile_from_orlicz_matches_sqrt_profile() {
        // M = c·t^{4/3} normalized has M* = t^4, so H = √t.
        let m = crate::orlicz::normalize_dual_at_one(&OrliczFunction::power(4.0 / 3.0).unwrap()).unwrap();
        let hp = ConcaveProfile::from_orlicz(&m);
        let exact = ConcaveProfile::power(0.5).unwrap();
        for t in [1e-4, 0.01, 0.3, 0.8, 1.0] {
            let (p, q) = (hp.at(t), exact.at(t));
            assert!((p.h - q.h).abs() < 1e-9 * q.h);
            assert!((p.dh - q.dh).abs() < 1e-8 * q.dh);
            assert!((p.ddh - q.ddh).abs() < 1e-7 * q.ddh.abs());
            assert!((p.gap - q.gap).abs() < 1e-8 * q.gap);
        }
    }

    #[test]
    fn reconstruction_at_one_is_exact() {
        let hp = ConcaveProfile::power(0.5).unwrap();
        let r = reconstruct_h_check(&hp, &[1.0], 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn profile_validation() {
        let grid: Vec<f64> = (1..=32).map(|k| k as f64 / 32.0).collect();
        assert!(ConcaveProfile::power(0.8).unwrap().validate(&grid, 1e-12).is_ok());
        let convex = ConcaveProfile::from_fns(|t| t * t, |t| 2.0 * t, |_| 2.0);
        assert!(convex.validate(&grid, 1e-12).is_err());
        assert!(ConcaveProfile::power(1.5).is_err());
    }

    #[test]
    fn profile_spec_parses() {
        let s: ProfileSpec = serde_json::from_str(r#"{"profile": "power", "alpha": 0.5}"#).unwrap();
        assert_eq!(s, ProfileSpec::Power { alpha: 0.5 });
    }
}
