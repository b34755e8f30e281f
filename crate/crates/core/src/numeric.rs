//! Scalar root finding and adaptive Gauss-Kronrod quadrature.
//!
//! Both routines are deliberately small: every caller in this crate works
//! with monotone one-dimensional problems, and every integrand is smooth
//! once the caller has moved singular endpoints out of the way.

use crate::error::{Error, Result};

/// Relative tolerance used for every root solve unless a caller overrides it.
pub const ROOT_REL_TOL: f64 = 1e-10;

/// Absolute tolerance used for quadrature unless a caller overrides it.
pub const QUAD_ABS_TOL: f64 = 1e-9;

/// Relative tolerance floor for quadrature; lets large integrals terminate.
pub const QUAD_REL_TOL: f64 = 1e-12;

const MAX_ROOT_ITER: usize = 300;

/// Brent's method on a bracket `[lo, hi]` with `f(lo)` and `f(hi)` of
/// opposite sign (zero at either end is accepted).
///
/// Infinite function values are allowed; the step then falls back to
/// bisection. Terminates when the bracket is narrower than
/// `rel_tol * |x|` (with a tiny absolute floor).
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::NotBracketed { lo, hi });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NotBracketed { lo, hi });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ROOT_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * rel_tol * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        let finite = fa.is_finite() && fb.is_finite() && fc.is_finite();
        if finite && e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if p.is_finite() && q.is_finite() && 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::NotBracketed { lo, hi });
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ROOT_ITER })
}

/// Solves `g(x) = target` for a nondecreasing `g` on `(0, inf)`.
///
/// Starts from `guess` and doubles / halves until the target is bracketed,
/// then refines with [`brent`].
pub fn solve_increasing<G: FnMut(f64) -> f64>(
    mut g: G,
    target: f64,
    guess: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut hi = if guess > 0.0 && guess.is_finite() { guess } else { 1.0 };
    let mut lo = hi;
    let mut expansions = 0;
    while g(hi) < target {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 2100 || !hi.is_finite() {
            return Err(Error::NotBracketed { lo, hi });
        }
    }
    if lo == hi {
        lo = hi * 0.5;
        expansions = 0;
        while g(lo) > target {
            hi = lo;
            lo *= 0.5;
            expansions += 1;
            if expansions > 2100 || lo == 0.0 {
                return Ok(0.0);
            }
        }
    }
    brent(|x| g(x) - target, lo, hi, rel_tol)
}

// 21-point Kronrod extension of the 10-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_005_814_470,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive 21-point Gauss-Kronrod quadrature on a finite interval.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)` or the interval budget
/// is exhausted. The integrand is never evaluated at the endpoints.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("quadrature bounds [{a}, {b}] must be finite")));
    }
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk21(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if !total.is_finite() {
            return Err(Error::InvalidInput("integrand is not finite".into()));
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::NoConvergence { iterations: MAX_INTERVALS });
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let left = gk21(&mut f, lo, mid);
        let right = gk21(&mut f, mid, hi);
        parts.push((lo, mid, left.0, left.1));
        parts.push((mid, hi, right.0, right.1));
        // Re-sum from scratch so the result does not depend on update order.
        total = parts.iter().map(|p| p.2).sum();
        err = parts.iter().map(|p| p.3).sum();
    }
    if !total.is_finite() {
        return Err(Error::InvalidInput("integrand is not finite".into()));
    }
    Ok(QuadResult { value: total, error: err, intervals: parts.len() })
}
