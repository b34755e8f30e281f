use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone piecewise-affine function on `[0, inf)` given by its knots.
///
/// The first knot is always the origin. Between knots the function is the
/// affine interpolant; past the last knot it continues with the final slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffine {
    knots: Vec<(f64, f64)>,
    concave: bool,
}

impl PiecewiseAffine {
    /// Builds the function from knots `(t_k, v_k)`.
    ///
    /// Requires at least two knots, `(t_0, v_0) = (0, 0)`, strictly
    /// increasing abscissae and nondecreasing values.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidInput("a piecewise-affine function needs at least two knots".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::InvalidInput(format!("first knot must be the origin, got {:?}", knots[0])));
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !(t.is_finite() && v.is_finite()) {
                return Err(Error::InvalidInput(format!("knot {i} is not finite")));
            }
        }
        for i in 1..knots.len() {
            if knots[i].0 <= knots[i - 1].0 {
                return Err(Error::InvalidInput(format!("knot abscissae must increase strictly (index {i})")));
            }
            if knots[i].1 < knots[i - 1].1 {
                return Err(Error::NotStrictlyIncreasing { index: i });
            }
        }
        Ok(Self { knots, concave: false })
    }

    /// Same as [`new`](Self::new) but also certifies three-point concavity at
    /// every interior knot, to relative tolerance `tol`.
    pub fn new_concave(knots: Vec<(f64, f64)>, tol: f64) -> Result<Self> {
        let mut pa = Self::new(knots)?;
        if let Some(index) = pa.concavity_violation(tol) {
            return Err(Error::InvalidInput(format!("knots are not concave at index {index}")));
        }
        pa.concave = true;
        Ok(pa)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_flagged_concave(&self) -> bool {
        self.concave
    }

    pub fn last_knot(&self) -> (f64, f64) {
        *self.knots.last().expect("at least two knots")
    }

    /// Slopes of the affine pieces, in order.
    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// Evaluates at `|t|`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        let k = &self.knots;
        // first index with abscissa > t
        let idx = k.partition_point(|&(x, _)| x <= t);
        let (lo, hi) = if idx == 0 {
            (k[0], k[1])
        } else if idx >= k.len() {
            (k[k.len() - 2], k[k.len() - 1])
        } else {
            (k[idx - 1], k[idx])
        };
        if t == lo.0 {
            return lo.1;
        }
        lo.1 + (hi.1 - lo.1) * (t - lo.0) / (hi.0 - lo.0)
    }

    /// The inverse function, obtained by swapping knot coordinates.
    pub fn inverse(&self) -> Result<Self> {
        for i in 1..self.knots.len() {
            if self.knots[i].1 <= self.knots[i - 1].1 {
                return Err(Error::NotStrictlyIncreasing { index: i });
            }
        }
        let knots = self.knots.iter().map(|&(t, v)| (v, t)).collect();
        Ok(Self { knots, concave: false })
    }

    /// Index of the first interior knot that breaks three-point concavity,
    /// i.e. where the slope increases by more than `tol` relative.
    pub fn concavity_violation(&self, tol: f64) -> Option<usize> {
        let s = self.slopes();
        (1..s.len()).find(|&i| s[i] - s[i - 1] > tol * s[i - 1].abs().max(s[i].abs()).max(1e-300))
    }

    /// Index of the first interior knot where the slope decreases by more than
    /// `tol` relative.
    pub fn convexity_violation(&self, tol: f64) -> Option<usize> {
        let s = self.slopes();
        (1..s.len()).find(|&i| s[i - 1] - s[i] > tol * s[i - 1].abs().max(s[i].abs()).max(1e-300))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> PiecewiseAffine {
        PiecewiseAffine::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)]).unwrap()
    }

    #[test]
    fn interpolates_and_extends() {
        let p = tri();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval(2.0), 2.5);
        assert_eq!(p.eval(5.0), 4.0);
        assert_eq!(p.eval(-0.5), 1.0);
    }

    #[test]
    fn inverse_swaps_coordinates() {
        let inv = tri().inverse().unwrap();
        assert_eq!(inv.knots(), &[(0.0, 0.0), (2.0, 1.0), (3.0, 3.0)]);
        for t in [0.3, 1.0, 2.2, 3.0, 4.5] {
            assert!((inv.eval(tri().eval(t)) - t).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_piece_has_no_inverse() {
        let p = PiecewiseAffine::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        assert_eq!(p.inverse(), Err(Error::NotStrictlyIncreasing { index: 2 }));
    }

    #[test]
    fn decreasing_values_are_rejected() {
        let r = PiecewiseAffine::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]);
        assert_eq!(r, Err(Error::NotStrictlyIncreasing { index: 2 }));
    }

    #[test]
    fn concavity_flags() {
        assert!(tri().concavity_violation(1e-12).is_none());
        assert_eq!(tri().convexity_violation(1e-12), Some(1));
        assert!(PiecewiseAffine::new_concave(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)], 1e-12).is_err());
    }
}
