//! The four-branch W-shaped map family and its inverse branches.
//!
//! With slopes `s1, s2 > 1` satisfying `1/s1 + 1/s2 = 1`, perturbation
//! scale `r > 0` and amplitude `a >= 0`, the map on [0,1] is
//!
//! ```text
//! x in [0, 1/2 - 1/(2 s1))        ->  1 - 2 s2 x                      (branch 1)
//! x in [1/2 - 1/(2 s1), 1/2)      ->  (s1 + 2 r s1 a)(x - 1/2 + 1/(2 s1))   (branch 2)
//! x in [1/2, 1/2 + 1/(2 s2))      ->  (s2 + 2 r s2 a)(1/2 + 1/(2 s2) - x)   (branch 3)
//! x in [1/2 + 1/(2 s2), 1]        ->  2 s1 (x - 1) + 1                (branch 4)
//! ```
//!
//! At `a = 0` the turning point 1/2 is fixed; for `a > 0` it maps to
//! `1/2 + r a`. Branch domains are half-open with the last branch closed
//! at 1, so evaluation is total on [0,1].

use crate::error::{Error, Result};
use crate::interval::IntervalUnion;
use crate::scalar::{half, lit, two, Real};

/// Tolerance on `|1/s1 + 1/s2 - 1|`; exact equality is rarely representable.
pub const SLOPE_TOL: f64 = 1e-12;

/// One affine branch `x -> slope * x + intercept` on `[domain_lo, domain_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch<F> {
    pub index: u8,
    pub slope: F,
    pub intercept: F,
    pub domain_lo: F,
    pub domain_hi: F,
}

impl<F: Real> Branch<F> {
    #[inline]
    pub fn value(&self, x: F) -> F {
        self.slope * x + self.intercept
    }

    /// Exact affine inversion (no domain check).
    #[inline]
    pub fn invert(&self, y: F) -> F {
        (y - self.intercept) / self.slope
    }

    /// Range of the branch over the closure of its domain, as (lo, hi).
    pub fn range(&self) -> (F, F) {
        let a = self.value(self.domain_lo);
        let b = self.value(self.domain_hi);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// A validated member of the map family, with precomputed branches.
#[derive(Debug, Clone, PartialEq)]
pub struct MapParams<F> {
    s1: F,
    s2: F,
    r: F,
    a: F,
    branches: [Branch<F>; 4],
}

impl<F: Real> MapParams<F> {
    /// Validates the parameters and precomputes the four affine branches.
    pub fn new(s1: F, s2: F, r: F, a: F) -> Result<Self> {
        let one = F::one();
        if !s1.is_finite() || s1 <= one {
            return Err(Error::DomainError {
                what: "s1",
                value: s1.to_f64().unwrap_or(f64::NAN),
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        if !s2.is_finite() || s2 <= one {
            return Err(Error::DomainError {
                what: "s2",
                value: s2.to_f64().unwrap_or(f64::NAN),
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        if !r.is_finite() || r <= F::zero() {
            return Err(Error::DomainError {
                what: "r",
                value: r.to_f64().unwrap_or(f64::NAN),
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if !a.is_finite() || a < F::zero() {
            return Err(Error::DomainError {
                what: "a",
                value: a.to_f64().unwrap_or(f64::NAN),
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let deviation = (one / s1 + one / s2 - one).abs();
        if deviation > lit(SLOPE_TOL) {
            return Err(Error::SlopeCondition {
                deviation: deviation.to_f64().unwrap_or(f64::NAN),
                tolerance: SLOPE_TOL,
            });
        }
        let limit = one / (two::<F>() * r * s2);
        if a >= limit {
            return Err(Error::AmplitudeTooLarge {
                a: a.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }

        let x1 = half::<F>() - one / (two::<F>() * s1);
        let x3 = half::<F>() + one / (two::<F>() * s2);
        let b2 = s1 + two::<F>() * r * s1 * a;
        let b3 = s2 + two::<F>() * r * s2 * a;
        let branches = [
            Branch {
                index: 1,
                slope: -(two::<F>() * s2),
                intercept: one,
                domain_lo: F::zero(),
                domain_hi: x1,
            },
            Branch {
                index: 2,
                slope: b2,
                intercept: -(b2 * x1),
                domain_lo: x1,
                domain_hi: half(),
            },
            Branch {
                index: 3,
                slope: -b3,
                intercept: b3 * x3,
                domain_lo: half(),
                domain_hi: x3,
            },
            Branch {
                index: 4,
                slope: two::<F>() * s1,
                intercept: one - two::<F>() * s1,
                domain_lo: x3,
                domain_hi: one,
            },
        ];
        Ok(MapParams {
            s1,
            s2,
            r,
            a,
            branches,
        })
    }

    pub fn s1(&self) -> F {
        self.s1
    }
    pub fn s2(&self) -> F {
        self.s2
    }
    pub fn r(&self) -> F {
        self.r
    }
    pub fn a(&self) -> F {
        self.a
    }

    pub fn branches(&self) -> &[Branch<F>; 4] {
        &self.branches
    }

    /// Left inner partition point `1/2 - 1/(2 s1)` (equals `1/(2 s2)`).
    pub fn left_break(&self) -> F {
        self.branches[1].domain_lo
    }

    /// Right inner partition point `1/2 + 1/(2 s2)`.
    pub fn right_break(&self) -> F {
        self.branches[3].domain_lo
    }

    /// Image of the turning point, `1/2 + r a`.
    pub fn turning_image(&self) -> F {
        half::<F>() + self.r * self.a
    }

    /// Branch slope magnitude on branch 2, `s1 (1 + 2 r a)`.
    pub fn middle_slope(&self) -> F {
        self.branches[1].slope
    }

    /// Index (1..=4) of the branch whose domain contains x.
    #[inline]
    pub fn branch_index(&self, x: F) -> u8 {
        if x < self.branches[1].domain_lo {
            1
        } else if x < half() {
            2
        } else if x < self.branches[3].domain_lo {
            3
        } else {
            4
        }
    }

    /// Evaluates the map at x in [0,1].
    #[inline]
    pub fn eval(&self, x: F) -> Result<F> {
        if !x.is_finite() || x < F::zero() || x > F::one() {
            return Err(Error::DomainError {
                what: "x",
                value: x.to_f64().unwrap_or(f64::NAN),
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(self.eval_in_domain(x))
    }

    /// Evaluation without the domain check, for hot loops over known-valid
    /// orbits. The image is clamped to [0,1] to keep rounding at the outer
    /// endpoints from escaping the interval.
    #[inline]
    pub fn eval_in_domain(&self, x: F) -> F {
        let b = &self.branches[(self.branch_index(x) - 1) as usize];
        b.value(x).max(F::zero()).min(F::one())
    }

    /// Inverse of branch `i` at y, checked against the branch range.
    pub fn inverse_branch(&self, i: u8, y: F) -> Result<F> {
        if !(1..=4).contains(&i) {
            return Err(Error::DomainError {
                what: "branch index",
                value: f64::from(i),
                lo: 1.0,
                hi: 4.0,
            });
        }
        let b = &self.branches[(i - 1) as usize];
        let (lo, hi) = self.branch_range(i);
        if !y.is_finite() || y < lo || y > hi {
            return Err(Error::RangeError {
                branch: i,
                y: y.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(b.invert(y))
    }

    /// Range of branch i: [0,1] for the outer branches, [0, 1/2 + r a]
    /// for the middle ones.
    pub fn branch_range(&self, i: u8) -> (F, F) {
        match i {
            1 | 4 => (F::zero(), F::one()),
            _ => (F::zero(), self.turning_image()),
        }
    }

    /// Forward orbit `[x0, W(x0), ..., W^n(x0)]`.
    pub fn orbit(&self, x0: F, n: usize) -> Result<Vec<F>> {
        if !x0.is_finite() || x0 < F::zero() || x0 > F::one() {
            return Err(Error::DomainError {
                what: "x0",
                value: x0.to_f64().unwrap_or(f64::NAN),
                lo: 0.0,
                hi: 1.0,
            });
        }
        let mut out = Vec::with_capacity(n + 1);
        out.push(x0);
        let mut x = x0;
        for _ in 0..n {
            x = self.eval_in_domain(x);
            out.push(x);
        }
        Ok(out)
    }

    /// Exact preimage of an interval union: pulls each component back
    /// through every branch whose range meets it.
    pub fn preimage(&self, set: &IntervalUnion<F>) -> IntervalUnion<F> {
        let mut pieces = Vec::new();
        for b in &self.branches {
            let (ry_lo, ry_hi) = {
                let p = b.value(b.domain_lo);
                let q = b.value(b.domain_hi);
                if p <= q {
                    (p, q)
                } else {
                    (q, p)
                }
            };
            for &(lo, hi) in set.intervals() {
                let ylo = lo.max(ry_lo);
                let yhi = hi.min(ry_hi);
                if yhi > ylo {
                    let xa = b.invert(ylo);
                    let xb = b.invert(yhi);
                    let (mut xlo, mut xhi) = if xa <= xb { (xa, xb) } else { (xb, xa) };
                    xlo = xlo.max(b.domain_lo);
                    xhi = xhi.min(b.domain_hi);
                    if xhi > xlo {
                        pieces.push((xlo, xhi));
                    }
                }
            }
        }
        IntervalUnion::new(pieces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Map = MapParams<f64>;

    const A5: f64 = 0.14789903570478735;

    #[test]
    fn accepts_the_reference_cases() {
        assert!(Map::new(2.0, 2.0, 0.25, A5).is_ok());
        assert!(Map::new(2.0, 2.0, 0.25, 0.0).is_ok());
    }

    #[test]
    fn rejects_bad_slopes_and_amplitudes() {
        match Map::new(3.0, 2.0, 0.25, 0.01) {
            Err(Error::SlopeCondition { .. }) => {}
            other => panic!("expected SlopeCondition, got {other:?}"),
        }
        // limit is 1/(2*0.25*2) = 1
        match Map::new(2.0, 2.0, 0.25, 1.0) {
            Err(Error::AmplitudeTooLarge { .. }) => {}
            other => panic!("expected AmplitudeTooLarge, got {other:?}"),
        }
        assert!(Map::new(1.5, 3.0, 0.25, 0.1).is_ok());
    }

    #[test]
    fn branch_endpoints_match_the_display() {
        let w = Map::new(2.0, 2.0, 0.25, A5).unwrap();
        assert_eq!(w.left_break(), 0.25);
        assert_eq!(w.right_break(), 0.75);
        let b = w.branches();
        assert_eq!(b[0].domain_lo, 0.0);
        assert_eq!(b[3].domain_hi, 1.0);
    }

    #[test]
    fn eval_matches_branch_formulas() {
        let w = Map::new(2.0, 2.0, 0.25, A5).unwrap();
        assert_eq!(w.eval(0.1).unwrap(), 1.0 - 4.0 * 0.1);
        assert_eq!(w.eval(0.0).unwrap(), 1.0);
        assert_eq!(w.eval(1.0).unwrap(), 1.0);
        let p0 = 0.5 + 0.25 * A5;
        assert!((w.eval(0.5).unwrap() - p0).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_outside_domain() {
        let w = Map::new(2.0, 2.0, 0.25, 0.0).unwrap();
        assert!(matches!(w.eval(-0.1), Err(Error::DomainError { .. })));
        assert!(matches!(w.eval(1.1), Err(Error::DomainError { .. })));
    }

    #[test]
    fn every_branch_expands() {
        for (s1, s2, a) in [(2.0, 2.0, A5), (3.0, 1.5, 0.05), (1.5, 3.0, 0.05)] {
            let w = Map::new(s1, s2, 0.25, a).unwrap();
            for b in w.branches() {
                assert!(b.slope.abs() >= s1.min(s2), "branch {} too flat", b.index);
            }
        }
    }

    #[test]
    fn continuity_at_the_junctions() {
        for (s1, s2, a) in [(2.0, 2.0, A5), (3.0, 1.5, 0.05), (1.5, 3.0, 0.05)] {
            let w = Map::new(s1, s2, 0.25, a).unwrap();
            let b = w.branches();
            for k in 0..3 {
                let x = b[k].domain_hi;
                let gap = (b[k].value(x) - b[k + 1].value(x)).abs();
                assert!(gap <= 1e-14, "junction {k} gap {gap:e} at s=({s1},{s2})");
            }
        }
    }

    #[test]
    fn middle_branches_meet_at_the_turning_image() {
        let w = Map::new(2.0, 2.0, 0.25, A5).unwrap();
        let p0 = w.turning_image();
        let b = w.branches();
        assert!((b[1].value(0.5) - p0).abs() <= 1e-15);
        assert!((b[2].value(0.5) - p0).abs() <= 1e-15);
    }

    #[test]
    fn image_stays_in_unit_interval() {
        let w = Map::new(2.0, 2.0, 0.25, A5).unwrap();
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            let y = w.eval(x).unwrap();
            assert!((0.0..=1.0).contains(&y), "eval({x}) = {y}");
        }
    }

    #[test]
    fn inverse_branch_examples() {
        let w = Map::new(2.0, 2.0, 0.25, A5).unwrap();
        assert_eq!(w.inverse_branch(1, 0.0).unwrap(), 0.25);
        assert_eq!(w.inverse_branch(4, 1.0).unwrap(), 1.0);
        assert!(matches!(
            w.inverse_branch(2, 0.9),
            Err(Error::RangeError { branch: 2, .. })
        ));
    }

    #[test]
    fn orbit_of_fixed_turning_point_is_constant() {
        let w = Map::new(2.0, 2.0, 0.25, 0.0).unwrap();
        let orb = w.orbit(0.5, 50).unwrap();
        assert!(orb.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn orbit_length_and_zeroth_entry() {
        let w = Map::new(2.0, 2.0, 0.25, A5).unwrap();
        let orb = w.orbit(0.3, 0).unwrap();
        assert_eq!(orb, vec![0.3]);
        assert_eq!(w.orbit(0.3, 7).unwrap().len(), 8);
    }

    #[test]
    fn preimage_of_left_half_under_unperturbed_map() {
        let w = Map::new(2.0, 2.0, 0.25, 0.0).unwrap();
        let pre = w.preimage(&IntervalUnion::interval(0.0, 0.5));
        assert_eq!(pre.intervals(), &[(0.125, 0.875)]);
    }

    mod roundtrip {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn inverse_branch_inverts_eval(u in 0.0f64..1.0) {
                let w = Map::new(2.0, 2.0, 0.25, A5).unwrap();
                // forward then back on each branch domain
                for b in w.branches() {
                    let x = b.domain_lo + u * (b.domain_hi - b.domain_lo);
                    let y = b.value(x);
                    let back = w.inverse_branch(b.index, y.clamp(0.0, 1.0)).unwrap();
                    prop_assert!((back - x).abs() <= 1e-14);
                }
                // back then forward through the second branch
                let p0 = w.turning_image();
                let y = u * p0;
                let x = w.inverse_branch(2, y).unwrap();
                prop_assert!((w.branches()[1].value(x) - y).abs() <= 1e-14);
            }
        }
    }
}
