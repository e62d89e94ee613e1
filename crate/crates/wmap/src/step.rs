//! Piecewise-constant functions on [0,1] with exact integral algebra.
//!
//! A `StepFunction` is a sorted breakpoint vector `0 = b_0 < ... < b_k = 1`
//! and one value per gap. All integrals are exact sums of `value * width`;
//! values at the breakpoints themselves carry no mass. Sums and distances
//! are computed on the merged refinement of the two breakpoint sets, so
//! the algebra stays exact rather than sampled.

use crate::error::{Error, Result};
use crate::interval::IntervalUnion;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<F> {
    breakpoints: Vec<F>,
    values: Vec<F>,
}

impl<F: Real> StepFunction<F> {
    pub fn new(breakpoints: Vec<F>, values: Vec<F>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidStepFunction {
                reason: "need at least two breakpoints",
            });
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidStepFunction {
                reason: "values length must be breakpoints length - 1",
            });
        }
        if breakpoints[0] != F::zero() || *breakpoints.last().unwrap() != F::one() {
            return Err(Error::InvalidStepFunction {
                reason: "breakpoints must start at 0 and end at 1",
            });
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFunction {
                reason: "breakpoints must be strictly increasing",
            });
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStepFunction {
                reason: "entries must be finite",
            });
        }
        Ok(StepFunction {
            breakpoints,
            values,
        })
    }

    /// The constant function c.
    pub fn constant(c: F) -> Self {
        StepFunction {
            breakpoints: vec![F::zero(), F::one()],
            values: vec![c],
        }
    }

    /// Indicator of [lo, hi] (clipped to [0,1]).
    pub fn indicator(lo: F, hi: F) -> Result<Self> {
        let lo = lo.max(F::zero());
        let hi = hi.min(F::one());
        if lo >= hi {
            return Err(Error::InvalidStepFunction {
                reason: "indicator interval must have positive width",
            });
        }
        let mut bp = vec![F::zero()];
        let mut vals = Vec::new();
        if lo > F::zero() {
            bp.push(lo);
            vals.push(F::zero());
        }
        vals.push(F::one());
        if hi < F::one() {
            bp.push(hi);
            vals.push(F::zero());
        }
        bp.push(F::one());
        StepFunction::new(bp, vals)
    }

    pub fn breakpoints(&self) -> &[F] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// Index of the gap containing x (right-continuous; the last gap is
    /// closed at 1).
    fn gap_index(&self, x: F) -> usize {
        // partition_point: first breakpoint strictly greater than x
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        idx.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn eval(&self, x: F) -> Result<F> {
        if !x.is_finite() || x < F::zero() || x > F::one() {
            return Err(Error::DomainError {
                what: "x",
                value: x.to_f64().unwrap_or(f64::NAN),
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(self.values[self.gap_index(x)])
    }

    /// Exact integral over [0,1].
    pub fn integral(&self) -> F {
        let mut acc = F::zero();
        for (i, &v) in self.values.iter().enumerate() {
            acc = acc + v * (self.breakpoints[i + 1] - self.breakpoints[i]);
        }
        acc
    }

    /// Exact integral of |f| over [0,1].
    pub fn abs_integral(&self) -> F {
        let mut acc = F::zero();
        for (i, &v) in self.values.iter().enumerate() {
            acc = acc + v.abs() * (self.breakpoints[i + 1] - self.breakpoints[i]);
        }
        acc
    }

    pub fn scale(&self, k: F) -> Self {
        StepFunction {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|&v| v * k).collect(),
        }
    }

    /// Merged refinement of the two breakpoint sets (exact union).
    fn refine(&self, other: &Self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.breakpoints.len() + other.breakpoints.len());
        let (a, b) = (&self.breakpoints, &other.breakpoints);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) => {
                    if x < y {
                        i += 1;
                        x
                    } else if y < x {
                        j += 1;
                        y
                    } else {
                        i += 1;
                        j += 1;
                        x
                    }
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => break,
            };
            if out.last() != Some(&next) {
                out.push(next);
            }
        }
        out
    }

    fn zip_on_refinement(&self, other: &Self, f: impl Fn(F, F) -> F) -> Self {
        let bp = self.refine(other);
        let mut vals = Vec::with_capacity(bp.len() - 1);
        let mut i = 0usize;
        let mut j = 0usize;
        for w in bp.windows(2) {
            while i + 1 < self.values.len() && self.breakpoints[i + 1] <= w[0] {
                i += 1;
            }
            while j + 1 < other.values.len() && other.breakpoints[j + 1] <= w[0] {
                j += 1;
            }
            vals.push(f(self.values[i], other.values[j]));
        }
        StepFunction {
            breakpoints: bp,
            values: vals,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_on_refinement(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_on_refinement(other, |x, y| x - y)
    }

    /// Exact L1 distance on the merged refinement.
    pub fn l1_distance(&self, other: &Self) -> F {
        self.sub(other).abs_integral()
    }

    /// Exact integral of f over an interval union.
    pub fn integral_over(&self, set: &IntervalUnion<F>) -> F {
        let mut acc = F::zero();
        for &(lo, hi) in set.intervals() {
            let lo = lo.max(F::zero());
            let hi = hi.min(F::one());
            if hi <= lo {
                continue;
            }
            for (i, &v) in self.values.iter().enumerate() {
                let seg_lo = self.breakpoints[i].max(lo);
                let seg_hi = self.breakpoints[i + 1].min(hi);
                if seg_hi > seg_lo {
                    acc = acc + v * (seg_hi - seg_lo);
                }
            }
        }
        acc
    }

    /// Splits [0,1] into the closure of {f >= 0} and its complement
    /// {f < 0}, as interval unions.
    pub fn sign_split(&self) -> (IntervalUnion<F>, IntervalUnion<F>) {
        let mut plus = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            if v >= F::zero() {
                plus.push((self.breakpoints[i], self.breakpoints[i + 1]));
            }
        }
        let plus = IntervalUnion::new(plus);
        let minus = plus.complement();
        (plus, minus)
    }

    /// Merges adjacent gaps carrying exactly equal values.
    pub fn simplified(&self) -> Self {
        let mut bp = vec![self.breakpoints[0]];
        let mut vals: Vec<F> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            if vals.last() == Some(&v) {
                *bp.last_mut().unwrap() = self.breakpoints[i + 1];
            } else {
                vals.push(v);
                bp.push(self.breakpoints[i + 1]);
            }
        }
        StepFunction {
            breakpoints: bp,
            values: vals,
        }
    }

    /// Inverse-CDF sample of a probability density given as a step
    /// function; `u` in [0,1). Used to start orbits in equilibrium.
    pub fn sample_from_density(&self, u: F) -> F {
        let total = self.integral();
        let target = u * total;
        let mut acc = F::zero();
        for (i, &v) in self.values.iter().enumerate() {
            let w = self.breakpoints[i + 1] - self.breakpoints[i];
            let mass = v.max(F::zero()) * w;
            if acc + mass >= target && mass > F::zero() {
                let frac = (target - acc) / mass;
                return self.breakpoints[i] + frac.max(F::zero()).min(F::one()) * w;
            }
            acc = acc + mass;
        }
        *self.breakpoints.last().unwrap()
    }
}
