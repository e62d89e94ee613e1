//! Finite unions of closed intervals in [0,1].
//!
//! Endpoints carry no mass anywhere in this crate (all measures are
//! absolutely continuous step densities), so "closed" versus "half-open"
//! never affects an integral; intervals sharing an endpoint are merged.

use crate::scalar::{lit, Real};

/// A finite union of disjoint closed intervals, kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion<F> {
    ivs: Vec<(F, F)>,
}

/// Two endpoints closer than this are treated as touching when merging.
const TOUCH_TOL: f64 = 1e-14;

impl<F: Real> IntervalUnion<F> {
    /// Empty union.
    pub fn empty() -> Self {
        IntervalUnion { ivs: Vec::new() }
    }

    /// Single interval [lo, hi]; degenerate input yields the empty union.
    pub fn interval(lo: F, hi: F) -> Self {
        Self::new(vec![(lo, hi)])
    }

    /// Build from arbitrary (lo, hi) pairs: drops degenerate pieces, sorts,
    /// and merges overlapping or touching intervals.
    pub fn new(mut ivs: Vec<(F, F)>) -> Self {
        let touch = lit::<F>(TOUCH_TOL);
        ivs.retain(|&(lo, hi)| hi > lo);
        ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("non-finite endpoint"));
        let mut merged: Vec<(F, F)> = Vec::with_capacity(ivs.len());
        for (lo, hi) in ivs {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + touch => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => merged.push((lo, hi)),
            }
        }
        IntervalUnion { ivs: merged }
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    /// Total length of the union.
    pub fn length(&self) -> F {
        self.ivs
            .iter()
            .fold(F::zero(), |acc, &(lo, hi)| acc + (hi - lo))
    }

    pub fn contains(&self, x: F) -> bool {
        self.ivs.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// Component intervals in ascending order.
    pub fn intervals(&self) -> &[(F, F)] {
        &self.ivs
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a1, b1) in &self.ivs {
            for &(a2, b2) in &other.ivs {
                let lo = a1.max(a2);
                let hi = b1.min(b2);
                if hi > lo {
                    out.push((lo, hi));
                }
            }
        }
        Self::new(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.ivs.clone();
        all.extend_from_slice(&other.ivs);
        Self::new(all)
    }

    /// Complement within [0,1].
    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = F::zero();
        for &(lo, hi) in &self.ivs {
            if lo > cursor {
                out.push((cursor, lo));
            }
            cursor = cursor.max(hi);
        }
        if cursor < F::one() {
            out.push((cursor, F::one()));
        }
        Self::new(out)
    }
}
