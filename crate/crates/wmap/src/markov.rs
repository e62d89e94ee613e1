//! Markov parameter solving and orbit validation.
//!
//! For integer `m >= 1` the amplitude `a` is Markov when the orbit of
//! `1/2 + r a` first hits the partition point `1/2 - 1/(2 s1)` at step m.
//! Equivalently `(s1 + 2 r s1 a)^m = 1 / (4 r^2 s2^2 a^2)`; the root is
//! found by bisecting the monotone log residual
//!
//! ```text
//! g(a) = m ln(s1 + 2 r s1 a) + 2 ln(2 r s2 a)
//! ```
//!
//! which avoids the overflow the raw polynomial form hits at large m.

use crate::error::{Error, Result};
use crate::map::MapParams;
use crate::scalar::{half, lit, two, Real};

/// Forward-orbit tolerance: one multiplication by the branch-2 slope per
/// step amplifies rounding by that slope, so the budget scales like
/// `(s1 (1 + 2 r a))^m * 1e-13` at f64 precision. A flat tolerance would
/// spuriously reject large m. For other scalar types the same headroom is
/// kept relative to the machine epsilon.
pub fn orbit_tolerance<F: Real>(map: &MapParams<F>, m: usize) -> F {
    let base = map.s1() * (F::one() + two::<F>() * map.r() * map.a());
    let headroom = lit::<F>(1e-13 / f64::EPSILON);
    base.powi(m as i32) * headroom * F::epsilon()
}

/// Beyond this m, 64-bit forward validation is too loose to certify the
/// orbit; instances are still built but carry a precision warning.
pub const PRECISION_LIMIT_M: usize = 30;

fn log_residual<F: Real>(s1: F, s2: F, r: F, m: usize, a: F) -> F {
    F::from_usize(m).unwrap() * (s1 + two::<F>() * r * s1 * a).ln()
        + two::<F>() * (two::<F>() * r * s2 * a).ln()
}

/// Solves the Markov condition for `a` given the return index m.
///
/// The residual is strictly increasing on `(0, 1/(2 r s2))`, negative near
/// 0 and positive at the right endpoint, so bisection converges to the
/// unique root; iteration stops when the bracket is below 1e-15 relative
/// width or can no longer shrink.
pub fn solve_markov_a<F: Real>(s1: F, s2: F, r: F, m: usize) -> Result<F> {
    // Validate the slope condition and positivity through the map
    // constructor at a = 0.
    MapParams::new(s1, s2, r, F::zero())?;
    if m == 0 {
        return Err(Error::DomainError {
            what: "m",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }

    let limit = F::one() / (two::<F>() * r * s2);
    let mut hi = limit * lit(1.0 - 1e-12);
    if log_residual(s1, s2, r, m, hi) <= F::zero() {
        return Err(Error::NoRoot);
    }
    let mut lo = hi;
    loop {
        lo = lo * half::<F>();
        if log_residual(s1, s2, r, m, lo) < F::zero() {
            break;
        }
        if lo < lit(1e-280) {
            return Err(Error::NoRoot);
        }
    }

    let rel = lit::<F>(1e-15);
    for _ in 0..200 {
        let mid = half::<F>() * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket exhausted at machine precision
        }
        if log_residual(s1, s2, r, m, mid) < F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel * mid {
            break;
        }
    }
    Ok(half::<F>() * (lo + hi))
}

/// Real-valued return index from the amplitude:
/// `m(a) = -2 ln(2 s2 r a) / ln(s1 + 2 s1 r a)`.
pub fn m_from_a<F: Real>(s1: F, s2: F, r: F, a: F) -> Result<F> {
    MapParams::new(s1, s2, r, F::zero())?;
    let limit = F::one() / (two::<F>() * r * s2);
    if !a.is_finite() || a <= F::zero() || a >= limit {
        return Err(Error::DomainError {
            what: "a",
            value: a.to_f64().unwrap_or(f64::NAN),
            lo: 0.0,
            hi: limit.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(-two::<F>() * (two::<F>() * s2 * r * a).ln() / (s1 + two::<F>() * s1 * r * a).ln())
}

/// A validated Markov case: the map, the return index m, and the orbit
/// points `p_i = W^i(1/2 + r a)` for i = 0..m defining the nested
/// intervals `I_0 = [0, p_0]`, `I_i = [p_i, p_0]`.
///
/// Validation runs on the forward orbit; the stored points are rebuilt
/// from the exact endpoint `p_m = 1/2 - 1/(2 s1)` through the contracting
/// branch-2 inverse, which keeps downstream interval identities at machine
/// precision instead of inheriting the slope^m forward amplification.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovInstance<F> {
    map: MapParams<F>,
    m: usize,
    points: Vec<F>,
    precision_warning: bool,
}

impl<F: Real> MarkovInstance<F> {
    /// Validates the forward orbit and builds the instance.
    pub fn build(map: MapParams<F>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::DomainError {
                what: "m",
                value: 0.0,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        let tol = orbit_tolerance(&map, m);
        let target = map.left_break();
        let p0 = map.turning_image();
        let forward = map.orbit(p0, m)?;

        for (i, &p) in forward.iter().enumerate().take(m).skip(1) {
            if (p - target).abs() <= tol {
                return Err(Error::NotMarkov {
                    reason: format!(
                        "orbit hits the partition point at step {i}, before the requested m = {m}"
                    ),
                });
            }
            if p <= target || p >= half() {
                return Err(Error::NotMarkov {
                    reason: format!("orbit point p_{i} = {p} leaves [1/2 - 1/(2 s1), 1/2)"),
                });
            }
        }
        for (i, pair) in forward.windows(2).enumerate().skip(1) {
            if pair[0] <= pair[1] {
                return Err(Error::NotMarkov {
                    reason: format!("orbit not strictly decreasing at step {i}"),
                });
            }
        }
        let closure = (forward[m] - target).abs();
        if closure > tol {
            return Err(Error::NotMarkov {
                reason: format!(
                    "orbit misses the partition point: |p_m - (1/2 - 1/(2 s1))| = {:e} > {:e}",
                    closure.to_f64().unwrap_or(f64::NAN),
                    tol.to_f64().unwrap_or(f64::NAN)
                ),
            });
        }

        // Stabilized points: p_m exact, then the contracting inverse of
        // branch 2 back to p_1.
        let mut points = vec![F::zero(); m + 1];
        points[m] = target;
        let beta = map.middle_slope();
        for i in (1..m).rev() {
            points[i] = points[i + 1] / beta + target;
        }
        points[0] = p0;

        for i in 0..=m {
            if (points[i] - forward[i]).abs() > tol {
                return Err(Error::NotMarkov {
                    reason: format!("stabilized point p_{i} disagrees with the forward orbit"),
                });
            }
        }

        Ok(MarkovInstance {
            map,
            m,
            points,
            precision_warning: m > PRECISION_LIMIT_M,
        })
    }

    /// Solves for the Markov amplitude and builds the instance in one go.
    pub fn solve(s1: F, s2: F, r: F, m: usize) -> Result<Self> {
        let a = solve_markov_a(s1, s2, r, m)?;
        let map = MapParams::new(s1, s2, r, a)?;
        Self::build(map, m)
    }

    pub fn map(&self) -> &MapParams<F> {
        &self.map
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Orbit points `p_0 > p_1 > ... > p_m` (note `p_0 = 1/2 + r a` is the
    /// largest; the rest decrease toward `1/2 - 1/(2 s1)`).
    pub fn points(&self) -> &[F] {
        &self.points
    }

    pub fn precision_warning(&self) -> bool {
        self.precision_warning
    }

    /// `|I_i|` for i = 0..m: `|I_0| = p_0`, `|I_i| = p_0 - p_i`.
    pub fn interval_lengths(&self) -> Vec<F> {
        let p0 = self.points[0];
        let mut out = Vec::with_capacity(self.m + 1);
        out.push(p0);
        for i in 1..=self.m {
            out.push(p0 - self.points[i]);
        }
        out
    }

    /// Breakpoints `0 < p_m < ... < p_1 < p_0 < 1` of the coarsest
    /// partition on which the basis functions are constant.
    pub fn elementary_partition(&self) -> Vec<F> {
        let mut bp = Vec::with_capacity(self.m + 3);
        bp.push(F::zero());
        for i in (1..=self.m).rev() {
            bp.push(self.points[i]);
        }
        bp.push(self.points[0]);
        bp.push(F::one());
        bp
    }
}

/// Compares two independent evaluations of `W^{m+1}(1/2)`: the forward
/// orbit against the closed form
///
/// ```text
/// -a^2 B^{m-1} [r (4 r s1 s2 - 2 r s1 - 2 r s2) + 4 r^3 s1 s2 a] / (B - 1)
///   + (s1 - 1 + 2 r s1 a - 2 r a) / (2 (B - 1)),     B = s1 + 2 r s1 a.
/// ```
///
/// Returns the absolute discrepancy. For a Markov instance both equal
/// `1/2 - 1/(2 s1)` up to the orbit tolerance.
pub fn closed_form_orbit_check<F: Real>(instance: &MarkovInstance<F>) -> F {
    let map = instance.map();
    let (s1, s2, r, a) = (map.s1(), map.s2(), map.r(), map.a());
    let m = instance.m();
    let beta = s1 + two::<F>() * r * s1 * a;
    let four = lit::<F>(4.0);
    let bracket = r * (four * r * s1 * s2 - two::<F>() * r * s1 - two::<F>() * r * s2)
        + four * r * r * r * s1 * s2 * a;
    let closed = -(a * a) * beta.powi(m as i32 - 1) * bracket / (beta - F::one())
        + (s1 - F::one() + two::<F>() * r * s1 * a - two::<F>() * r * a)
            / (two::<F>() * (beta - F::one()));
    let forward = *map
        .orbit(half(), m + 1)
        .expect("1/2 is in the domain")
        .last()
        .unwrap();
    (closed - forward).abs()
}
