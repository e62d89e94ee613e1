//! Metastability diagnostics: exact escape rates of almost-invariant sets,
//! seeded residence-time simulation, and correlation decay.
//!
//! Escape rates are computed exactly from the step-function density and
//! affine preimages; simulation only corroborates them, so Monte-Carlo
//! noise never enters an acceptance bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::IntervalUnion;
use crate::map::MapParams;
use crate::scalar::{lit, Real};
use crate::step::StepFunction;

/// Escape-rate report for one set: `escape_rate = -ln(stay_probability)`
/// with `stay_probability = mu(A intersect W^{-1} A) / mu(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeReport<F> {
    pub set: IntervalUnion<F>,
    pub mu_of_set: F,
    pub stay_probability: F,
    pub escape_rate: F,
    /// `-ln lambda` when the caller supplies the second eigenvalue.
    pub bound: Option<F>,
}

impl<F: Real> EscapeReport<F> {
    pub fn with_bound(mut self, lambda: F) -> Self {
        self.bound = Some(-lambda.ln());
        self
    }
}

/// Exact escape rate of `set` under the invariant density: the set is
/// pulled back through each inverse branch, intersected with itself, and
/// the density integrated over the result. Quadrature-free.
pub fn escape_rate<F: Real>(
    map: &MapParams<F>,
    density: &StepFunction<F>,
    set: &IntervalUnion<F>,
) -> Result<EscapeReport<F>> {
    let mu = density.integral_over(set);
    if mu <= F::zero() {
        return Err(Error::EmptySet);
    }
    let stay_set = set.intersect(&map.preimage(set));
    let mu_stay = density.integral_over(&stay_set);
    let stay = (mu_stay / mu).min(F::one());
    Ok(EscapeReport {
        set: set.clone(),
        mu_of_set: mu,
        stay_probability: stay,
        escape_rate: -stay.ln(),
        bound: None,
    })
}

/// Trajectory statistics over a two-set partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidenceStats {
    pub seed: u64,
    pub x0: f64,
    pub steps: u64,
    /// Mean length of maximal runs inside each set (the trailing partial
    /// run counts as a run; 0 when the set is never visited).
    pub mean_residence_plus: f64,
    pub mean_residence_minus: f64,
    pub switch_count: u64,
    /// Fraction of steps spent in the plus set.
    pub fraction_plus: f64,
}

/// Iterates the map from `x0` (or a seeded uniform draw) and counts
/// maximal runs in each part of the partition. Deterministic given
/// (x0 or seed, steps).
pub fn simulate_residence<F: Real>(
    map: &MapParams<F>,
    plus: &IntervalUnion<F>,
    x0: Option<F>,
    steps: u64,
    seed: u64,
) -> Result<ResidenceStats> {
    if steps < 1 {
        return Err(Error::DomainError {
            what: "steps",
            value: steps as f64,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = match x0 {
        Some(x) => {
            if !x.is_finite() || x < F::zero() || x > F::one() {
                return Err(Error::DomainError {
                    what: "x0",
                    value: x.to_f64().unwrap_or(f64::NAN),
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            x
        }
        None => lit(rng.gen::<f64>()),
    };

    let mut x = start;
    let mut in_plus = plus.contains(x);
    let mut run_len = 1u64;
    let mut switches = 0u64;
    let mut total_plus = 0u64;
    let mut runs_plus = (0u64, 0u64); // (total length, count)
    let mut runs_minus = (0u64, 0u64);
    if in_plus {
        total_plus += 1;
    }
    for _ in 0..steps {
        x = map.eval_in_domain(x);
        let now = plus.contains(x);
        if now {
            total_plus += 1;
        }
        if now == in_plus {
            run_len += 1;
        } else {
            if in_plus {
                runs_plus.0 += run_len;
                runs_plus.1 += 1;
            } else {
                runs_minus.0 += run_len;
                runs_minus.1 += 1;
            }
            switches += 1;
            run_len = 1;
            in_plus = now;
        }
    }
    if in_plus {
        runs_plus.0 += run_len;
        runs_plus.1 += 1;
    } else {
        runs_minus.0 += run_len;
        runs_minus.1 += 1;
    }

    let mean = |(total, count): (u64, u64)| {
        if count == 0 {
            0.0
        } else {
            total as f64 / count as f64
        }
    };
    Ok(ResidenceStats {
        seed,
        x0: start.to_f64().unwrap_or(f64::NAN),
        steps,
        mean_residence_plus: mean(runs_plus),
        mean_residence_minus: mean(runs_minus),
        switch_count: switches,
        fraction_plus: total_plus as f64 / (steps + 1) as f64,
    })
}

/// Orbit length used for correlation estimates.
pub const CORRELATION_ORBIT_LEN: usize = 10_000_000;
const BURN_IN: usize = 1_000;
/// Signal threshold: lags enter the decay fit while the autocovariance
/// exceeds ten times its rough standard error.
const SNR_FACTOR: f64 = 10.0;

/// Empirical autocovariances of an observable along an equilibrium orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationDecay {
    pub seed: u64,
    pub orbit_len: usize,
    /// `(lag, autocovariance)` for lag = 0..=nmax; lag 0 is the variance.
    pub correlations: Vec<(usize, f64)>,
    /// Log-linear fit of the decay over the high-signal lags, when at
    /// least three qualify.
    pub fitted_rate: Option<f64>,
    /// Number of leading lags used in the fit.
    pub fit_lags: usize,
}

/// Estimates autocovariances `cov(n) = <g_k g_{k+n}> - <g>^2` from a long
/// orbit started in equilibrium (x0 sampled from the supplied density,
/// then burned in), and fits the decay rate over the lags whose signal
/// exceeds ten standard errors.
pub fn correlation_decay<F: Real>(
    map: &MapParams<F>,
    density: &StepFunction<F>,
    observable: &StepFunction<F>,
    nmax: usize,
    seed: u64,
) -> Result<CorrelationDecay> {
    if nmax > 200 {
        return Err(Error::DomainError {
            what: "nmax",
            value: nmax as f64,
            lo: 0.0,
            hi: 200.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = density.sample_from_density(lit(rng.gen::<f64>()));
    for _ in 0..BURN_IN {
        x = map.eval_in_domain(x);
    }
    let n = CORRELATION_ORBIT_LEN;
    let mut g = Vec::with_capacity(n);
    for _ in 0..n {
        g.push(observable.eval(x).expect("orbit stays in [0,1]").to_f64().unwrap());
        x = map.eval_in_domain(x);
    }
    let mean = g.iter().sum::<f64>() / n as f64;
    g.iter_mut().for_each(|v| *v -= mean);

    let mut correlations = Vec::with_capacity(nmax + 1);
    for lag in 0..=nmax {
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += g[i] * g[i + lag];
        }
        correlations.push((lag, acc / (n - lag) as f64));
    }

    let var = correlations[0].1;
    let mut fit_lags = 0usize;
    for &(lag, cov) in &correlations[1..] {
        let se = var / ((n - lag) as f64).sqrt();
        if cov.abs() > SNR_FACTOR * se {
            fit_lags = lag;
        } else {
            break;
        }
    }
    let fitted_rate = if fit_lags >= 3 {
        // least-squares slope of ln|cov| against lag over 1..=fit_lags
        let pts: Vec<(f64, f64)> = correlations[1..=fit_lags]
            .iter()
            .map(|&(lag, cov)| (lag as f64, cov.abs().ln()))
            .collect();
        let k = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Some((k * sxy - sx * sy) / (k * sxx - sx * sx))
    } else {
        None
    };
    Ok(CorrelationDecay {
        seed,
        orbit_len: n,
        correlations,
        fitted_rate,
        fit_lags,
    })
}
