//! The transfer operator on step functions and its exact finite matrix.
//!
//! On a Markov instance the operator leaves the (m+2)-dimensional span of
//! `{1, X_{I_0}, ..., X_{I_m}}` invariant, where `X` denotes an indicator.
//! Coefficients are ordered `(c, alpha_0, ..., alpha_m)`: index 0 is the
//! constant term, index i+1 is the coefficient of `X_{I_i}`. That ordering
//! is used everywhere: matrix rows/columns, eigenvectors, realizations.
//!
//! Two independent routes compute the operator action: `apply_transfer`
//! pulls step functions back through the inverse branches (works for any
//! step function, Markov or not), and `TransferMatrix` acts on coefficient
//! vectors. Tests hold the two routes against each other.

use crate::error::{Error, Result};
use crate::interval::IntervalUnion;
use crate::map::MapParams;
use crate::markov::MarkovInstance;
use crate::scalar::{half, lit, two, Real};
use crate::step::StepFunction;

/// Coordinates on the basis `{1, X_{I_0}, ..., X_{I_m}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<F> {
    pub c: F,
    pub alpha: Vec<F>,
}

impl<F: Real> CoefficientVector<F> {
    pub fn new(c: F, alpha: Vec<F>) -> Self {
        CoefficientVector { c, alpha }
    }

    /// The constant function 1 in coefficient coordinates.
    pub fn one(m: usize) -> Self {
        CoefficientVector {
            c: F::one(),
            alpha: vec![F::zero(); m + 1],
        }
    }

    pub fn m(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn as_flat(&self) -> Vec<F> {
        let mut v = Vec::with_capacity(self.alpha.len() + 1);
        v.push(self.c);
        v.extend_from_slice(&self.alpha);
        v
    }

    pub fn from_flat(v: &[F]) -> Self {
        CoefficientVector {
            c: v[0],
            alpha: v[1..].to_vec(),
        }
    }

    pub fn sup_norm(&self) -> F {
        self.as_flat()
            .iter()
            .fold(F::zero(), |acc, x| acc.max(x.abs()))
    }

    /// Realizes the coefficients as a step function on the elementary
    /// partition `{0, p_m, ..., p_1, p_0, 1}`.
    ///
    /// Gap values accumulate from the right: on `[p_{j}, p_{j-1})` the
    /// indicators `X_{I_j}, ..., X_{I_m}` are active together with
    /// `X_{I_0}`.
    pub fn to_step(&self, instance: &MarkovInstance<F>) -> StepFunction<F> {
        let m = instance.m();
        assert_eq!(self.m(), m, "coefficient count must match the instance");
        let bp = instance.elementary_partition();
        let mut vals = Vec::with_capacity(m + 2);
        // [0, p_m): covered by I_0 only
        vals.push(self.c + self.alpha[0]);
        // [p_{m-k+1}, p_{m-k}) for k = 1..m
        let mut tail = F::zero();
        let mut stacked = Vec::with_capacity(m);
        for j in (1..=m).rev() {
            tail = tail + self.alpha[j];
            stacked.push(self.c + self.alpha[0] + tail);
        }
        vals.extend(stacked);
        // [p_0, 1]
        vals.push(self.c);
        StepFunction::new(bp, vals).expect("elementary partition is valid")
    }
}

/// Dense (m+2) x (m+2) matrix of the operator on the coefficient basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<F> {
    dim: usize,
    entries: Vec<F>, // row-major
}

impl<F: Real> TransferMatrix<F> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> F {
        self.entries[row * self.dim + col]
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![F::zero(); self.dim];
        for (i, out_i) in out.iter_mut().enumerate() {
            let row = &self.entries[i * self.dim..(i + 1) * self.dim];
            let mut acc = F::zero();
            for (a, b) in row.iter().zip(v) {
                acc = acc + *a * *b;
            }
            *out_i = acc;
        }
        out
    }

    pub fn apply(&self, v: &CoefficientVector<F>) -> CoefficientVector<F> {
        CoefficientVector::from_flat(&self.mul_vec(&v.as_flat()))
    }
}

/// Builds the simplified transfer matrix of a Markov instance.
///
/// Layout, with `B = s1 + 2 r s1 a` and `G = s2 + 2 r s2 a`:
///
/// ```text
/// row c      : 1/2        1/(2 s2)  0 ... 0
/// row alpha_0: 1/(1+2ra)  1/B       0 ... 0   1/B
/// row alpha_1: 0          1/G       1/G ... 1/G
/// row alpha_j: single 1/B in column alpha_{j-1},  j = 2..m
/// ```
pub fn build_matrix<F: Real>(instance: &MarkovInstance<F>) -> TransferMatrix<F> {
    let map = instance.map();
    let m = instance.m();
    let dim = m + 2;
    let (s1, s2, r, a) = (map.s1(), map.s2(), map.r(), map.a());
    let beta = s1 + two::<F>() * r * s1 * a;
    let gamma = s2 + two::<F>() * r * s2 * a;
    let t = F::one() + two::<F>() * r * a;

    let mut e = vec![F::zero(); dim * dim];
    // row 0 (c)
    e[0] = half();
    e[1] = F::one() / (two::<F>() * s2);
    // row 1 (alpha_0)
    e[dim] = F::one() / t;
    e[dim + 1] = F::one() / beta;
    e[dim + (dim - 1)] = F::one() / beta;
    // row 2 (alpha_1): every alpha column
    for col in 1..dim {
        e[2 * dim + col] = F::one() / gamma;
    }
    // rows alpha_j, j = 2..m: single entry at column alpha_{j-1} = j
    for j in 2..=m {
        e[(j + 1) * dim + j] = F::one() / beta;
    }
    TransferMatrix { dim, entries: e }
}

/// Left vector `w = (1, |I_0|, ..., |I_m|)`; integral preservation of the
/// operator reads `w^T A = w^T`.
pub fn left_mass_vector<F: Real>(instance: &MarkovInstance<F>) -> Vec<F> {
    let mut w = Vec::with_capacity(instance.m() + 2);
    w.push(F::one());
    w.extend(instance.interval_lengths());
    w
}

/// Direct application of the transfer operator to a step function:
///
/// ```text
/// P f = f o tau_1 / (2 s2) + (f o tau_2) X_{I_0} / B
///     + (f o tau_3) X_{I_0} / G + f o tau_4 / (2 s1)
/// ```
///
/// computed exactly by pulling the breakpoints of f forward through each
/// branch and evaluating on the merged partition. Preserves the integral.
pub fn apply_transfer<F: Real>(map: &MapParams<F>, f: &StepFunction<F>) -> StepFunction<F> {
    let p0 = map.turning_image();
    let mut cand: Vec<F> = vec![F::zero(), F::one(), p0];
    for b in map.branches() {
        for &x in f.breakpoints() {
            if x >= b.domain_lo && x <= b.domain_hi {
                cand.push(b.value(x).max(F::zero()).min(F::one()));
            }
        }
        cand.push(b.value(b.domain_lo).max(F::zero()).min(F::one()));
        cand.push(b.value(b.domain_hi).max(F::zero()).min(F::one()));
    }
    cand.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    cand.dedup();

    let mut vals = Vec::with_capacity(cand.len() - 1);
    for w in cand.windows(2) {
        let t = half::<F>() * (w[0] + w[1]);
        let mut acc = F::zero();
        for b in map.branches() {
            let in_range = match b.index {
                1 | 4 => true,
                _ => t < p0,
            };
            if in_range {
                let x = b.invert(t).max(F::zero()).min(F::one());
                acc = acc + f.eval(x).expect("pullback stays in [0,1]") / b.slope.abs();
            }
        }
        vals.push(acc);
    }
    StepFunction::new(cand, vals)
        .expect("merged pullback partition is valid")
        .simplified()
}

/// An eigenvalue with its coefficient vector, realized step function, and
/// residual. `residual` is the sup-norm of `A v - lambda v` divided by the
/// sup-norm of `v` (scale-free, so gauge choices do not distort it).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair<F> {
    pub lambda: F,
    pub vector: CoefficientVector<F>,
    pub function: StepFunction<F>,
    pub residual: F,
    pub k_norm: Option<F>,
}

fn relative_residual<F: Real>(
    matrix: &TransferMatrix<F>,
    v: &CoefficientVector<F>,
    lambda: F,
) -> F {
    let flat = v.as_flat();
    let av = matrix.mul_vec(&flat);
    let mut worst = F::zero();
    for (x, y) in av.iter().zip(&flat) {
        worst = worst.max((*x - lambda * *y).abs());
    }
    worst / v.sup_norm()
}

/// Closed-form fixed vector of the transfer matrix (eigenvalue 1):
/// `c = 1/(2 r s1 s2 a)`, `alpha_0 = 1/(2 r s1 a)`,
/// `alpha_j = B^{m-j}` for j = 1..m.
pub fn fixed_vector<F: Real>(instance: &MarkovInstance<F>) -> SpectralPair<F> {
    let map = instance.map();
    let m = instance.m();
    let (s1, s2, r, a) = (map.s1(), map.s2(), map.r(), map.a());
    let beta = s1 + two::<F>() * r * s1 * a;
    let c = F::one() / (two::<F>() * r * s1 * s2 * a);
    let mut alpha = Vec::with_capacity(m + 1);
    alpha.push(F::one() / (two::<F>() * r * s1 * a));
    for j in 1..=m {
        alpha.push(beta.powi((m - j) as i32));
    }
    let vector = CoefficientVector::new(c, alpha);
    let function = vector.to_step(instance);
    let matrix = build_matrix(instance);
    let residual = relative_residual(&matrix, &vector, F::one());
    SpectralPair {
        lambda: F::one(),
        vector,
        function,
        residual,
        k_norm: None,
    }
}

/// The invariant density: fixed vector realized and normalized to
/// integral 1.
pub fn invariant_density<F: Real>(instance: &MarkovInstance<F>) -> StepFunction<F> {
    let g = fixed_vector(instance).function;
    let z = g.integral();
    g.scale(F::one() / z)
}

/// Power iteration `A^n v0`, without normalization.
pub fn iterate_coefficients<F: Real>(
    instance: &MarkovInstance<F>,
    v0: &CoefficientVector<F>,
    n: usize,
) -> CoefficientVector<F> {
    let matrix = build_matrix(instance);
    let mut v = v0.as_flat();
    for _ in 0..n {
        v = matrix.mul_vec(&v);
    }
    CoefficientVector::from_flat(&v)
}

/// The auxiliary function whose unit value picks out eigenvalues:
///
/// ```text
/// phi(lambda) = lambda^m s1^{m-1} s2 (1+2ra)^m (lambda (1+2ra) - 1)
///               [ s2 (2 lambda - 1)(lambda s1 (1+2ra) - 1) - s1 ]
/// ```
///
/// Evaluated through sign-tracked log magnitudes: the raw product
/// overflows or underflows once `lambda^m s1^m (1+2ra)^m` leaves the
/// exponent range. A vanishing factor short-circuits to exact zero.
pub fn phi<F: Real>(instance: &MarkovInstance<F>, lambda: F) -> F {
    let map = instance.map();
    let m = instance.m() as i32;
    let (s1, s2, r, a) = (map.s1(), map.s2(), map.r(), map.a());
    let t = F::one() + two::<F>() * r * a;

    // plain product here: the linear factor must vanish exactly at the
    // bracket top lambda = fl(1/(1+2ra)), where fl(lambda * t) == 1
    let linear = lambda * t - F::one();
    let quad = s2 * (two::<F>() * lambda - F::one()) * (lambda * s1 * t - F::one()) - s1;
    let factors = [
        (lambda, m),
        (s1, m - 1),
        (s2, 1),
        (t, m),
        (linear, 1),
        (quad, 1),
    ];
    let mut sign = F::one();
    let mut log_mag = F::zero();
    for &(base, exp) in &factors {
        if exp == 0 {
            continue;
        }
        if base == F::zero() {
            return F::zero();
        }
        if base < F::zero() && exp % 2 != 0 {
            sign = -sign;
        }
        log_mag = log_mag + F::from_i32(exp).unwrap() * base.abs().ln();
    }
    sign * log_mag.exp()
}

/// The bracket `((1-2ra)/(1+2ra), 1/(1+2ra))` that isolates the second
/// eigenvalue when the amplitude is small enough.
pub fn theorem_bracket<F: Real>(instance: &MarkovInstance<F>) -> (F, F) {
    let map = instance.map();
    let tra = two::<F>() * map.r() * map.a();
    ((F::one() - tra) / (F::one() + tra), F::one() / (F::one() + tra))
}

/// Second eigenvalue by bisection of `phi(lambda) = 1` inside the bracket.
///
/// Requires `phi(left) > 1` (small amplitude); otherwise the bracketing
/// argument does not apply and `BracketFailure` is reported rather than
/// guessed around. The returned pair carries the eigenfunction in the
/// `alpha_m = 1` gauge and its K norm.
pub fn second_eigenvalue<F: Real>(instance: &MarkovInstance<F>) -> Result<SpectralPair<F>> {
    let (left, right) = theorem_bracket(instance);
    let phi_left = phi(instance, left);
    if phi_left <= F::one() {
        return Err(Error::BracketFailure {
            phi_left: phi_left.to_f64().unwrap_or(f64::NAN),
            a: instance.map().a().to_f64().unwrap_or(f64::NAN),
        });
    }
    // phi(right) = 0 < 1, so phi - 1 changes sign on (left, right).
    // Bisect until the bracket cannot shrink: downstream identities are
    // sensitive to the last ulp of lambda at large m.
    let mut lo = left;
    let mut hi = right;
    for _ in 0..200 {
        let mid = half::<F>() * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(instance, mid) > F::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = half::<F>() * (lo + hi);
    projected_eigenfunction(instance, lambda)
}

fn formula_coefficients<F: Real>(
    instance: &MarkovInstance<F>,
    lambda: F,
    robust_c: bool,
) -> Result<CoefficientVector<F>> {
    let map = instance.map();
    let m = instance.m();
    let (s1, s2, r, a) = (map.s1(), map.s2(), map.r(), map.a());
    let t = F::one() + two::<F>() * r * a;
    let g = lambda * s1 * t;
    let denom_alpha = g - F::one();
    let denom_c = s2 * (two::<F>() * lambda - F::one());
    if denom_alpha == F::zero() {
        return Err(Error::SingularDenominator {
            lambda: lambda.to_f64().unwrap_or(f64::NAN),
        });
    }

    let mut alpha = vec![F::zero(); m + 1];
    alpha[m] = F::one();
    for j in 1..m {
        alpha[m - j] = g.powi(j as i32);
    }
    // lambda^m s1^{m-1} (1+2ra)^m = g^m / s1; the bracketed slope factor
    // simplifies to s1 s2 (lambda (1+2ra) - 1). The fused multiply keeps
    // the near-cancelling linear factor at full relative accuracy.
    let gm = g.powi(m as i32);
    let lin = lambda.mul_add(t, -F::one());
    alpha[0] = (gm * s2 * lin + F::one()) / denom_alpha;

    // Near lambda = 1/2 the quotient expression for c is 0/0-degenerate
    // (alpha_0 vanishes with the denominator); the first equation of the
    // eigen system gives c directly and stays regular. Eigenvalues do
    // land on 1/2: s = (3, 3/2), m = 1 has lambda_2 = 1/2 exactly.
    let near_half = (two::<F>() * lambda - F::one()).abs() < lit(1e-6);
    let c = if robust_c && near_half {
        lambda * t * alpha[0] - alpha[0] / s1 - F::one() / s1
    } else {
        if denom_c == F::zero() {
            return Err(Error::SingularDenominator {
                lambda: lambda.to_f64().unwrap_or(f64::NAN),
            });
        }
        alpha[0] / denom_c
    };
    Ok(CoefficientVector::new(c, alpha))
}

fn pair_from_vector<F: Real>(
    instance: &MarkovInstance<F>,
    lambda: F,
    vector: CoefficientVector<F>,
) -> SpectralPair<F> {
    let function = vector.to_step(instance);
    let matrix = build_matrix(instance);
    let residual = relative_residual(&matrix, &vector, lambda);
    let k_norm = function.abs_integral();
    SpectralPair {
        lambda,
        vector,
        function,
        residual,
        k_norm: Some(k_norm),
    }
}

/// Eigenvector in the `alpha_m = 1` gauge for a given eigenvalue:
///
/// ```text
/// alpha_{m-j} = (lambda s1 (1+2ra))^j                       j = 0..m-1
/// alpha_0 = [lambda^m s1^{m-1} (1+2ra)^m
///            (lambda s1 s2 (1+2ra) - s1 s2) + 1] / (lambda s1 (1+2ra) - 1)
/// c = alpha_0 / (s2 (2 lambda - 1))
/// ```
///
/// Any real lambda is accepted for diagnostic use; the result is an actual
/// eigenvector exactly when `phi(lambda) = 1`.
pub fn eigenfunction<F: Real>(instance: &MarkovInstance<F>, lambda: F) -> Result<SpectralPair<F>> {
    let vector = formula_coefficients(instance, lambda, false)?;
    Ok(pair_from_vector(instance, lambda, vector))
}

/// The formula vector with its component along the invariant direction
/// removed, regauged to `alpha_m = 1`.
///
/// For an eigenvalue below 1 the exact eigenvector is annihilated by the
/// left mass vector; in the evaluated formulas that component is pure
/// rounding, amplified by the lambda sensitivity of `alpha_0` at large m.
/// The oblique projection along the fixed vector restores the zero-mass
/// property without disturbing the other spectral components, so this is
/// the construction the spectral routes return.
pub fn projected_eigenfunction<F: Real>(
    instance: &MarkovInstance<F>,
    lambda: F,
) -> Result<SpectralPair<F>> {
    let raw = formula_coefficients(instance, lambda, true)?.as_flat();
    let fixed = fixed_vector(instance).vector.as_flat();
    let w = left_mass_vector(instance);
    let dot = |x: &[F], y: &[F]| -> F {
        x.iter()
            .zip(y)
            .fold(F::zero(), |acc, (a, b)| acc + *a * *b)
    };
    let coeff = dot(&w, &raw) / dot(&w, &fixed);
    let mut v: Vec<F> = raw
        .iter()
        .zip(&fixed)
        .map(|(x, g)| *x - coeff * *g)
        .collect();
    let gauge = *v.last().unwrap();
    if gauge == F::zero() {
        return Err(Error::SingularDenominator {
            lambda: lambda.to_f64().unwrap_or(f64::NAN),
        });
    }
    for x in v.iter_mut() {
        *x = *x / gauge;
    }
    Ok(pair_from_vector(
        instance,
        lambda,
        CoefficientVector::from_flat(&v),
    ))
}

/// Alternative expression for the constant coefficient,
/// `c = lambda (1+2ra) alpha_0 - alpha_0/s1 - 1/s1`; agrees with the
/// primary one exactly when `phi(lambda) = 1`.
pub fn alternative_constant<F: Real>(instance: &MarkovInstance<F>, pair: &SpectralPair<F>) -> F {
    let map = instance.map();
    let t = F::one() + two::<F>() * map.r() * map.a();
    let a0 = pair.vector.alpha[0];
    pair.lambda * t * a0 - a0 / map.s1() - F::one() / map.s1()
}

/// Integral of |h|; for the second eigenfunction in the `alpha_m = 1`
/// gauge this is the K norm.
pub fn k_norm<F: Real>(h: &StepFunction<F>) -> F {
    h.abs_integral()
}

/// Sign structure of an eigenfunction: `plus` is the closure of
/// `{h >= 0}`, `minus` its complement, and `positivity_interval` the
/// maximal interval of positivity containing the turning point 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct SignSets<F> {
    pub plus: IntervalUnion<F>,
    pub minus: IntervalUnion<F>,
    pub positivity_interval: (F, F),
}

pub fn sign_sets<F: Real>(h: &StepFunction<F>) -> Result<SignSets<F>> {
    let (plus, minus) = h.sign_split();
    if plus.is_empty() || minus.is_empty() {
        return Err(Error::DegenerateSign);
    }
    let positivity_interval = plus
        .intervals()
        .iter()
        .copied()
        .find(|&(lo, hi)| lo <= half() && half::<F>() <= hi)
        .ok_or(Error::DegenerateSign)?;
    Ok(SignSets {
        plus,
        minus,
        positivity_interval,
    })
}

/// Largest index i with `h > 0` on `[p_i, p_{i-1}]`; the positivity
/// interval of the second eigenfunction is `[p_i, p_0]` for this i.
pub fn positivity_index<F: Real>(instance: &MarkovInstance<F>, pair: &SpectralPair<F>) -> usize {
    let pts = instance.points();
    let m = instance.m();
    for i in (1..=m).rev() {
        let mid = half::<F>() * (pts[i] + pts[i - 1]);
        if pair.function.eval(mid).unwrap_or(F::zero()) > F::zero() {
            return i;
        }
    }
    0
}

/// Invariant density of the unperturbed map: piecewise constant on
/// [0, 1/2] and [1/2, 1], from the two-interval fixed-point system
/// `v = u/(2 s2) + v/(2 s1)`, normalized to integral 1.
pub fn w0_acim<F: Real>(s1: F, s2: F) -> Result<StepFunction<F>> {
    MapParams::new(s1, s2, lit(0.25), F::zero())?;
    let v = F::one();
    let u = two::<F>() * s2 * v * (F::one() - F::one() / (two::<F>() * s1));
    let z = half::<F>() * (u + v);
    StepFunction::new(
        vec![F::zero(), half(), F::one()],
        vec![u / z, v / z],
    )
}

/// Weights of the weak-* limit of the normalized invariant measures as the
/// amplitude shrinks: an absolutely continuous part and a point mass at
/// 1/2, with
///
/// ```text
/// w_ac    = (s1+s2)(s2+2) / D,   w_dirac = s1 s2^2 / D,
/// D = (s1+s2)(s2+2) + s1 s2^2.
/// ```
pub fn limit_mixture_weights<F: Real>(s1: F, s2: F) -> Result<(F, F)> {
    MapParams::new(s1, s2, lit(0.25), F::zero())?;
    let ac = (s1 + s2) * (s2 + two::<F>());
    let dirac = s1 * s2 * s2;
    let d = ac + dirac;
    Ok((ac / d, dirac / d))
}

/// Result of the power-iteration cross-check on the transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEigenvalue<F> {
    pub lambda: F,
    pub vector: Vec<F>,
    pub residual: F,
    pub converged: bool,
}

const POWER_TOL: f64 = 1e-13;
const POWER_CAP: usize = 2_000_000;

/// Second eigenvalue of the transfer matrix by power iteration, deflating
/// the leading eigenvalue 1 with the known left vector `w`. This is the
/// cross-check route: it needs no bracket, so it also covers amplitudes
/// outside the bisection regime.
pub fn matrix_second_eigenvalue<F: Real>(instance: &MarkovInstance<F>) -> MatrixEigenvalue<F> {
    let matrix = build_matrix(instance);
    let w = left_mass_vector(instance);
    let fixed = fixed_vector(instance).vector.as_flat();
    let dim = matrix.dim();

    let dot = |x: &[F], y: &[F]| -> F {
        x.iter()
            .zip(y)
            .fold(F::zero(), |acc, (a, b)| acc + *a * *b)
    };
    let w_dot_fixed = dot(&w, &fixed);

    // Deterministic start with components across the spectrum.
    let mut v: Vec<F> = (0..dim)
        .map(|i| lit::<F>(if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + i as f64 * 0.37)))
        .collect();
    let project = |v: &mut Vec<F>| {
        let coeff = dot(&w, v) / w_dot_fixed;
        for (vi, fi) in v.iter_mut().zip(&fixed) {
            *vi = *vi - coeff * *fi;
        }
    };
    let norm1 = |v: &[F]| v.iter().fold(F::zero(), |acc, x| acc + x.abs());

    project(&mut v);
    let n0 = norm1(&v);
    for x in v.iter_mut() {
        *x = *x / n0;
    }

    let tol = lit::<F>(POWER_TOL);
    let mut lambda = F::zero();
    let mut converged = false;
    for _ in 0..POWER_CAP {
        let mut av = matrix.mul_vec(&v);
        project(&mut av);
        let rayleigh = dot(&v, &av) / dot(&v, &v);
        let n = norm1(&av);
        if n < lit(1e-300) {
            lambda = F::zero();
            converged = true;
            break;
        }
        let sign = if rayleigh < F::zero() { -F::one() } else { F::one() };
        let mut change = F::zero();
        for (x, y) in av.iter().zip(&v) {
            change = change + (*x / n * sign - *y).abs();
        }
        for (slot, x) in v.iter_mut().zip(&av) {
            *slot = *x / n * sign;
        }
        if change <= tol && (rayleigh - lambda).abs() <= tol {
            lambda = rayleigh;
            converged = true;
            break;
        }
        lambda = rayleigh;
    }

    let av = matrix.mul_vec(&v);
    let mut residual = F::zero();
    let mut scale = F::zero();
    for (x, y) in av.iter().zip(&v) {
        residual = residual.max((*x - lambda * *y).abs());
        scale = scale.max(y.abs());
    }
    MatrixEigenvalue {
        lambda,
        vector: v,
        residual: residual / scale,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn inst(m: usize) -> MarkovInstance<f64> {
        MarkovInstance::solve(2.0, 2.0, 0.25, m).unwrap()
    }

    const LAMBDA5: f64 = 0.873237227279931;
    const LAMBDA7: f64 = 0.936580332073165;

    #[test]
    fn matrix_layout_matches_the_display() {
        let i5 = inst(5);
        let a = build_matrix(&i5);
        let map = i5.map();
        let beta = map.s1() * (1.0 + 2.0 * map.r() * map.a());
        let gamma = map.s2() * (1.0 + 2.0 * map.r() * map.a());
        assert_eq!(a.entry(0, 0), 0.5);
        assert_eq!(a.entry(0, 1), 1.0 / (2.0 * map.s2()));
        assert!((a.entry(1, 0) - 1.0 / (1.0 + 2.0 * map.r() * map.a())).abs() < 1e-15);
        assert!((a.entry(1, 1) - 1.0 / beta).abs() < 1e-16);
        assert!((a.entry(1, 6) - 1.0 / beta).abs() < 1e-16);
        for col in 1..7 {
            assert!((a.entry(2, col) - 1.0 / gamma).abs() < 1e-16);
        }
        for j in 2..=5 {
            assert!((a.entry(j + 1, j) - 1.0 / beta).abs() < 1e-16);
            let row_sum: f64 = (0..7).map(|c| a.entry(j + 1, c)).sum();
            assert!((row_sum - 1.0 / beta).abs() < 1e-16, "row {j} has extra entries");
        }
    }

    #[test]
    fn left_mass_vector_is_fixed() {
        for (s1, s2) in [(2.0, 2.0), (3.0, 1.5), (1.5, 3.0)] {
            for m in 1..=25 {
                let i = MarkovInstance::<f64>::solve(s1, s2, 0.25, m).unwrap();
                let a = build_matrix(&i);
                let w = left_mass_vector(&i);
                for col in 0..a.dim() {
                    let mut acc = 0.0;
                    for (row, wr) in w.iter().enumerate() {
                        acc += wr * a.entry(row, col);
                    }
                    assert!(
                        (acc - w[col]).abs() <= 1e-12,
                        "s=({s1},{s2}) m={m} col={col}: {:e}",
                        (acc - w[col]).abs()
                    );
                }
            }
        }
    }

    #[test]
    fn operator_on_indicator_of_i0() {
        let i5 = inst(5);
        let map = i5.map();
        let p0 = map.turning_image();
        let f = StepFunction::indicator(0.0, p0).unwrap();
        let pf = apply_transfer(map, &f);
        // expected: 1/(2 s2) + X_{I_0}/B + X_{I_1}/G
        let beta = map.s1() * (1.0 + 2.0 * map.r() * map.a());
        let gamma = map.s2() * (1.0 + 2.0 * map.r() * map.a());
        let mut v = CoefficientVector::new(1.0 / (2.0 * map.s2()), vec![0.0; 6]);
        v.alpha[0] = 1.0 / beta;
        v.alpha[1] = 1.0 / gamma;
        let expected = v.to_step(&i5);
        assert!(pf.l1_distance(&expected) <= 1e-14);
    }

    #[test]
    fn operator_on_middle_indicators() {
        let i5 = inst(5);
        let map = i5.map();
        let pts = i5.points();
        let beta = map.s1() * (1.0 + 2.0 * map.r() * map.a());
        let gamma = map.s2() * (1.0 + 2.0 * map.r() * map.a());
        for i in 1..5 {
            let f = StepFunction::indicator(pts[i], pts[0]).unwrap();
            let pf = apply_transfer(map, &f);
            let mut v = CoefficientVector::new(0.0, vec![0.0; 6]);
            v.alpha[i + 1] = 1.0 / beta;
            v.alpha[1] = 1.0 / gamma;
            let expected = v.to_step(&i5);
            assert!(
                pf.l1_distance(&expected) <= 1e-14,
                "indicator of I_{i} maps wrong"
            );
        }
    }

    #[test]
    fn operator_preserves_mass() {
        let i5 = inst(5);
        let one = StepFunction::constant(1.0);
        let p1 = apply_transfer(i5.map(), &one);
        assert!((p1.integral() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn matrix_action_equals_operator_action() {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for m in [1usize, 2, 5, 7, 12] {
            let i = inst(m);
            let a = build_matrix(&i);
            for _ in 0..100 {
                let v = CoefficientVector::new(
                    rng.gen_range(-1.0..1.0),
                    (0..=m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                );
                let via_matrix = a.apply(&v).to_step(&i);
                let via_operator = apply_transfer(i.map(), &v.to_step(&i));
                let d = via_matrix.l1_distance(&via_operator);
                assert!(d <= 1e-12, "m={m}: L1 distance {d:e}");
            }
        }
    }

    #[test]
    fn fixed_vector_closed_form() {
        let i5 = inst(5);
        let a = i5.map().a();
        let pair = fixed_vector(&i5);
        assert!((pair.vector.c - 1.0 / (2.0 * a)).abs() < 1e-10);
        assert!((pair.vector.alpha[0] - 1.0 / a).abs() < 1e-10);
        assert!((pair.vector.alpha[1] - (2.0 + a).powi(4)).abs() < 1e-10);
        assert_eq!(pair.vector.alpha[5], 1.0);
        assert!(pair.residual <= 1e-10);
    }

    #[test]
    fn fixed_vector_residual_sweep() {
        for m in 1..=25 {
            let pair = fixed_vector(&inst(m));
            assert!(pair.residual <= 1e-10, "m={m}: residual {:e}", pair.residual);
            assert_eq!(*pair.vector.alpha.last().unwrap(), 1.0);
        }
    }

    #[test]
    fn fixed_vector_matches_power_iteration() {
        // cross-check the closed form against plain iteration of the matrix
        let i5 = inst(5);
        let a = build_matrix(&i5);
        let mut v = CoefficientVector::one(5).as_flat();
        for _ in 0..2000 {
            v = a.mul_vec(&v);
            let n: f64 = v.iter().map(|x| x.abs()).sum();
            v.iter_mut().for_each(|x| *x /= n);
        }
        let closed = fixed_vector(&i5).vector.as_flat();
        let nc: f64 = closed.iter().map(|x| x.abs()).sum();
        for (x, y) in v.iter().zip(&closed) {
            assert!((x - y / nc).abs() <= 1e-12);
        }
    }

    #[test]
    fn iteration_converges_to_the_fixed_direction() {
        let i5 = inst(5);
        let lam = second_eigenvalue(&i5).unwrap().lambda;
        let n = (1e-10f64.ln() / lam.ln()).ceil() as usize;
        let it = iterate_coefficients(&i5, &CoefficientVector::one(5), n);
        let fixed = fixed_vector(&i5).vector;
        let (vi, vf) = (it.as_flat(), fixed.as_flat());
        let dot: f64 = vi.iter().zip(&vf).map(|(a, b)| a * b).sum();
        let ni: f64 = vi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nf: f64 = vf.iter().map(|x| x * x).sum::<f64>().sqrt();
        let angle = (dot / (ni * nf)).clamp(-1.0, 1.0).acos();
        assert!(angle <= 1e-8, "angle {angle:e} after {n} steps");
    }

    #[test]
    fn iteration_fixes_the_fixed_vector_and_preserves_mass() {
        let i5 = inst(5);
        let fixed = fixed_vector(&i5).vector;
        let once = iterate_coefficients(&i5, &fixed, 7);
        for (x, y) in once.as_flat().iter().zip(fixed.as_flat()) {
            assert!((x - y).abs() / y.abs().max(1.0) <= 1e-10);
        }
        let v0 = CoefficientVector::one(5);
        let mass0 = v0.to_step(&i5).integral();
        let mut v = v0;
        for n in 1..=100usize {
            v = iterate_coefficients(&i5, &v, 1);
            let mass = v.to_step(&i5).integral();
            assert!((mass - mass0).abs() <= 1e-10, "mass drift at step {n}");
        }
    }

    #[test]
    fn phi_identities() {
        for m in 1..=25 {
            let i = inst(m);
            let (_, right) = theorem_bracket(&i);
            assert_eq!(phi(&i, right), 0.0, "phi at the bracket top, m={m}");
            assert!((phi(&i, 1.0) - 1.0).abs() <= 1e-9, "phi(1), m={m}");
        }
    }

    #[test]
    fn phi_left_endpoint_closed_form() {
        for m in [5usize, 7, 25] {
            let i = inst(m);
            let map = i.map();
            let tra = 2.0 * map.r() * map.a();
            let left = (1.0 - tra) / (1.0 + tra);
            let expected = left.powi(m as i32) * (1.0 + 4.0 / map.s2() - 3.0 * tra) / (1.0 + tra);
            assert!(
                (phi(&i, left) - expected).abs() <= 1e-9,
                "m={m}: {} vs {expected}",
                phi(&i, left)
            );
        }
    }

    #[test]
    fn phi_left_limit_value() {
        let i = inst(25);
        let (left, _) = theorem_bracket(&i);
        assert!((phi(&i, left) - 3.0).abs() <= 0.05);
    }

    #[test]
    fn phi_minus_one_single_sign_change_inside_the_bracket_interval() {
        for m in 5..=25 {
            let i = inst(m);
            let (left, _) = theorem_bracket(&i);
            let mut changes = 0;
            let mut last = 0.0f64;
            for k in 1..=10_000 {
                let lam = left + (1.0 - left) * k as f64 / 10_001.0;
                let s = (phi(&i, lam) - 1.0).signum();
                if k > 1 && s != last {
                    changes += 1;
                }
                last = s;
            }
            assert_eq!(changes, 1, "m={m}");
        }
    }

    #[test]
    fn phi_is_convex_near_one() {
        for m in [5usize, 7] {
            let i = inst(m);
            let h = 0.0005;
            let mut x = 0.95;
            while x <= 1.0 - h {
                let d2 = phi(&i, x + h) - 2.0 * phi(&i, x) + phi(&i, x - h);
                assert!(d2 > 0.0, "m={m}, x={x}: second difference {d2:e}");
                x += h;
            }
        }
    }

    #[test]
    fn second_eigenvalue_reference_cases() {
        let p5 = second_eigenvalue(&inst(5)).unwrap();
        let p7 = second_eigenvalue(&inst(7)).unwrap();
        assert!((p5.lambda - LAMBDA5).abs() <= 1e-12, "{}", p5.lambda);
        assert!((p7.lambda - LAMBDA7).abs() <= 1e-12, "{}", p7.lambda);
        assert!(p5.residual <= 1e-9);
        assert!(p7.residual <= 1e-9);
    }

    #[test]
    fn second_eigenvalue_rejects_large_amplitudes() {
        // the bracket argument fails for m <= 3 at these slopes
        for m in [1usize, 2, 3] {
            match second_eigenvalue(&inst(m)) {
                Err(Error::BracketFailure { phi_left, .. }) => {
                    assert!(phi_left <= 1.0);
                }
                other => panic!("m={m}: expected BracketFailure, got {other:?}"),
            }
        }
    }

    #[test]
    fn eigenvector_entries_match_the_recursion() {
        let i5 = inst(5);
        let pair = second_eigenvalue(&i5).unwrap();
        let map = i5.map();
        let g = pair.lambda * map.s1() * (1.0 + 2.0 * map.r() * map.a());
        assert_eq!(pair.vector.alpha[5], 1.0);
        assert!((pair.vector.alpha[4] - g).abs() <= 1e-12);
        assert!((pair.vector.alpha[3] - g * g).abs() <= 1e-12);
        // alternative route to c agrees at the eigenvalue
        let c_alt = alternative_constant(&i5, &pair);
        assert!((c_alt - pair.vector.c).abs() <= 1e-9);
    }

    #[test]
    fn eigenfunction_signs_and_zero_integral() {
        for m in 5..=25 {
            let i = inst(m);
            let pair = second_eigenvalue(&i).unwrap();
            assert!(pair.vector.alpha[0] < 0.0, "alpha_0 at m={m}");
            assert!(pair.vector.c < 0.0, "c at m={m}");
            assert!(
                pair.function.integral().abs() <= 1e-10,
                "integral of h at m={m}: {:e}",
                pair.function.integral()
            );
        }
    }

    #[test]
    fn matrix_route_agrees_with_bisection_route() {
        for m in 4..=25 {
            let i = inst(m);
            let bisect = second_eigenvalue(&i).unwrap().lambda;
            let power = matrix_second_eigenvalue(&i);
            assert!(power.converged, "m={m}");
            assert!(
                (power.lambda - bisect).abs() <= 1e-9,
                "m={m}: {} vs {}",
                power.lambda,
                bisect
            );
        }
    }

    #[test]
    fn matrix_route_covers_small_m() {
        // amplitudes outside the bisection regime still have a second
        // eigenvalue; the formula vector at that eigenvalue is consistent
        for m in [1usize, 2, 3] {
            let i = inst(m);
            let power = matrix_second_eigenvalue(&i);
            assert!(power.converged);
            let pair = eigenfunction(&i, power.lambda).unwrap();
            assert!(pair.residual <= 1e-9, "m={m}: residual {:e}", pair.residual);
        }
    }

    #[test]
    fn k_norm_reference_values() {
        let k5 = second_eigenvalue(&inst(5)).unwrap().k_norm.unwrap();
        let k7 = second_eigenvalue(&inst(7)).unwrap().k_norm.unwrap();
        assert!((k5 - 3.8194567381989018).abs() <= 1e-9, "{k5}");
        assert!((k7 - 8.987511622756201).abs() <= 1e-9, "{k7}");
    }

    #[test]
    fn k_norm_of_nonnegative_function_is_the_integral() {
        let f = StepFunction::new(vec![0.0, 0.4, 1.0], vec![2.0, 0.5]).unwrap();
        assert_eq!(k_norm(&f), f.integral());
    }

    #[test]
    fn sign_sets_split_the_mass_evenly() {
        for m in [5usize, 7] {
            let i = inst(m);
            let pair = second_eigenvalue(&i).unwrap();
            let sets = sign_sets(&pair.function).unwrap();
            let k = pair.k_norm.unwrap();
            let plus_mass = pair.function.integral_over(&sets.plus);
            let minus_mass = -pair.function.integral_over(&sets.minus);
            assert!((plus_mass - k / 2.0).abs() <= 1e-10);
            assert!((minus_mass - k / 2.0).abs() <= 1e-10);
            let (lo, hi) = sets.positivity_interval;
            assert!(lo <= 0.5 && 0.5 <= hi);
        }
    }

    #[test]
    fn positivity_interval_shrinks_and_index_gap_grows() {
        let mut widths = Vec::new();
        let mut gaps = Vec::new();
        for m in (5..=21).step_by(2) {
            let i = inst(m);
            let pair = second_eigenvalue(&i).unwrap();
            let sets = sign_sets(&pair.function).unwrap();
            widths.push(sets.positivity_interval.1 - sets.positivity_interval.0);
            gaps.push(m - positivity_index(&i, &pair));
        }
        for w in widths.windows(2) {
            assert!(w[1] < w[0], "positivity width must shrink: {widths:?}");
        }
        for g in gaps.windows(2) {
            assert!(g[1] >= g[0], "m - m1 must not decrease: {gaps:?}");
        }
        assert!(gaps.last().unwrap() > gaps.first().unwrap());
    }

    #[test]
    fn sign_sets_reject_constant_sign() {
        let f = StepFunction::constant(2.0);
        assert!(matches!(sign_sets(&f), Err(Error::DegenerateSign)));
    }

    #[test]
    fn w0_density_reference() {
        let g = w0_acim::<f64>(2.0, 2.0).unwrap();
        assert_eq!(g.values(), &[1.5, 0.5]);
        assert!((g.integral() - 1.0).abs() <= 1e-15);
        // fixed point of the operator at a = 0
        let w0 = MapParams::new(2.0, 2.0, 0.25, 0.0).unwrap();
        let pg = apply_transfer(&w0, &g);
        assert!(pg.l1_distance(&g) <= 1e-12);
    }

    #[test]
    fn w0_density_other_slopes_is_invariant() {
        for (s1, s2) in [(3.0, 1.5), (1.5, 3.0)] {
            let g = w0_acim::<f64>(s1, s2).unwrap();
            assert!((g.integral() - 1.0).abs() <= 1e-14);
            let w0 = MapParams::new(s1, s2, 0.25, 0.0).unwrap();
            assert!(apply_transfer(&w0, &g).l1_distance(&g) <= 1e-12);
        }
    }

    #[test]
    fn mixture_weights_reference() {
        let (ac, dirac) = limit_mixture_weights::<f64>(2.0, 2.0).unwrap();
        assert!((ac - 2.0 / 3.0).abs() <= 1e-15);
        assert!((dirac - 1.0 / 3.0).abs() <= 1e-15);
        let (ac2, dirac2) = limit_mixture_weights::<f64>(3.0, 1.5).unwrap();
        assert!((ac2 + dirac2 - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn invariant_density_mass_concentrates_at_the_turning_point() {
        let window = IntervalUnion::interval(0.48, 0.52);
        let mass = |m: usize| invariant_density(&inst(m)).integral_over(&window);
        let m5 = mass(5);
        let m25 = mass(25);
        let (_, dirac) = limit_mixture_weights::<f64>(2.0, 2.0).unwrap();
        assert!(m25 > m5, "mass near 1/2 must grow: {m5} -> {m25}");
        assert!(m25 >= dirac - 0.05, "mass {m25} below the mixture weight");
    }

    #[test]
    fn second_pair_bound_holds_from_m4() {
        for m in 4..=25 {
            let i = inst(m);
            let (left, right) = theorem_bracket(&i);
            let pair = second_eigenvalue(&i).unwrap();
            assert!(left < pair.lambda && pair.lambda < right, "m={m}");
        }
    }
}
