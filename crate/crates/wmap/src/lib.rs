//! W-shaped interval maps with a turning fixed point: exact
//! transfer-operator spectra on Markov parameter families, invariant
//! densities, and metastability diagnostics, cross-validated by an
//! independent bin-discretization oracle.
//!
//! The map `W` has four expanding affine branches meeting at the turning
//! point 1/2. For amplitudes `a` making the orbit of `1/2 + r a` hit the
//! partition point `1/2 - 1/(2 s1)` at step m, the transfer operator acts
//! exactly on an (m+2)-dimensional space of step functions. This crate
//! computes that action both ways (direct pullback and matrix), the fixed
//! density, the second eigenvalue with its eigenfunction in closed form,
//! and the almost-invariant-set statistics the second eigenvalue drives.
//!
//! Everything numeric is generic over the scalar (see [`Real`]); the
//! `*64` aliases fix `f64`, which all documented tolerances assume.

mod error;
mod interval;
mod map;
mod markov;
mod metastability;
mod scalar;
mod step;
mod transfer;
mod ulam;

pub use error::{Error, Result};
pub use interval::IntervalUnion;
pub use map::{Branch, MapParams, SLOPE_TOL};
pub use markov::{
    closed_form_orbit_check, m_from_a, orbit_tolerance, solve_markov_a, MarkovInstance,
    PRECISION_LIMIT_M,
};
pub use metastability::{
    correlation_decay, escape_rate, simulate_residence, CorrelationDecay, EscapeReport,
    ResidenceStats, CORRELATION_ORBIT_LEN,
};
pub use scalar::Real;
pub use step::StepFunction;
pub use transfer::{
    alternative_constant, apply_transfer, build_matrix, eigenfunction, fixed_vector,
    invariant_density, iterate_coefficients, k_norm, left_mass_vector, limit_mixture_weights,
    matrix_second_eigenvalue, phi, positivity_index, projected_eigenfunction, second_eigenvalue,
    sign_sets, theorem_bracket, w0_acim, CoefficientVector, MatrixEigenvalue, SignSets,
    SpectralPair, TransferMatrix,
};
pub use ulam::{
    cross_validate, CrossValidation, UlamEigenvalue, UlamModel, UlamSpectrum, ITERATION_CAP,
    ITERATION_TOL,
};

pub type MapParams64 = MapParams<f64>;
pub type MarkovInstance64 = MarkovInstance<f64>;
pub type StepFunction64 = StepFunction<f64>;
pub type IntervalUnion64 = IntervalUnion<f64>;
pub type CoefficientVector64 = CoefficientVector<f64>;
pub type TransferMatrix64 = TransferMatrix<f64>;
pub type SpectralPair64 = SpectralPair<f64>;
pub type SignSets64 = SignSets<f64>;
pub type UlamModel64 = UlamModel<f64>;
pub type CrossValidation64 = CrossValidation<f64>;
pub type EscapeReport64 = EscapeReport<f64>;
pub type MatrixEigenvalue64 = MatrixEigenvalue<f64>;
