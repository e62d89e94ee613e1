//! Error type shared across the library.

/// Everything that can go wrong when constructing maps, solving for Markov
/// parameters, or running the spectral machinery.
///
/// Numeric payloads are reported as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// `1/s1 + 1/s2` is not 1 within tolerance.
    #[error("slope condition violated: |1/s1 + 1/s2 - 1| = {deviation:.3e} exceeds {tolerance:.0e}")]
    SlopeCondition { deviation: f64, tolerance: f64 },

    /// Perturbation amplitude at or beyond `1/(2 r s2)`.
    #[error("amplitude too large: a = {a} must be below 1/(2 r s2) = {limit}")]
    AmplitudeTooLarge { a: f64, limit: f64 },

    /// Argument outside the domain of the operation.
    #[error("domain error: {what} = {value} outside [{lo}, {hi}]")]
    DomainError {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Value outside the range of the requested inverse branch.
    #[error("range error: y = {y} outside the range of branch {branch}")]
    RangeError { branch: u8, y: f64 },

    /// Root bracketing failed (cannot occur for valid inputs; defensive).
    #[error("no root: bracket endpoints do not straddle zero")]
    NoRoot,

    /// Orbit validation failed: the parameters do not define a Markov map
    /// with the requested return index.
    #[error("not a Markov instance: {reason}")]
    NotMarkov { reason: String },

    /// The second-eigenvalue bracket is invalid: phi at the left endpoint
    /// is at most 1, so the bracketing argument does not apply at this
    /// amplitude. Reported, not guessed around.
    #[error("bracket failure: phi(left) = {phi_left} <= 1; a = {a} too large for the bracket")]
    BracketFailure { phi_left: f64, a: f64 },

    /// Eigenvector solve hit a vanishing denominator (lambda outside the
    /// usable region).
    #[error("singular denominator in eigenvector solve at lambda = {lambda}")]
    SingularDenominator { lambda: f64 },

    /// Sign-set extraction got a function that never changes sign.
    #[error("degenerate sign structure: function does not change sign")]
    DegenerateSign,

    /// A set of zero measure where positive measure is required.
    #[error("empty set: the set has zero measure under the supplied density")]
    EmptySet,

    /// Malformed step function input.
    #[error("invalid step function: {reason}")]
    InvalidStepFunction { reason: &'static str },
}

impl Error {
    /// Stable machine-readable name, used by the CLI diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SlopeCondition { .. } => "SlopeCondition",
            Error::AmplitudeTooLarge { .. } => "AmplitudeTooLarge",
            Error::DomainError { .. } => "DomainError",
            Error::RangeError { .. } => "RangeError",
            Error::NoRoot => "NoRoot",
            Error::NotMarkov { .. } => "NotMarkov",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::SingularDenominator { .. } => "SingularDenominator",
            Error::DegenerateSign => "DegenerateSign",
            Error::EmptySet => "EmptySet",
            Error::InvalidStepFunction { .. } => "InvalidStepFunction",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
