//! Scalar abstraction: the numeric kernels are generic over the floating
//! point type, with `f64` aliases exported at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
///
/// Everything the kernels need comes from `num_traits::Float` plus literal
/// conversion via `FromPrimitive`. The documented tolerances assume `f64`;
/// `f32` works but bottoms out at its own machine precision.
pub trait Real: Float + FromPrimitive + Debug + Display + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Display + 'static {}

/// Shorthand for embedding an `f64` literal into the generic scalar type.
#[inline]
pub(crate) fn lit<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 literal must be representable in the scalar type")
}

/// 1/2 in the scalar type; used pervasively for the turning point.
#[inline]
pub(crate) fn half<F: Real>() -> F {
    lit(0.5)
}

/// 2 in the scalar type.
#[inline]
pub(crate) fn two<F: Real>() -> F {
    lit(2.0)
}
