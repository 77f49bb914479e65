//! Scalar abstraction for the numeric core.
//!
//! All geometric and analytic routines are generic over [`Real`], which is
//! implemented for `f32` and `f64`. The finite element reference oracle is
//! `f64`-only since it is tied to a concrete solver backend.

/// Floating-point scalar usable throughout the numeric core.
///
/// Combines the linear-algebra requirements of `nalgebra` with the
/// elementary-function and conversion traits of `num-traits`.
pub trait Real:
    nalgebra::RealField
    + num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + core::iter::Sum
    + Copy
    + Default
{
    /// Converts an `f64` literal into this scalar type.
    ///
    /// Intended for numeric constants appearing in formulas; the conversion
    /// cannot fail for finite literals.
    fn num(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("finite literal")
    }

    /// Converts a `usize` (dimension, index, factorial argument) into this
    /// scalar type.
    fn num_usize(x: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(x).expect("small integer")
    }

    /// Lossy view as `f64`, used for diagnostics and error messages.
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
