//! Scalar abstraction for the linear-algebra and quadrature substrate.
//!
//! The geometric kernels (projectors, Grassmannian distances, Jacobi
//! eigensolves, Gauss-Legendre nodes) are generic over the floating type;
//! the analysis layers pin everything to [`crate::Real`].

use std::fmt::{Debug, Display};

/// Floating scalar: f32 or f64.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + std::iter::Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from f64 literals and tolerances.
    fn lit(v: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(v).expect("finite f64 literal")
    }

    fn from_count(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("usize fits scalar")
    }

    fn pi() -> Self {
        Self::lit(std::f64::consts::PI)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
