//! Scalar abstraction shared by every numerical module.
//!
//! Everything that touches a grid is generic over [`Real`], which is
//! implemented for `f32` and `f64`. The combinatorial Taylor machinery in
//! [`crate::commutator`] only needs ring operations and is generic over
//! `num_traits::Num`, so it also runs on exact rationals.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating point type usable for spectral computations: f32 or f64.
pub trait Real:
    FftNum
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Short-hand for `T::lit`.
#[inline]
pub(crate) fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}
