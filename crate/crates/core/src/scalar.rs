//! Scalar abstraction shared by every numeric kernel.
//!
//! Geometry (positions, delays, frequencies) is always carried in `f64`.
//! Sample tensors, images and reductions are generic over [`Real`], so the
//! same pipelines run in `f32` (large desk-scale scenes) or `f64` (tight
//! algebraic checks).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point sample type accepted by the toolkit (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal or geometry value.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite cast")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + rustfft::FftNum
        + 'static
{
}

/// Complex sample over a [`Real`] component type.
pub type Cplx<T> = num_complex::Complex<T>;
