//! Scalar abstraction: the solver core is generic over the floating-point
//! type through [`Real`]; `f32` and `f64` are the two instantiations.

use num_complex::Complex;
use rustfft::FftNum;

/// Floating-point scalar usable by every field operation: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + FftNum
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
{
    /// Tolerance for exact algebraic relations: 1e-12 in `f64`, loosened to
    /// a multiple of machine epsilon for narrower types.
    fn algebraic_tol() -> Self {
        let spec = Self::from_f64(1e-12).unwrap();
        let floor = Self::epsilon() * Self::from_f64(1e4).unwrap();
        if spec > floor {
            spec
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for converting an `f64` constant into the active scalar type.
#[inline]
pub(crate) fn r<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("constant not representable in scalar type")
}

pub(crate) type C<R> = Complex<R>;
