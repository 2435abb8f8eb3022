//! Floating-point scalar abstraction shared by every solver component.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the solvers are generic over (`f32` and `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// `v`, raised to a small multiple of machine epsilon when `v` is below
    /// what the type can resolve.
    #[inline]
    fn tol(v: f64) -> Self {
        let eps = Self::epsilon() * Self::of(4.0);
        Self::of(v).max(eps)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sign with `sgn(0) = 0`.
#[inline]
pub fn sgn<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
