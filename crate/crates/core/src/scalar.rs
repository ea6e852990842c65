//! Scalar abstraction for the numerical kernels.
//!
//! All grid, noise, and solver math is generic over the floating point type
//! through num-traits, with implementations for `f32` and `f64`. The default
//! precision used by the statistics layer and the CLI is `f64`; see the
//! aliases at the crate root.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;

/// Floating point scalar for field and noise computations.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into the scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Widen to `f64` for reporting and statistics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }

    /// One standard normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

impl Scalar for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

/// `eps^alpha` with the convention that a non-finite exponent gives 0
/// (autonomous advection) and `0^a = 0` for any admissible `a > 0`.
#[inline]
pub fn eps_pow<T: Scalar>(eps: T, exponent: T) -> T {
    if !exponent.is_finite() {
        return T::zero();
    }
    if eps == T::zero() {
        return T::zero();
    }
    eps.powf(exponent)
}
