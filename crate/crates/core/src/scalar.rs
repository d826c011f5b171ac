//! Scalar abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the analytic models are written against: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn erf(self) -> Self;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite inputs with `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Relative tolerance used when checking analytic identities (purity, symmetry).
    #[inline]
    fn tolerance() -> Self {
        Self::epsilon() * Self::lit(1024.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
}

/// Speed of light in nm/ps.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;

/// Speed of light in cm/ps.
pub const SPEED_OF_LIGHT_CM_PER_PS: f64 = 0.029_979_245_8;

/// Converts a linear power ratio to dB.
#[inline]
pub fn to_db<T: Scalar>(ratio: T) -> T {
    T::lit(10.0) * ratio.log10()
}

/// Converts dB to a linear power ratio.
#[inline]
pub fn from_db<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}
