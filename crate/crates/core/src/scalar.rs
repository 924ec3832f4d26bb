//! Floating-point abstraction shared by the geodesy, kinematics, loss and
//! metric code.

use std::fmt::{Debug, Display};

use num_traits::{Euclid, Float, FromPrimitive};

/// Degrees-to-radians factor. Every angle conversion in the crate goes
/// through this one constant so that residual checks stay bit-stable.
pub const DEG_TO_RAD: f64 = std::f64::consts::PI / 180.0;

/// Knots to metres per second.
pub const KNOTS_TO_MPS: f64 = 0.514444;

/// floating point: f32 or f64
pub trait Scalar: Float + Euclid + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn deg_to_rad() -> Self {
        Self::lit(DEG_TO_RAD)
    }

    #[inline]
    fn radians(self) -> Self {
        self * Self::deg_to_rad()
    }

    #[inline]
    fn degrees(self) -> Self {
        self / Self::deg_to_rad()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
