//! Floating-point scalar abstraction.
//!
//! Everything numeric in this crate is generic over [`Scalar`], which is the
//! usual `num-traits` float bundle plus the thread-safety bounds needed by the
//! parallel resampling loops. `f32` and `f64` both qualify; the crate-root
//! aliases fix `f64` for ordinary use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` constant, panicking only for values a float type
    /// cannot represent at all (never the case for f32/f64).
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in this scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + NumAssign + Sum<T> + Debug + Display + Send + Sync + 'static
{
}
