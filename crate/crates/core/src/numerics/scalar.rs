use core::fmt::Debug;
use core::iter::Sum;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type of tensors: `f32` for training, `f64` for
/// gradient checks.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + AddAssign + SubAssign + MulAssign + DivAssign + Sum + Debug + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts between scalar types.
pub fn cast<A: Scalar, B: Scalar>(v: A) -> B {
    B::lit(v.to_f64_lossy())
}
