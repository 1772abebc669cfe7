use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the GP machinery is generic over. `f32` and `f64` both
/// qualify; concrete aliases live at the crate root.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Lossy conversion from `f64`, used for literal constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl<T> Scalar for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}
