//! Element type for network tensors. Training and the CLI run at `f32`
//! (matching the weights archive); gradient-check tests instantiate `f64`.

use ndarray::NdFloat;

pub trait Scalar: NdFloat + std::iter::Sum {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}
