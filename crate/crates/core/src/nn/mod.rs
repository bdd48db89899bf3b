//! Minimal CNN kernel: tensors, 1-D/2-D convolution, max pooling, dense
//! layers, activations, binary cross-entropy and Adam. Everything is generic
//! over [`Real`] so gradient checks can run in `f64` while inference runs in
//! `f32`.

mod adam;
mod layers;
mod loss;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use layers::{
    conv1d_backward, conv1d_forward, conv2d_backward, conv2d_forward, dense_backward,
    dense_forward, maxpool1d, maxpool2d, maxpool_backward, relu, relu_backward, sigmoid,
    ConvGrads, DenseGrads, Pooled,
};
pub use loss::{bce_grad, bce_logit_grad, bce_loss, PROB_CLAMP};
pub use tensor::Tensor;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

pub trait Real:
    Float + Sum + AddAssign + SubAssign + MulAssign + Debug + Display + Default + Send + Sync + 'static
{
    fn of_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn of_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}
