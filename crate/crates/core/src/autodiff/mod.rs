//! Minimal dense tensors with reverse-mode differentiation.
//!
//! The primitive set is deliberately small: dense affine maps, odd-sized
//! stride-1 convolutions, ReLU, 2x average pooling and its duplicating
//! adjoint, addition, scaling, channel concatenation and three scalar
//! reductions (mean squared error, Frobenius norm, sum). That is enough to
//! train the residual encoders and decoders of a multi-resolution U-Net.

mod gradcheck;
mod graph;
mod optim;
mod tensor;

pub use gradcheck::grad_check;
pub use graph::{Gradients, Graph, GraphNode, Layout, NodeId, Op};
pub use optim::{optimizer_step, OptimizerConfig, OptimizerState};
pub use tensor::Tensor;

use rand::Rng;

/// Uniform initialization in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn init_uniform<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Tensor::uniform(shape, bound, rng)
}
