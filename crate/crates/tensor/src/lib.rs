//! Minimal n-dimensional tensor with reverse-mode automatic differentiation.
//!
//! The graph is recorded dynamically per forward pass (the recursive tree
//! decoder changes topology on every sample), stored as parent links plus
//! backward closures. f32 is the training element type; every operation is
//! also instantiated at f64 so gradients can be validated against central
//! finite differences.
//!
//! The operation set is deliberately small: 2-D convolution, batch norm,
//! PReLU, max pooling, fully connected, dropout, fractional-stride 3-D
//! convolution, view pooling, channel-wise max pooling, softmax, and the
//! handful of arithmetic primitives the losses are composed from.

mod gradcheck;
mod init;
pub mod ops;
mod optim;
mod params;
mod scalar;
mod tensor;

pub use gradcheck::grad_check;
pub use init::{const_param, kaiming_uniform, zeros_param};
pub use optim::{exponential_lr, Adam};
pub use params::ParamSet;
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Errors from checkpoint IO and numeric guards.
#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
