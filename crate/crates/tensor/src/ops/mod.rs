//! The operation set: exactly the layers the networks require, each with a
//! hand-written backward pass.

pub mod activation;
pub mod arith;
pub mod conv;
pub mod conv3d;
pub mod linear;
pub mod norm;
pub mod pool;
pub mod vec3;

pub use activation::{prelu, sigmoid, softplus};
pub use arith::{
    add, add_scalar, concat, l2_norm, log_clamped, mean, mul, neg, reshape, scale, slice, sqrt_eps,
    sub, sum,
};
pub use conv::{conv2d, max_pool2d};
pub use conv3d::{conv3d_adjoint_reference, transposed_conv3d};
pub use linear::{add_last_dim_bias, fully_connected, gemm, matmul, matmul_nt};
pub use norm::{batch_norm, dropout, softmax, BatchStats, Mode};
pub use pool::{channel_max_pool, view_pool};
pub use vec3::{cross3, dot, normalize3};
