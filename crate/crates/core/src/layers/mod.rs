//! Differentiable building blocks, each with an explicit forward and backward pass.

pub mod activation;
pub mod concat;
pub mod conv;
mod conv_kernel;
pub mod dense;
pub mod pool;

pub use activation::{relu_backward, relu_forward, sigmoid, sigmoid_backward, sigmoid_forward};
pub use concat::{concat_channels, split_channels};
pub use conv::{conv2d_backward, conv2d_forward, ConvShape};
pub use dense::{dense_backward, dense_forward};
pub use pool::{
    global_avg_pool_backward, global_avg_pool_forward, maxpool2_backward, maxpool2_forward, upsample2_backward,
    upsample2_forward, MaxPoolRecord,
};
