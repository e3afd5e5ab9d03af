//! Dense tensors, a first-order reverse-mode tape and finite-difference oracles.

mod fd;
mod tape;
mod tensor;

pub use fd::{finite_difference_gradient, hessian_vector_product};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;
