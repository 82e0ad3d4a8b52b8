//! Dense tensors, a reverse-mode autodiff tape and the Adam optimizer.

pub mod adam;
pub mod graph;
pub mod tensor;

pub use adam::{Adam, AdamParams};
pub use graph::{Gradients, Graph, NodeId, Op};
pub use tensor::{Scalar, Tensor};
