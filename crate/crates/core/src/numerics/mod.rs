//! Dense tensors, reverse-mode differentiation, Adam, and seeded randomness.

mod adam;
mod gradcheck;
mod graph;
mod rng;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::grad_check;
pub use graph::{Elementwise, Gradients, Graph, Reduce, Var, DEFAULT_LEAKY_SLOPE};
pub use rng::Rng;
pub use tensor::Tensor;

pub(crate) use graph::euclidean;
