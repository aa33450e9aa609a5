//! Dense double-precision tensors with reverse-mode differentiation.
//!
//! Values live on a [`Tape`] as they are computed; [`Tape::backward`]
//! replays the recorded ops in reverse and returns the gradient of a scalar
//! loss with respect to every node. Trainable weights live in a
//! [`ParamStore`] and are copied onto a tape with [`Tape::param`], so the
//! gradients can be written back into the store's grad slots afterwards.
//!
//! All two-dimensional values are row-major. Vectors are `1 × n` rows.
//! There is no implicit broadcasting; bias addition and scalar scaling are
//! explicit ops.

pub mod gradcheck;
pub(crate) mod kernels;
mod params;
mod tape;
mod tensor;

pub use params::{ParamId, ParamStore};
pub use tape::{backward, Function, Gradients, Tape, Var};
pub use tensor::Tensor;
