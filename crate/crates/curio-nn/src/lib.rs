//! Minimal deterministic neural-network engine.
//!
//! Fixed sequential layer stacks (dense, conv2d, elementwise activations and
//! parameter-free 2x2 resampling) with explicit forward traces, manual
//! backprop, Adam updates and a central finite-difference gradient checker.
//! Everything is double precision and seeded: the same spec, seed and input
//! sequence reproduce bit-identical parameters.

mod adam;
mod checkpoint;
mod error;
mod gradcheck;
mod layer;
mod loss;
mod network;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use checkpoint::CHECKPOINT_VERSION;
pub use error::{NnError, Result};
pub use gradcheck::{finite_diff_check, relative_error};
pub use layer::{Activation, LayerSpec};
pub use loss::{mse, sum_squared_error};
pub use network::{ForwardTrace, LayerParams, NetGrads, Network};
pub use tensor::Tensor;
