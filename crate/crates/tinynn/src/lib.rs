//! Minimal neural-network core: hashed caption features, ReLU MLPs with
//! hand-written backpropagation, Adam, and checkpoint files.
//!
//! Everything runs in `f64` on the CPU. The networks are small enough that
//! per-sample loops are fast, and double precision keeps finite-difference
//! gradient checks meaningful.

pub mod adam;
pub mod checkpoint;
pub mod features;
pub mod gradcheck;
pub mod mlp;

pub use adam::{clip_grad_norm, global_norm, Adam, StepOutcome};
pub use checkpoint::{Checkpoint, CheckpointError};
pub use features::{featurize_caption, fnv1a, tokenize, SparseVec, CAPTION_DIM};
pub use mlp::{log_softmax, sigmoid, softmax, softplus, Cache, Head, Input, Mlp};
