//! Training with online caption annotations: the annotation subsystem,
//! intrinsic rewards, asynchronous PPO and the run orchestrator.

pub mod annotate;
pub mod appo;
pub mod orchestrator;
pub mod rewards;
