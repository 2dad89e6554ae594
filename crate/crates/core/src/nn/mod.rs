//! Minimal reverse-mode differentiation and optimization: dense layers,
//! MLPs, Adam with per-group learning rates, and finite-difference
//! gradient verification.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod mlp;
pub mod param;
pub mod tape;

pub use adam::{AdamState, GroupRates, Scheduler};
pub use checkpoint::{Checkpoint, CheckpointTensor};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use mlp::{Mlp, MlpSpec};
pub use param::{ParamGroup, ParamId, ParamStore};
pub use tape::{sigmoid, Activation, NodeId, Tape};
