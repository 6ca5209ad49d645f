//! From-scratch neural function approximation for deep Q-learning.

pub mod dqn;
pub mod mlp;
pub mod replay;

pub use dqn::{train, DeepAlgorithm, DeepConfig, DeepRun};
pub use mlp::{Grads, Mlp, Optimizer, OptimizerKind};
pub use replay::{Batch, ReplayBuffer, TransitionRow};
