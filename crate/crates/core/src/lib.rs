//! Q-learning with gradient target tracking.
//!
//! The crate holds the tabular machinery (MDPs, Bellman operators, the
//! AGT2-QL / SGT2-QL learners and their baselines), the continuous-time ODE
//! models with their comparison systems and stability checks, the loss-based
//! optimality bounds, and a small from-scratch deep Q-learning stack used to
//! run DQN, AGT2-DQN and SGT2-DQN on cart-pole.
//!
//! Every Q-function vector uses the action-major enumeration
//! `index(s, a) = a * n_states + s`.

pub mod analysis;
pub mod envs;
pub mod error;
pub mod mdp;
pub mod nn;
pub mod ode;
pub mod record;
pub mod tabular;

pub use error::{Error, Result};
pub use envs::{EpisodicEnv, Transition};
pub use mdp::{BehaviorDistribution, PolicyMatrix, QTable, TabularMdp};
pub use nn::DeepAlgorithm;
pub use ode::{Learner, Method};
pub use record::{ExperimentRecord, RecordRow};
pub use tabular::{Algorithm, QPair};

/// Deterministic RNG used everywhere a seed is accepted.
pub type SeedRng = rand_chacha::ChaCha8Rng;

/// Builds the crate-wide RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeedRng {
    use rand::SeedableRng;
    SeedRng::seed_from_u64(seed)
}
