//! Environments: the two-state example MDP, random MDP fixtures, episodic
//! grid worlds and CartPole.

mod cartpole;
mod grid;

pub use cartpole::{CartPole, CartPoleParams, CartPoleState};
pub use grid::{cliffwalk, frozenlake, gridworld, taxi_lite, GridKind, GridParams, TabularEnv};

use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{BehaviorDistribution, TabularMdp};

/// One observed transition `(s, a, r, s', done)`. `done` is set only when
/// `s'` is terminal; time-limit truncation is not terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
    pub done: bool,
}

impl Transition {
    pub fn new(s: usize, a: usize, r: f64, s_next: usize, done: bool) -> Self {
        Self { s, a, r, s_next, done }
    }

    /// `1(s')`.
    #[inline]
    pub fn bootstrap(&self) -> f64 {
        if self.done {
            0.0
        } else {
            1.0
        }
    }
}

/// Result of one environment step with a vector observation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// The next state is terminal (bootstrap disabled).
    pub terminal: bool,
    /// The episode hit its step cap without reaching a terminal state.
    pub truncated: bool,
}

impl EnvStep {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Episodic environment with vector observations, as consumed by the deep
/// learners. `step` after the episode ended fails with
/// [`Error::StepAfterDone`] until `reset` is called.
pub trait EpisodicEnv {
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn max_steps(&self) -> usize;
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<EnvStep>;
}

/// The two-state, two-action MDP with `gamma = 0.9` and its behaviour
/// distribution (uniform over states).
pub fn example_mdp() -> (TabularMdp, BehaviorDistribution) {
    // [a][s][s']
    let trans = vec![
        0.2, 0.8, 0.3, 0.7, // a0
        0.5, 0.5, 0.7, 0.3, // a1
    ];
    let reward = vec![3.0, 1.0, 2.0, 1.0];
    let mdp = TabularMdp::new(2, 2, trans, reward, 0.9, vec![false; 2])
        .expect("example MDP is valid");
    // b(a|s), state-major
    let beh = BehaviorDistribution::new(vec![0.5, 0.5], vec![0.2, 0.8, 0.7, 0.3], 2)
        .expect("example behaviour is valid");
    (mdp, beh)
}

/// Random MDP with flat-Dirichlet transition rows and rewards uniform in
/// `[0, 1]`. Deterministic in `seed`; no terminal states.
pub fn random_mdp(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> Result<TabularMdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidArgument(format!(
            "random MDP needs positive sizes, got {n_states}x{n_actions}"
        )));
    }
    let mut rng = crate::seeded_rng(seed);
    random_mdp_with(n_states, n_actions, gamma, &mut rng)
}

/// [`random_mdp`] drawing from a caller-owned generator.
pub fn random_mdp_with<R: Rng + ?Sized>(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<TabularMdp> {
    let mut trans = Vec::with_capacity(n_actions * n_states * n_states);
    for _ in 0..n_actions * n_states {
        // Normalized unit exponentials are a flat Dirichlet draw.
        let row: Vec<f64> = (0..n_states)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = row.iter().sum();
        let mut row: Vec<f64> = row.iter().map(|v| v / total).collect();
        // Push the rounding residue into the largest entry.
        let residue = 1.0 - row.iter().sum::<f64>();
        let imax = (0..n_states)
            .max_by(|&i, &j| row[i].total_cmp(&row[j]))
            .unwrap_or(0);
        row[imax] += residue;
        trans.extend(row);
    }
    let reward = (0..n_states * n_actions).map(|_| rng.random::<f64>()).collect();
    TabularMdp::new(n_states, n_actions, trans, reward, gamma, vec![false; n_states])
}
