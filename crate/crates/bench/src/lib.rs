//! Fixtures shared by the benchmarks.

use gtt_core::envs::{random_mdp, Transition};
use gtt_core::nn::{Batch, Mlp, ReplayBuffer};
use gtt_core::{seeded_rng, QPair, QTable, TabularMdp};
use rand::Rng;

/// Random `n x m` MDP with `gamma = 0.9`.
pub fn mdp(n_states: usize, n_actions: usize) -> TabularMdp {
    random_mdp(n_states, n_actions, 0.9, 0).expect("positive sizes")
}

/// Independent uniform tables matching `mdp`.
pub fn pair(mdp: &TabularMdp) -> QPair {
    let mut rng = seeded_rng(1);
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    QPair {
        q_a: QTable::random(n, m, 0.0, 1.0, &mut rng),
        q_b: QTable::random(n, m, 0.0, 1.0, &mut rng),
    }
}

/// `count` transitions sampled uniformly over state-action pairs.
pub fn transitions(mdp: &TabularMdp, count: usize) -> Vec<Transition> {
    let mut rng = seeded_rng(2);
    (0..count)
        .map(|_| {
            let s = rng.random_range(0..mdp.n_states());
            let a = rng.random_range(0..mdp.n_actions());
            let s_next = mdp.sample_next(s, a, &mut rng);
            Transition::new(s, a, mdp.reward(s, a), s_next, false)
        })
        .collect()
}

/// Cart-pole sized network: 4 inputs, `hidden`, 2 outputs.
pub fn network(hidden: &[usize]) -> Mlp {
    let mut sizes = vec![4];
    sizes.extend_from_slice(hidden);
    sizes.push(2);
    Mlp::new(&sizes, true, &mut seeded_rng(3)).expect("positive widths")
}

/// A batch of random 4-dimensional transitions.
pub fn batch(size: usize) -> Batch {
    let mut rng = seeded_rng(4);
    let mut buf = ReplayBuffer::new(size, 4).expect("positive capacity");
    for _ in 0..size {
        let obs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let next: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        buf.push(&obs, rng.random_range(0..2), 1.0, &next, rng.random_bool(0.05))
            .expect("matching sizes");
    }
    buf.sample(size, &mut rng).expect("buffer is full")
}
