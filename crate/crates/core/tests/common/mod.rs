//! Oracles shared by the integration tests. Everything here is written
//! against the public API only and recomputes quantities independently of
//! the library code it checks.

#![allow(dead_code)]

use gtt_core::envs::Transition;
use gtt_core::nn::{Batch, Mlp};
use gtt_core::{QPair, QTable, TabularMdp};
use rand::Rng;

/// Single linear layer without bias whose weight `W[s, a]` is `Q(s, a)`,
/// so that a one-hot input for `s` outputs the row `Q(s, .)`.
pub fn one_hot_net(q: &QTable) -> Mlp {
    let (ns, na) = (q.n_states(), q.n_actions());
    let mut net = Mlp::zeros(&[ns, na], false).unwrap();
    for s in 0..ns {
        for a in 0..na {
            net.weights_mut()[0][(s, a)] = q.get(s, a);
        }
    }
    net
}

pub fn table_of(net: &Mlp) -> QTable {
    let w = &net.weights()[0];
    let (ns, na) = w.dim();
    let mut q = QTable::zeros(ns, na);
    for s in 0..ns {
        for a in 0..na {
            q.set(s, a, w[(s, a)]);
        }
    }
    q
}

pub fn one_hot(s: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[s] = 1.0;
    v
}

pub fn one_hot_batch(ts: &[Transition], n_states: usize) -> Batch {
    let rows: Vec<_> = ts
        .iter()
        .map(|t| (one_hot(t.s, n_states), t.a, t.r, one_hot(t.s_next, n_states), t.done))
        .collect();
    Batch::from_rows(n_states, &rows).unwrap()
}

/// Batch-averaged tabular update: every transition applies `step` with
/// step size `alpha / |B|` to a fresh copy of the pre-update pair, and the
/// resulting increments are summed.
pub fn batched_tabular_update(
    pair: &QPair,
    ts: &[Transition],
    alpha: f64,
    step: impl Fn(&mut QPair, &Transition, f64) -> gtt_core::Result<()>,
) -> QPair {
    let m = ts.len() as f64;
    let mut out = pair.clone();
    for t in ts {
        let mut p = pair.clone();
        step(&mut p, t, alpha / m).unwrap();
        for (dst, (new, old)) in out.q_a.values_mut().iter_mut().zip(p.q_a.values().iter().zip(pair.q_a.values())) {
            *dst += new - old;
        }
        for (dst, (new, old)) in out.q_b.values_mut().iter_mut().zip(p.q_b.values().iter().zip(pair.q_b.values())) {
            *dst += new - old;
        }
    }
    out
}

pub fn random_transitions<R: Rng>(rng: &mut R, mdp: &TabularMdp, m: usize) -> Vec<Transition> {
    (0..m)
        .map(|_| {
            let s = rng.random_range(0..mdp.n_states());
            let a = rng.random_range(0..mdp.n_actions());
            let s_next = mdp.sample_next(s, a, rng);
            Transition::new(s, a, mdp.reward(s, a), s_next, rng.random_bool(0.2))
        })
        .collect()
}

/// Central finite differences of `f` with respect to every trainable
/// parameter of `net`.
pub fn numeric_grad(net: &Mlp, h: f64, f: impl Fn(&Mlp) -> f64) -> Vec<f64> {
    let base = net.params();
    let mut probe = net.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_params(&p).unwrap();
        let up = f(&probe);
        p[i] = base[i] - h;
        probe.set_params(&p).unwrap();
        let down = f(&probe);
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// `||a - n|| / (||a|| + ||n||)`, zero when both vanish.
pub fn relative_error(a: &[f64], n: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(n).map(|(x, y)| x - y).collect();
    let denom = norm(a) + norm(n);
    if denom == 0.0 {
        0.0
    } else {
        norm(&diff) / denom
    }
}

pub fn random_batch<R: Rng>(rng: &mut R, m: usize, dim: usize, n_actions: usize) -> Batch {
    let rows: Vec<_> = (0..m)
        .map(|_| {
            let o: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            (o, rng.random_range(0..n_actions), rng.random_range(-1.0..1.0), n, rng.random_bool(0.25))
        })
        .collect();
    Batch::from_rows(dim, &rows).unwrap()
}
