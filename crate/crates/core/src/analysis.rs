//! Loss-based optimality bounds for the target-tracking learners and the
//! exact expected losses they are stated against.
//!
//! The expected losses average over `(s, a)` uniform on `S x A` and
//! `s' ~ P(.|s, a)`, computed by enumeration rather than sampling.

use crate::error::{Error, Result};
use crate::mdp::{policy_iteration, TabularMdp};
use crate::ode::Learner;
use crate::tabular::QPair;

fn check_pair(pair: &QPair, mdp: &TabularMdp) -> Result<()> {
    for q in [&pair.q_a, &pair.q_b] {
        if q.len() != mdp.n_pairs() || q.n_states() != mdp.n_states() {
            return Err(Error::DimensionMismatch {
                expected: mdp.n_pairs(),
                got: q.len(),
            });
        }
    }
    Ok(())
}

/// `E[(r + gamma 1(s') max_a' boot(s', a') - q(s, a))^2]` for each `(s, a)`,
/// in action-major order.
fn squared_bellman_residuals(mdp: &TabularMdp, q: &[f64], boot: &[f64]) -> Vec<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let next_max: Vec<f64> = (0..ns)
        .map(|s| {
            let m = (0..na).map(|a| boot[a * ns + s]).fold(f64::NEG_INFINITY, f64::max);
            mdp.bootstrap(s) * m
        })
        .collect();
    (0..na * ns)
        .map(|i| {
            let (s, a) = (i % ns, i / ns);
            (0..ns)
                .map(|s2| {
                    let p = mdp.p(s, a, s2);
                    if p == 0.0 {
                        return 0.0;
                    }
                    let err = mdp.transition_reward(s, a, s2) + mdp.gamma() * next_max[s2] - q[i];
                    p * err * err
                })
                .sum()
        })
        .collect()
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

/// Asymmetric learner:
/// `L1 = E[(r + gamma max q_b(s', .) - q_a(s, a))^2]`,
/// `L2 = E[(beta / 2) (q_a(s, a) - q_b(s, a))^2]`.
pub fn expected_losses_agt2(pair: &QPair, mdp: &TabularMdp, beta: f64) -> Result<(f64, f64)> {
    check_pair(pair, mdp)?;
    let (qa, qb) = (pair.q_a.values(), pair.q_b.values());
    let n = qa.len();
    let l1 = mean(squared_bellman_residuals(mdp, qa, qb).into_iter(), n);
    let l2 = mean(qa.iter().zip(qb).map(|(a, b)| 0.5 * beta * (a - b) * (a - b)), n);
    Ok((l1, l2))
}

/// Symmetric learner: each loss is its table's squared Bellman residual
/// (bootstrapped from the other table) plus `(beta / 2) (q_a - q_b)^2`.
pub fn expected_losses_sgt2(pair: &QPair, mdp: &TabularMdp, beta: f64) -> Result<(f64, f64)> {
    check_pair(pair, mdp)?;
    let (qa, qb) = (pair.q_a.values(), pair.q_b.values());
    let n = qa.len();
    let reg: Vec<f64> = qa.iter().zip(qb).map(|(a, b)| 0.5 * beta * (a - b) * (a - b)).collect();
    let r1 = squared_bellman_residuals(mdp, qa, qb);
    let r2 = squared_bellman_residuals(mdp, qb, qa);
    let l1 = mean(r1.iter().zip(&reg).map(|(r, g)| r + g), n);
    let l2 = mean(r2.iter().zip(&reg).map(|(r, g)| r + g), n);
    Ok((l1, l2))
}

pub fn expected_losses(pair: &QPair, mdp: &TabularMdp, beta: f64, learner: Learner) -> Result<(f64, f64)> {
    match learner {
        Learner::Agt2 => expected_losses_agt2(pair, mdp, beta),
        Learner::Sgt2 => expected_losses_sgt2(pair, mdp, beta),
    }
}

fn check_bound_inputs(epsilon: f64, beta: f64, gamma: f64, n_sa: usize) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if n_sa == 0 {
        return Err(Error::InvalidArgument("need at least one state-action pair".into()));
    }
    Ok(())
}

/// The `beta`-dependent term `gamma / (1 - gamma) * sqrt(2 eps n / beta)`,
/// which bounds the contribution of the gap between the two tables.
fn tracking_term(epsilon: f64, beta: f64, gamma: f64, n: f64) -> f64 {
    gamma / (1.0 - gamma) * (2.0 * epsilon * n / beta).sqrt()
}

/// Asymmetric-learner bounds `(online, target)`:
/// `sqrt(eps n) / (1 - gamma) + tracking` and
/// `2 sqrt(eps n) / (1 - gamma) + tracking`.
pub fn asymmetric_bound(epsilon: f64, beta: f64, gamma: f64, n_sa: usize) -> Result<(f64, f64)> {
    check_bound_inputs(epsilon, beta, gamma, n_sa)?;
    let n = n_sa as f64;
    let base = (epsilon * n).sqrt() / (1.0 - gamma);
    let track = tracking_term(epsilon, beta, gamma, n);
    Ok((base + track, 2.0 * base + track))
}

/// Symmetric-learner bound, shared by both tables.
pub fn symmetric_bound(epsilon: f64, beta: f64, gamma: f64, n_sa: usize) -> Result<f64> {
    check_bound_inputs(epsilon, beta, gamma, n_sa)?;
    let n = n_sa as f64;
    Ok((epsilon * n).sqrt() / (1.0 - gamma) + tracking_term(epsilon, beta, gamma, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub learner: Learner,
    pub l1: f64,
    pub l2: f64,
    /// `max(l1, l2)`.
    pub epsilon: f64,
    pub bound_q1: f64,
    pub bound_q2: f64,
    pub observed_err_q1: f64,
    pub observed_err_q2: f64,
}

impl BoundReport {
    pub fn satisfied_q1(&self) -> bool {
        self.observed_err_q1 <= self.bound_q1
    }

    pub fn satisfied_q2(&self) -> bool {
        self.observed_err_q2 <= self.bound_q2
    }

    pub fn satisfied(&self) -> bool {
        self.satisfied_q1() && self.satisfied_q2()
    }
}

/// Evaluates the losses of `pair`, the matching bound with
/// `eps = max(L1, L2)`, and the observed sup-norm errors against `Q*`.
pub fn verify_bounds(pair: &QPair, mdp: &TabularMdp, beta: f64, learner: Learner) -> Result<BoundReport> {
    let (l1, l2) = expected_losses(pair, mdp, beta, learner)?;
    let epsilon = l1.max(l2);
    let n = mdp.n_pairs();
    let (bound_q1, bound_q2) = match learner {
        Learner::Agt2 => asymmetric_bound(epsilon, beta, mdp.gamma(), n)?,
        Learner::Sgt2 => {
            let b = symmetric_bound(epsilon, beta, mdp.gamma(), n)?;
            (b, b)
        }
    };
    let (_, q_star) = policy_iteration(mdp);
    let (observed_err_q1, observed_err_q2) = pair.sup_errors(&q_star);
    Ok(BoundReport {
        learner,
        l1,
        l2,
        epsilon,
        bound_q1,
        bound_q2,
        observed_err_q1,
        observed_err_q2,
    })
}
