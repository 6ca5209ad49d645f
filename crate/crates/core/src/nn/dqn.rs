//! Deep Q-learning losses and training loops: DQN with a periodically
//! copied target network, and the asymmetric (`agt2`) and symmetric
//! (`sgt2`) gradient target-tracking variants where the second network is
//! trained by gradient descent instead of being copied.
//!
//! All losses are averages over a mini-batch `B` and use the target
//! `y = r + 1(s') gamma max_a Q_boot(s', a)`, treated as a constant.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::envs::EpisodicEnv;
use crate::error::{Error, Result};
use crate::tabular::EpsilonSchedule;

use super::mlp::{Grads, Mlp, Optimizer, OptimizerKind};
use super::replay::{Batch, ReplayBuffer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeepAlgorithm {
    Dqn,
    Agt2,
    Sgt2,
}

impl FromStr for DeepAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dqn" => Ok(Self::Dqn),
            "agt2_dqn" => Ok(Self::Agt2),
            "sgt2_dqn" => Ok(Self::Sgt2),
            other => Err(Error::InvalidArgument(format!(
                "unknown deep algorithm {other:?} (expected dqn, agt2_dqn or sgt2_dqn)"
            ))),
        }
    }
}

impl fmt::Display for DeepAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dqn => "dqn",
            Self::Agt2 => "agt2_dqn",
            Self::Sgt2 => "sgt2_dqn",
        })
    }
}

/// A loss value and its gradient with respect to one network.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub grads: Grads,
}

fn check_batch(net: &Mlp, batch: &Batch) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if let Some(&a) = batch.actions.iter().find(|&&a| a >= net.output_dim()) {
        return Err(Error::OutOfRange {
            what: "action",
            index: a,
            limit: net.output_dim(),
        });
    }
    Ok(())
}

/// `y_i = r_i + 1(s'_i) gamma max_a boot(s'_i, a)`.
pub fn bootstrap_targets(boot: &Mlp, batch: &Batch, gamma: f64) -> Result<Vec<f64>> {
    let next_q = boot.forward(batch.next_obs.view())?;
    Ok(next_q
        .rows()
        .into_iter()
        .zip(&batch.rewards)
        .zip(&batch.terminal)
        .map(|((row, r), &term)| {
            if term {
                *r
            } else {
                r + gamma * row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect())
}

/// `Q(s_i, a_i)` for every batch row.
pub fn chosen_q(net: &Mlp, obs: ArrayView2<f64>, actions: &[usize]) -> Result<Vec<f64>> {
    let q = net.forward(obs)?;
    Ok(actions.iter().enumerate().map(|(i, &a)| q[(i, a)]).collect())
}

/// Backpropagates `dL/dQ(s_i, a_i) = coef[i]` through `net`.
fn grads_from_coefs(net: &Mlp, batch: &Batch, coef: impl Fn(usize, f64) -> f64) -> Result<(Vec<f64>, Grads)> {
    let cache = net.forward_cached(batch.obs.view())?;
    let out = cache.output();
    let q: Vec<f64> = batch.actions.iter().enumerate().map(|(i, &a)| out[(i, a)]).collect();
    let mut g = Array2::zeros(out.dim());
    for (i, &a) in batch.actions.iter().enumerate() {
        g[(i, a)] = coef(i, q[i]);
    }
    let grads = net.backward(&cache, g.view())?;
    Ok((q, grads))
}

/// DQN loss `(1/2)(1/|B|) sum (y - Q_online(s, a))^2` with `y` from
/// `target`; gradient with respect to `online` only.
pub fn dqn_loss_grad(online: &Mlp, target: &Mlp, batch: &Batch, gamma: f64) -> Result<LossGrad> {
    check_batch(online, batch)?;
    let y = bootstrap_targets(target, batch, gamma)?;
    let m = batch.len() as f64;
    let (q, grads) = grads_from_coefs(online, batch, |i, q| (q - y[i]) / m)?;
    let loss = q.iter().zip(&y).map(|(q, y)| (y - q) * (y - q)).sum::<f64>() / (2.0 * m);
    Ok(LossGrad { loss, grads })
}

/// Asymmetric losses, each differentiated with respect to its own network:
/// `L1(theta1) = (1/2)(1/|B|) sum (y1 - Q1)^2` with `y1` from `theta2`, and
/// `L2(theta2) = (beta/2)(1/|B|) sum (Q1 - Q2)^2` with `Q1` held fixed.
pub fn agt2_loss_grads(online: &Mlp, target: &Mlp, batch: &Batch, beta: f64, gamma: f64) -> Result<(LossGrad, LossGrad)> {
    check_batch(online, batch)?;
    let m = batch.len() as f64;
    let first = dqn_loss_grad(online, target, batch, gamma)?;
    let q1 = chosen_q(online, batch.obs.view(), &batch.actions)?;
    let (q2, g2) = grads_from_coefs(target, batch, |i, q2| -beta * (q1[i] - q2) / m)?;
    let l2 = 0.5 * beta * q1.iter().zip(&q2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / m;
    Ok((first, LossGrad { loss: l2, grads: g2 }))
}

/// Symmetric losses: `L1(theta1) = (1/2)(1/|B|) sum [(y1 - Q1)^2 + beta (Q2 - Q1)^2]`
/// with `y1` bootstrapped from `theta2`, and `L2` the mirror image.
pub fn sgt2_loss_grads(net1: &Mlp, net2: &Mlp, batch: &Batch, beta: f64, gamma: f64) -> Result<(LossGrad, LossGrad)> {
    check_batch(net1, batch)?;
    let m = batch.len() as f64;
    let y1 = bootstrap_targets(net2, batch, gamma)?;
    let y2 = bootstrap_targets(net1, batch, gamma)?;
    let q1 = chosen_q(net1, batch.obs.view(), &batch.actions)?;
    let q2 = chosen_q(net2, batch.obs.view(), &batch.actions)?;
    let loss = |y: &[f64], q: &[f64], other: &[f64]| {
        (0..y.len())
            .map(|i| (y[i] - q[i]).powi(2) + beta * (other[i] - q[i]).powi(2))
            .sum::<f64>()
            / (2.0 * m)
    };
    let (_, g1) = grads_from_coefs(net1, batch, |i, q| ((q - y1[i]) + beta * (q - q2[i])) / m)?;
    let (_, g2) = grads_from_coefs(net2, batch, |i, q| ((q - y2[i]) + beta * (q - q1[i])) / m)?;
    Ok((
        LossGrad {
            loss: loss(&y1, &q1, &q2),
            grads: g1,
        },
        LossGrad {
            loss: loss(&y2, &q2, &q1),
            grads: g2,
        },
    ))
}

/// Loss values only, `(L1, L2)` for the two-network variants and
/// `(L, 0)` for DQN. Used for finite-difference checks.
pub fn losses(algo: DeepAlgorithm, net1: &Mlp, net2: &Mlp, batch: &Batch, beta: f64, gamma: f64) -> Result<(f64, f64)> {
    check_batch(net1, batch)?;
    let m = batch.len() as f64;
    let y1 = bootstrap_targets(net2, batch, gamma)?;
    let q1 = chosen_q(net1, batch.obs.view(), &batch.actions)?;
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    match algo {
        DeepAlgorithm::Dqn => Ok((sq(&y1, &q1) / (2.0 * m), 0.0)),
        DeepAlgorithm::Agt2 => {
            let q2 = chosen_q(net2, batch.obs.view(), &batch.actions)?;
            Ok((sq(&y1, &q1) / (2.0 * m), 0.5 * beta * sq(&q1, &q2) / m))
        }
        DeepAlgorithm::Sgt2 => {
            let y2 = bootstrap_targets(net1, batch, gamma)?;
            let q2 = chosen_q(net2, batch.obs.view(), &batch.actions)?;
            let reg = sq(&q1, &q2);
            Ok(((sq(&y1, &q1) + beta * reg) / (2.0 * m), (sq(&y2, &q2) + beta * reg) / (2.0 * m)))
        }
    }
}

/// One plain gradient step `theta1 -= alpha grad L1`, `theta2 -= alpha grad L2`
/// with both gradients taken at the pre-update parameters.
pub fn agt2_dqn_step(online: &mut Mlp, target: &mut Mlp, batch: &Batch, alpha: f64, beta: f64, gamma: f64) -> Result<()> {
    let (g1, g2) = agt2_loss_grads(online, target, batch, beta, gamma)?;
    online.add_scaled(&g1.grads, -alpha);
    target.add_scaled(&g2.grads, -alpha);
    Ok(())
}

/// Symmetric counterpart of [`agt2_dqn_step`].
pub fn sgt2_dqn_step(net1: &mut Mlp, net2: &mut Mlp, batch: &Batch, alpha: f64, beta: f64, gamma: f64) -> Result<()> {
    let (g1, g2) = sgt2_loss_grads(net1, net2, batch, beta, gamma)?;
    net1.add_scaled(&g1.grads, -alpha);
    net2.add_scaled(&g2.grads, -alpha);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepConfig {
    pub algorithm: DeepAlgorithm,
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Environment steps collected before the first gradient step.
    pub warmup: usize,
    /// Environment steps per gradient step.
    pub train_every: usize,
    pub epsilon: EpsilonSchedule,
    pub episodes: usize,
    /// Hard-update period `C` in gradient steps (DQN only).
    pub period: usize,
    /// Tracking weight (target-tracking variants only).
    pub beta: f64,
    pub seed: u64,
}

impl Default for DeepConfig {
    fn default() -> Self {
        Self {
            algorithm: DeepAlgorithm::Dqn,
            hidden: vec![64, 64],
            optimizer: OptimizerKind::Sgd {
                lr: 1e-3,
                momentum: 0.0,
            },
            gamma: 0.99,
            batch_size: 64,
            buffer_capacity: 10_000,
            warmup: 64,
            train_every: 1,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_steps: 5000,
            },
            episodes: 300,
            period: 10,
            beta: 1.0,
            seed: 0,
        }
    }
}

impl DeepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.period == 0 {
            return bad("period must be at least 1".into());
        }
        if self.algorithm != DeepAlgorithm::Dqn && !(self.beta > 0.0) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        let lr = match self.optimizer {
            OptimizerKind::Sgd { lr, .. } | OptimizerKind::Adam { lr, .. } => lr,
        };
        if !(lr > 0.0) {
            return bad(format!("step size must be positive, got {lr}"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("need 0 < batch_size <= buffer_capacity".into());
        }
        if self.train_every == 0 {
            return bad("train_every must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must have positive width".into());
        }
        self.epsilon.validate()
    }
}

#[derive(Debug, Clone)]
pub struct DeepRun {
    pub episode_returns: Vec<f64>,
    /// Mean `L1` over the gradient steps of each episode (NaN when the
    /// episode had none).
    pub episode_losses: Vec<f64>,
    pub env_steps: u64,
    pub grad_steps: u64,
    pub online: Mlp,
    pub diverged: bool,
}

impl DeepRun {
    /// Mean return over the last `k` episodes (all of them if fewer).
    pub fn final_mean(&self, k: usize) -> f64 {
        let n = self.episode_returns.len();
        let tail = &self.episode_returns[n.saturating_sub(k)..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }
}

fn greedy(q: &[f64]) -> usize {
    let mut best = 0;
    for a in 1..q.len() {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// Runs `cfg.episodes` episodes of epsilon-greedy interaction (greedy in
/// the online network), one gradient step every `train_every` environment
/// steps once `max(warmup, batch_size)` transitions are stored.
/// Deterministic given `cfg.seed` and a deterministic environment.
pub fn train<E: EpisodicEnv + ?Sized>(env: &mut E, cfg: &DeepConfig) -> Result<DeepRun> {
    cfg.validate()?;
    let mut rng = crate::seeded_rng(cfg.seed);
    let mut sizes = vec![env.obs_dim()];
    sizes.extend(&cfg.hidden);
    sizes.push(env.n_actions());
    let mut net1 = Mlp::new(&sizes, true, &mut rng)?;
    let mut net2 = net1.clone();
    let mut opt1 = Optimizer::new(cfg.optimizer, &net1);
    let mut opt2 = Optimizer::new(cfg.optimizer, &net2);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, env.obs_dim())?;
    let learn_from = cfg.warmup.max(cfg.batch_size);

    let mut run = DeepRun {
        episode_returns: Vec::with_capacity(cfg.episodes),
        episode_losses: Vec::with_capacity(cfg.episodes),
        env_steps: 0,
        grad_steps: 0,
        online: net1.clone(),
        diverged: false,
    };

    'episodes: for _ in 0..cfg.episodes {
        let mut obs = env.reset();
        let mut ret = 0.0;
        let (mut loss_sum, mut loss_count) = (0.0, 0u32);
        loop {
            let eps = cfg.epsilon.at(run.env_steps);
            let action = if rng.random::<f64>() < eps {
                rng.random_range(0..env.n_actions())
            } else {
                greedy(&net1.predict(&obs)?)
            };
            let step = env.step(action)?;
            ret += step.reward;
            buffer.push(&obs, action, step.reward, &step.obs, step.terminal)?;
            run.env_steps += 1;

            if buffer.len() >= learn_from && run.env_steps.is_multiple_of(cfg.train_every as u64) {
                let batch = buffer.sample(cfg.batch_size, &mut rng)?;
                let l1 = match cfg.algorithm {
                    DeepAlgorithm::Dqn => {
                        let lg = dqn_loss_grad(&net1, &net2, &batch, cfg.gamma)?;
                        opt1.step(&mut net1, &lg.grads);
                        lg.loss
                    }
                    DeepAlgorithm::Agt2 => {
                        let (g1, g2) = agt2_loss_grads(&net1, &net2, &batch, cfg.beta, cfg.gamma)?;
                        opt1.step(&mut net1, &g1.grads);
                        opt2.step(&mut net2, &g2.grads);
                        g1.loss
                    }
                    DeepAlgorithm::Sgt2 => {
                        let (g1, g2) = sgt2_loss_grads(&net1, &net2, &batch, cfg.beta, cfg.gamma)?;
                        opt1.step(&mut net1, &g1.grads);
                        opt2.step(&mut net2, &g2.grads);
                        g1.loss
                    }
                };
                run.grad_steps += 1;
                loss_sum += l1;
                loss_count += 1;
                if cfg.algorithm == DeepAlgorithm::Dqn && run.grad_steps.is_multiple_of(cfg.period as u64) {
                    net2 = net1.clone();
                }
                if !l1.is_finite() || !net1.is_finite() || !net2.is_finite() {
                    run.diverged = true;
                    run.episode_returns.push(ret);
                    run.episode_losses.push(f64::NAN);
                    break 'episodes;
                }
            }
            let done = step.done();
            obs = step.obs;
            if done {
                break;
            }
        }
        run.episode_returns.push(ret);
        run.episode_losses.push(if loss_count > 0 { loss_sum / loss_count as f64 } else { f64::NAN });
    }
    run.online = net1;
    Ok(run)
}
