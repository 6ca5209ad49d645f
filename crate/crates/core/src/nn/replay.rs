//! Fixed-capacity ring buffer of vector-observation transitions.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

/// `(obs, action, reward, next_obs, terminal)`.
pub type TransitionRow = (Vec<f64>, usize, f64, Vec<f64>, bool);

/// A sampled mini-batch, one row per transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_obs: Array2<f64>,
    /// `true` when the next state is terminal (bootstrap disabled).
    pub terminal: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Builds a batch from explicit rows.
    pub fn from_rows(obs_dim: usize, rows: &[TransitionRow]) -> Result<Self> {
        let mut obs = Vec::with_capacity(rows.len() * obs_dim);
        let mut next = Vec::with_capacity(rows.len() * obs_dim);
        for (o, _, _, n, _) in rows {
            if o.len() != obs_dim || n.len() != obs_dim {
                return Err(Error::DimensionMismatch {
                    expected: obs_dim,
                    got: if o.len() != obs_dim { o.len() } else { n.len() },
                });
            }
            obs.extend_from_slice(o);
            next.extend_from_slice(n);
        }
        Ok(Self {
            obs: Array2::from_shape_vec((rows.len(), obs_dim), obs).expect("sizes checked"),
            actions: rows.iter().map(|r| r.1).collect(),
            rewards: rows.iter().map(|r| r.2).collect(),
            next_obs: Array2::from_shape_vec((rows.len(), obs_dim), next).expect("sizes checked"),
            terminal: rows.iter().map(|r| r.4).collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    obs: Vec<f64>,
    next_obs: Vec<f64>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    terminal: Vec<bool>,
    len: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Result<Self> {
        if capacity == 0 || obs_dim == 0 {
            return Err(Error::InvalidArgument("replay buffer needs positive capacity and observation size".into()));
        }
        Ok(Self {
            capacity,
            obs_dim,
            obs: vec![0.0; capacity * obs_dim],
            next_obs: vec![0.0; capacity * obs_dim],
            actions: vec![0; capacity],
            rewards: vec![0.0; capacity],
            terminal: vec![false; capacity],
            len: 0,
            head: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores a transition, overwriting the oldest once full.
    pub fn push(&mut self, obs: &[f64], action: usize, reward: f64, next_obs: &[f64], terminal: bool) -> Result<()> {
        if obs.len() != self.obs_dim || next_obs.len() != self.obs_dim {
            return Err(Error::DimensionMismatch {
                expected: self.obs_dim,
                got: obs.len().max(next_obs.len()),
            });
        }
        let i = self.head;
        let d = self.obs_dim;
        self.obs[i * d..(i + 1) * d].copy_from_slice(obs);
        self.next_obs[i * d..(i + 1) * d].copy_from_slice(next_obs);
        self.actions[i] = action;
        self.rewards[i] = reward;
        self.terminal[i] = terminal;
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
        Ok(())
    }

    /// Uniform sample with replacement of `size` stored transitions.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Batch> {
        if size == 0 || self.len < size {
            return Err(Error::InvalidArgument(format!(
                "cannot sample {size} transitions from a buffer holding {}",
                self.len
            )));
        }
        let d = self.obs_dim;
        let mut obs = Vec::with_capacity(size * d);
        let mut next = Vec::with_capacity(size * d);
        let mut actions = Vec::with_capacity(size);
        let mut rewards = Vec::with_capacity(size);
        let mut terminal = Vec::with_capacity(size);
        for _ in 0..size {
            let i = rng.random_range(0..self.len);
            obs.extend_from_slice(&self.obs[i * d..(i + 1) * d]);
            next.extend_from_slice(&self.next_obs[i * d..(i + 1) * d]);
            actions.push(self.actions[i]);
            rewards.push(self.rewards[i]);
            terminal.push(self.terminal[i]);
        }
        Ok(Batch {
            obs: Array2::from_shape_vec((size, d), obs).expect("sizes match"),
            actions,
            rewards,
            next_obs: Array2::from_shape_vec((size, d), next).expect("sizes match"),
            terminal,
        })
    }
}
