//! Cart-pole balancing with explicit Euler integration.

use rand::Rng;

use crate::error::{Error, Result};
use crate::SeedRng;

use super::{EnvStep, EpisodicEnv};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub length: f64,
    pub force: f64,
    pub tau: f64,
    pub theta_limit: f64,
    pub x_limit: f64,
    pub max_steps: usize,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            length: 0.5,
            force: 10.0,
            tau: 0.02,
            theta_limit: 12.0 * 2.0 * std::f64::consts::PI / 360.0,
            x_limit: 2.4,
            max_steps: 500,
        }
    }
}

/// `(x, x_dot, theta, theta_dot)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

/// Two actions: 0 pushes left, 1 pushes right. Reward 1 per step
/// (including the failing one); the episode is truncated after
/// `max_steps` steps.
#[derive(Debug, Clone)]
pub struct CartPole {
    params: CartPoleParams,
    rng: SeedRng,
    state: CartPoleState,
    steps: usize,
    done: bool,
}

impl CartPole {
    pub fn new(seed: u64) -> Self {
        Self::with_params(CartPoleParams::default(), seed)
    }

    pub fn with_params(params: CartPoleParams, seed: u64) -> Self {
        Self {
            params,
            rng: crate::seeded_rng(seed),
            state: CartPoleState::default(),
            steps: 0,
            done: true,
        }
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    /// Starts an episode from an exact state instead of a random one.
    pub fn reset_to(&mut self, state: CartPoleState) -> Vec<f64> {
        self.state = state;
        self.steps = 0;
        self.done = false;
        state.to_vec()
    }

    fn failed(&self) -> bool {
        let s = &self.state;
        s.x.abs() > self.params.x_limit || s.theta.abs() > self.params.theta_limit
    }
}

impl EpisodicEnv for CartPole {
    fn obs_dim(&self) -> usize {
        4
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn max_steps(&self) -> usize {
        self.params.max_steps
    }

    fn reset(&mut self) -> Vec<f64> {
        let mut draw = || self.rng.random_range(-0.05..0.05);
        let state = CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        self.reset_to(state)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep> {
        if self.done {
            return Err(Error::StepAfterDone);
        }
        if action >= 2 {
            return Err(Error::OutOfRange {
                what: "action",
                index: action,
                limit: 2,
            });
        }
        let p = &self.params;
        let force = if action == 1 { p.force } else { -p.force };
        let total_mass = p.mass_cart + p.mass_pole;
        let pole_ml = p.mass_pole * p.length;
        let CartPoleState {
            x,
            x_dot,
            theta,
            theta_dot,
        } = self.state;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_ml * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (p.gravity * sin - cos * temp)
            / (p.length * (4.0 / 3.0 - p.mass_pole * cos * cos / total_mass));
        let x_acc = temp - pole_ml * theta_acc * cos / total_mass;
        self.state = CartPoleState {
            x: x + p.tau * x_dot,
            x_dot: x_dot + p.tau * x_acc,
            theta: theta + p.tau * theta_dot,
            theta_dot: theta_dot + p.tau * theta_acc,
        };
        self.steps += 1;
        let terminal = self.failed();
        let truncated = !terminal && self.steps >= self.params.max_steps;
        self.done = terminal || truncated;
        Ok(EnvStep {
            obs: self.state.to_vec(),
            reward: 1.0,
            terminal,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_actions_keep_pole_up() {
        let mut env = CartPole::new(0);
        env.reset_to(CartPoleState::default());
        for k in 0..20 {
            let step = env.step(k % 2).unwrap();
            assert!(!step.terminal, "fell at step {k}");
            assert!(env.state().theta.abs() < env.params().theta_limit);
        }
    }

    #[test]
    fn single_euler_step_by_hand() {
        // From rest, pushing right: temp = 10/1.1, theta_acc = -cos*temp /
        // (0.5 * (4/3 - 0.1/1.1)); position and angle still zero after one
        // explicit Euler step because they use the old velocities.
        let mut env = CartPole::new(0);
        env.reset_to(CartPoleState::default());
        env.step(1).unwrap();
        let temp = 10.0 / 1.1;
        let theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
        let x_acc = temp - 0.05 * theta_acc / 1.1;
        let s = env.state();
        assert_eq!(s.x, 0.0);
        assert_eq!(s.theta, 0.0);
        assert!((s.x_dot - 0.02 * x_acc).abs() < 1e-15);
        assert!((s.theta_dot - 0.02 * theta_acc).abs() < 1e-15);
    }

    #[test]
    fn constant_push_fails_and_then_rejects_steps() {
        let mut env = CartPole::new(1);
        env.reset();
        let mut ret = 0.0;
        loop {
            let s = env.step(1).unwrap();
            ret += s.reward;
            if s.done() {
                assert!(s.terminal);
                break;
            }
        }
        assert!(ret < 500.0);
        assert_eq!(env.step(0).unwrap_err(), Error::StepAfterDone);
    }

    #[test]
    fn truncation_caps_return() {
        let mut env = CartPole::with_params(
            CartPoleParams {
                max_steps: 5,
                ..CartPoleParams::default()
            },
            0,
        );
        env.reset_to(CartPoleState::default());
        let mut ret = 0.0;
        for k in 0..5 {
            let s = env.step(k % 2).unwrap();
            ret += s.reward;
            assert_eq!(s.truncated, k == 4);
        }
        assert_eq!(ret, 5.0);
    }

    #[test]
    fn initial_state_range_and_determinism() {
        let mut a = CartPole::new(42);
        let mut b = CartPole::new(42);
        for _ in 0..10 {
            let oa = a.reset();
            assert_eq!(oa, b.reset());
            assert!(oa.iter().all(|v| v.abs() <= 0.05));
            for k in 0..30 {
                let sa = a.step(k % 2);
                let sb = b.step(k % 2);
                assert_eq!(sa, sb);
                if sa.map(|s| s.done()).unwrap_or(true) {
                    break;
                }
            }
        }
    }
}
