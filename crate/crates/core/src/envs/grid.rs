//! Tabular episodic grid worlds. Each one is built as an explicit
//! [`TabularMdp`] so that `Q*` and exact policy values are available.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mdp::{sample_index, TabularMdp};
use crate::SeedRng;

use super::{EnvStep, EpisodicEnv, Transition};

/// Episodic wrapper around a tabular MDP with a start distribution and a
/// step cap.
#[derive(Debug, Clone)]
pub struct TabularEnv {
    mdp: TabularMdp,
    start: Vec<f64>,
    max_steps: usize,
    rng: SeedRng,
    state: usize,
    steps: usize,
    done: bool,
}

impl TabularEnv {
    pub fn new(mdp: TabularMdp, start: Vec<f64>, max_steps: usize, seed: u64) -> Result<Self> {
        if start.len() != mdp.n_states() {
            return Err(Error::DimensionMismatch {
                expected: mdp.n_states(),
                got: start.len(),
            });
        }
        let total: f64 = start.iter().sum();
        if start.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("start distribution must be a probability vector".into()));
        }
        if max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        Ok(Self {
            mdp,
            start,
            max_steps,
            rng: crate::seeded_rng(seed),
            state: 0,
            steps: 0,
            // Force a reset before the first step.
            done: true,
        })
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    /// Replaces the generator and forces a reset before the next step.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = crate::seeded_rng(seed);
        self.done = true;
    }

    pub fn start_distribution(&self) -> &[f64] {
        &self.start
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// True once the episode reached a terminal state or the step cap.
    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Expected value of `v` under the start distribution.
    pub fn start_value(&self, v: &[f64]) -> f64 {
        self.start.iter().zip(v).map(|(p, v)| p * v).sum()
    }

    pub fn reset_state(&mut self) -> usize {
        self.state = sample_index(&self.start, &mut self.rng);
        self.steps = 0;
        self.done = false;
        self.state
    }

    pub fn step_state(&mut self, action: usize) -> Result<Transition> {
        if self.done {
            return Err(Error::StepAfterDone);
        }
        if action >= self.mdp.n_actions() {
            return Err(Error::OutOfRange {
                what: "action",
                index: action,
                limit: self.mdp.n_actions(),
            });
        }
        let s = self.state;
        let s_next = self.mdp.sample_next(s, action, &mut self.rng);
        let r = self.mdp.transition_reward(s, action, s_next);
        let terminal = self.mdp.is_terminal(s_next);
        self.state = s_next;
        self.steps += 1;
        self.done = terminal || self.steps >= self.max_steps;
        Ok(Transition::new(s, action, r, s_next, terminal))
    }

    fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.mdp.n_states()];
        v[s] = 1.0;
        v
    }
}

impl EpisodicEnv for TabularEnv {
    fn obs_dim(&self) -> usize {
        self.mdp.n_states()
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn reset(&mut self) -> Vec<f64> {
        let s = self.reset_state();
        self.one_hot(s)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep> {
        let t = self.step_state(action)?;
        Ok(EnvStep {
            obs: self.one_hot(t.s_next),
            reward: t.r,
            terminal: t.done,
            truncated: self.done && !t.done,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    FrozenLake,
    CliffWalk,
    TaxiLite,
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frozenlake" => Ok(Self::FrozenLake),
            "cliffwalk" => Ok(Self::CliffWalk),
            "taxi_lite" => Ok(Self::TaxiLite),
            other => Err(Error::InvalidArgument(format!(
                "unknown grid world {other:?} (expected frozenlake, cliffwalk or taxi_lite)"
            ))),
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FrozenLake => "frozenlake",
            Self::CliffWalk => "cliffwalk",
            Self::TaxiLite => "taxi_lite",
        })
    }
}

/// Grid-world knobs. `slip` only affects FrozenLake: the intended move
/// happens with probability `1 - slip`, each perpendicular move with
/// `slip / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub slip: f64,
    pub gamma: f64,
    pub max_steps: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            slip: 0.0,
            gamma: 0.99,
            max_steps: 200,
        }
    }
}

pub fn gridworld(kind: GridKind, params: GridParams, seed: u64) -> Result<TabularEnv> {
    match kind {
        GridKind::FrozenLake => frozenlake(params, seed),
        GridKind::CliffWalk => cliffwalk(params, seed),
        GridKind::TaxiLite => taxi_lite(params, seed),
    }
}

const LAKE: [&str; 4] = ["SFFF", "FHFH", "FFFH", "HFFG"];

/// 4x4 FrozenLake. Actions: 0 left, 1 down, 2 right, 3 up. Holes and the
/// goal are terminal; reaching the goal pays 1, everything else 0.
pub fn frozenlake(params: GridParams, seed: u64) -> Result<TabularEnv> {
    if !(0.0..=1.0).contains(&params.slip) {
        return Err(Error::InvalidArgument(format!("slip must lie in [0, 1], got {}", params.slip)));
    }
    let (rows, cols) = (4usize, 4usize);
    let n = rows * cols;
    let cell = |s: usize| LAKE[s / cols].as_bytes()[s % cols];
    let terminal: Vec<bool> = (0..n).map(|s| matches!(cell(s), b'H' | b'G')).collect();
    let moves: [(isize, isize); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];
    let shift = |s: usize, a: usize| -> usize {
        let (dr, dc) = moves[a];
        let r = (s / cols) as isize + dr;
        let c = (s % cols) as isize + dc;
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            s
        } else {
            r as usize * cols + c as usize
        }
    };

    let mut trans = vec![0.0; 4 * n * n];
    let mut rsas = vec![0.0; 4 * n * n];
    for a in 0..4 {
        for s in 0..n {
            let base = (a * n + s) * n;
            if terminal[s] {
                trans[base + s] = 1.0;
                continue;
            }
            let outcomes = [
                (a, 1.0 - params.slip),
                ((a + 1) % 4, params.slip / 2.0),
                ((a + 3) % 4, params.slip / 2.0),
            ];
            for (dir, p) in outcomes {
                if p > 0.0 {
                    trans[base + shift(s, dir)] += p;
                }
            }
            for s2 in 0..n {
                if cell(s2) == b'G' {
                    rsas[base + s2] = 1.0;
                }
            }
        }
    }
    let mdp = TabularMdp::with_transition_rewards(n, 4, trans, rsas, params.gamma, terminal)?;
    let mut start = vec![0.0; n];
    start[0] = 1.0;
    TabularEnv::new(mdp, start, params.max_steps, seed)
}

/// 4x12 CliffWalk. Actions: 0 up, 1 right, 2 down, 3 left. Start is the
/// bottom-left cell, goal the bottom-right (terminal). Each step costs 1;
/// stepping onto the cliff costs 100 and sends the agent back to start
/// without ending the episode.
pub fn cliffwalk(params: GridParams, seed: u64) -> Result<TabularEnv> {
    let (rows, cols) = (4usize, 12usize);
    let n = rows * cols;
    let start_state = 3 * cols;
    let goal = 3 * cols + cols - 1;
    let is_cliff = |s: usize| s / cols == 3 && (1..cols - 1).contains(&(s % cols));
    let moves: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

    let mut terminal = vec![false; n];
    terminal[goal] = true;
    let mut trans = vec![0.0; 4 * n * n];
    let mut rsas = vec![0.0; 4 * n * n];
    for (a, (dr, dc)) in moves.iter().enumerate() {
        for s in 0..n {
            let base = (a * n + s) * n;
            if s == goal {
                trans[base + s] = 1.0;
                continue;
            }
            let r = ((s / cols) as isize + dr).clamp(0, rows as isize - 1) as usize;
            let c = ((s % cols) as isize + dc).clamp(0, cols as isize - 1) as usize;
            let target = r * cols + c;
            if is_cliff(target) {
                trans[base + start_state] = 1.0;
                rsas[base + start_state] = -100.0;
            } else {
                trans[base + target] = 1.0;
                rsas[base + target] = -1.0;
            }
        }
    }
    let mdp = TabularMdp::with_transition_rewards(n, 4, trans, rsas, params.gamma, terminal)?;
    let mut start = vec![0.0; n];
    start[start_state] = 1.0;
    TabularEnv::new(mdp, start, params.max_steps, seed)
}

const DEPOTS: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 3)];
const TAXI_DEST: usize = 1;
const IN_TAXI: usize = 4;

/// Reduced Taxi on the classic 5x5 map with its four depots. The
/// destination is fixed to depot 1 (top-right), which cuts the state
/// space to `25 * 5 + 1 = 126`: taxi cell times passenger location (a
/// depot or in the taxi), plus one terminal "delivered" state (index 125).
///
/// Actions: 0 south, 1 north, 2 east, 3 west, 4 pickup, 5 dropoff. Every
/// move costs 1, a wrong pickup or dropoff costs 10, delivering at the
/// destination pays 20 and ends the episode. Episodes start with the
/// passenger at one of the three other depots and the taxi anywhere.
pub fn taxi_lite(params: GridParams, seed: u64) -> Result<TabularEnv> {
    let n = 25 * 5 + 1;
    let delivered = n - 1;
    let idx = |row: usize, col: usize, pass: usize| (row * 5 + col) * 5 + pass;
    // Wall between (row, col) and (row, col + 1).
    let wall_east = |row: usize, col: usize| {
        matches!((row, col), (0, 1) | (1, 1) | (3, 0) | (4, 0) | (3, 2) | (4, 2))
    };

    let mut terminal = vec![false; n];
    terminal[delivered] = true;
    let mut trans = vec![0.0; 6 * n * n];
    let mut rsas = vec![0.0; 6 * n * n];
    for a in 0..6 {
        trans[(a * n + delivered) * n + delivered] = 1.0;
        for row in 0..5 {
            for col in 0..5 {
                for pass in 0..5 {
                    let s = idx(row, col, pass);
                    let depot_here = DEPOTS.iter().position(|&d| d == (row, col));
                    let (next, r) = match a {
                        0 => (idx((row + 1).min(4), col, pass), -1.0),
                        1 => (idx(row.saturating_sub(1), col, pass), -1.0),
                        2 if col < 4 && !wall_east(row, col) => (idx(row, col + 1, pass), -1.0),
                        3 if col > 0 && !wall_east(row, col - 1) => (idx(row, col - 1, pass), -1.0),
                        2 | 3 => (s, -1.0),
                        4 => match depot_here {
                            Some(d) if d == pass => (idx(row, col, IN_TAXI), -1.0),
                            _ => (s, -10.0),
                        },
                        _ => match (pass, depot_here) {
                            (IN_TAXI, Some(TAXI_DEST)) => (delivered, 20.0),
                            (IN_TAXI, Some(d)) => (idx(row, col, d), -1.0),
                            _ => (s, -10.0),
                        },
                    };
                    let base = (a * n + s) * n;
                    trans[base + next] = 1.0;
                    rsas[base + next] = r;
                }
            }
        }
    }
    let mdp = TabularMdp::with_transition_rewards(n, 6, trans, rsas, params.gamma, terminal)?;
    let mut start = vec![0.0; n];
    for cell in 0..25 {
        for pass in (0..4).filter(|&p| p != TAXI_DEST) {
            start[cell * 5 + pass] = 1.0 / 75.0;
        }
    }
    TabularEnv::new(mdp, start, params.max_steps, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{greedy_policy, optimal_q, policy_value};

    fn deterministic() -> GridParams {
        GridParams {
            slip: 0.0,
            ..GridParams::default()
        }
    }

    #[test]
    fn cliff_costs_100_and_returns_to_start() {
        let mut env = cliffwalk(deterministic(), 0).unwrap();
        assert_eq!(env.reset_state(), 36);
        let t = env.step_state(1).unwrap();
        assert_eq!((t.r, t.s_next, t.done), (-100.0, 36, false));
        assert!(!env.is_done());
        let t = env.step_state(0).unwrap();
        assert_eq!((t.r, t.s_next), (-1.0, 24));
    }

    #[test]
    fn cliffwalk_optimal_value_follows_edge() {
        let env = cliffwalk(deterministic(), 0).unwrap();
        let mdp = env.mdp();
        let q = optimal_q(mdp, 1e-10);
        let v = policy_value(mdp, &greedy_policy(&q));
        // 13 steps of -1 along the cliff edge.
        let g: f64 = mdp.gamma();
        let want: f64 = -(0..13).map(|k| g.powi(k)).sum::<f64>();
        assert!((env.start_value(&v) - want).abs() < 1e-8);
    }

    #[test]
    fn frozenlake_deterministic_return_is_goal_reward() {
        let mut env = frozenlake(deterministic(), 0).unwrap();
        let pi = greedy_policy(&optimal_q(env.mdp(), 1e-10));
        let mut s = env.reset_state();
        let mut ret = 0.0;
        while !env.is_done() {
            let t = env.step_state(pi.action(s)).unwrap();
            ret += t.r;
            s = t.s_next;
        }
        assert_eq!(ret, 1.0);
        assert!(env.mdp().is_terminal(s));
    }

    #[test]
    fn frozenlake_shortest_path_discounting() {
        let env = frozenlake(deterministic(), 0).unwrap();
        let q = optimal_q(env.mdp(), 1e-12);
        // Six moves, reward on the last: gamma^5.
        assert!((q.max(0) - 0.99f64.powi(5)).abs() < 1e-9);
    }

    #[test]
    fn frozenlake_slip_rows() {
        let env = frozenlake(
            GridParams {
                slip: 2.0 / 3.0,
                ..deterministic()
            },
            0,
        )
        .unwrap();
        // From start moving right: right w.p. 1/3, down 1/3, up (wall, stay) 1/3.
        let row = env.mdp().row(0, 2);
        assert!((row[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((row[4] - 1.0 / 3.0).abs() < 1e-12);
        assert!((row[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!(frozenlake(GridParams { slip: 1.5, ..deterministic() }, 0).is_err());
    }

    #[test]
    fn taxi_lite_layout() {
        let mut env = taxi_lite(deterministic(), 5).unwrap();
        assert_eq!(env.mdp().n_states(), 126);
        assert_eq!(env.mdp().n_actions(), 6);
        let s = env.reset_state();
        assert_ne!(s % 5, IN_TAXI);
        assert_ne!(s % 5, TAXI_DEST);
        let q = optimal_q(env.mdp(), 1e-10);
        // Taxi at the destination (0,4) with the passenger aboard.
        let s = 4 * 5 + IN_TAXI;
        assert!((q.get(s, 5) - 20.0).abs() < 1e-12);
        assert!(q.max(0) > 0.0);
    }

    #[test]
    fn taxi_walls_block_moves() {
        let env = taxi_lite(deterministic(), 0).unwrap();
        // (0,1) east is walled, (0,2) west is walled.
        let s = 5;
        assert_eq!(env.mdp().p(s, 2, s), 1.0);
        let s = 2 * 5;
        assert_eq!(env.mdp().p(s, 3, s), 1.0);
    }

    #[test]
    fn step_after_done_is_rejected() {
        let mut env = frozenlake(deterministic(), 0).unwrap();
        assert_eq!(env.step_state(0).unwrap_err(), Error::StepAfterDone);
        env.reset_state();
        // Down twice then... (1,0) then (2,0); right to (2,1), down to (3,1),
        // right (3,2), right (3,3) = goal.
        for a in [1, 1, 2, 1, 2] {
            assert!(!env.step_state(a).unwrap().done);
        }
        let t = env.step_state(2).unwrap();
        assert!(t.done);
        assert_eq!(t.r, 1.0);
        assert_eq!(env.step_state(0).unwrap_err(), Error::StepAfterDone);
    }

    #[test]
    fn truncation_is_not_terminal() {
        let mut env = cliffwalk(GridParams { max_steps: 3, ..deterministic() }, 0).unwrap();
        env.reset();
        for _ in 0..2 {
            assert!(!EpisodicEnv::step(&mut env, 0).unwrap().done());
        }
        let last = EpisodicEnv::step(&mut env, 0).unwrap();
        assert!(last.truncated && !last.terminal);
    }

    #[test]
    fn seeded_trajectories_repeat() {
        let run = |seed| {
            let mut env = frozenlake(GridParams { slip: 0.5, ..deterministic() }, seed).unwrap();
            let mut out = vec![env.reset_state()];
            for k in 0..40 {
                if env.is_done() {
                    out.push(env.reset_state());
                }
                out.push(env.step_state(k % 4).unwrap().s_next);
            }
            out
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("cliffwalk".parse::<GridKind>().unwrap(), GridKind::CliffWalk);
        assert!("mountaincar".parse::<GridKind>().is_err());
        assert_eq!(GridKind::TaxiLite.to_string(), "taxi_lite");
    }
}
