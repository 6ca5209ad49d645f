//! Finite MDPs, the stacked matrix notation, Bellman machinery and exact
//! oracles for `Q*`.
//!
//! Q-functions are stored action-major, `index(s, a) = a * |S| + s`, so that
//! `Q = [Q(., 0); ...; Q(., |A|-1)]` and the matrices `D`, `P` and `Pi` built
//! here are literal block matrices over that enumeration.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Enumerated Q-function, action-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    /// Wraps an action-major vector. Rejects wrong lengths and non-finite entries.
    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch {
                expected: n_states * n_actions,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Q entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    /// Entries drawn uniformly from `[lo, hi)`.
    pub fn random<R: Rng + ?Sized>(
        n_states: usize,
        n_actions: usize,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Self {
        let values = (0..n_states * n_actions)
            .map(|_| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        Self {
            n_states,
            n_actions,
            values,
        }
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize) -> usize {
        a * self.n_states + s
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[a * self.n_states + s]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        let i = a * self.n_states + s;
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Greedy action at `s`; ties go to the lowest action index.
    pub fn argmax(&self, s: usize) -> usize {
        let mut best = 0;
        let mut best_v = self.get(s, 0);
        for a in 1..self.n_actions {
            let v = self.get(s, a);
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }

    pub fn max(&self, s: usize) -> f64 {
        (0..self.n_actions)
            .map(|a| self.get(s, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `||self - other||_inf`.
    pub fn sup_dist(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    pub fn scaled(&self, c: f64) -> QTable {
        QTable {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Finite discounted MDP with per-action transition matrices.
///
/// Terminal states self-loop with zero reward; learners and the Bellman
/// operator additionally drop the bootstrap term when `s'` is terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `trans[(a * S + s) * S + s']`
    trans: Vec<f64>,
    /// Expected reward, action-major.
    reward: Vec<f64>,
    /// Optional `r(s, a, s')`, same layout as `trans`.
    reward_sas: Option<Vec<f64>>,
    gamma: f64,
    terminal: Vec<bool>,
}

impl TabularMdp {
    /// `trans` is laid out `[a][s][s']`, `reward` action-major `[a][s]`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        trans: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("need at least one state and one action".into()));
        }
        let sa = n_states * n_actions;
        if trans.len() != sa * n_states {
            return Err(Error::DimensionMismatch {
                expected: sa * n_states,
                got: trans.len(),
            });
        }
        if reward.len() != sa {
            return Err(Error::DimensionMismatch {
                expected: sa,
                got: reward.len(),
            });
        }
        if terminal.len() != n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states,
                got: terminal.len(),
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidMdp(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidMdp("rewards must be finite".into()));
        }
        for a in 0..n_actions {
            for s in 0..n_states {
                let row = &trans[(a * n_states + s) * n_states..(a * n_states + s + 1) * n_states];
                if row.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::InvalidMdp(format!(
                        "negative or NaN probability in P[a={a}][s={s}]"
                    )));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::InvalidMdp(format!(
                        "P[a={a}][s={s}] sums to {total}, not 1"
                    )));
                }
            }
        }
        for (s, &t) in terminal.iter().enumerate() {
            if !t {
                continue;
            }
            for a in 0..n_actions {
                let i = a * n_states + s;
                if trans[i * n_states + s] != 1.0 || reward[i] != 0.0 {
                    return Err(Error::InvalidMdp(format!(
                        "terminal state {s} must self-loop with zero reward"
                    )));
                }
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            trans,
            reward,
            reward_sas: None,
            gamma,
            terminal,
        })
    }

    /// Builds an MDP from per-transition rewards `r(s, a, s')` (layout
    /// `[a][s][s']`); the expected reward table is derived from them.
    pub fn with_transition_rewards(
        n_states: usize,
        n_actions: usize,
        trans: Vec<f64>,
        reward_sas: Vec<f64>,
        gamma: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        if reward_sas.len() != trans.len() {
            return Err(Error::DimensionMismatch {
                expected: trans.len(),
                got: reward_sas.len(),
            });
        }
        let reward = trans
            .chunks(n_states.max(1))
            .zip(reward_sas.chunks(n_states.max(1)))
            .map(|(p, r)| p.iter().zip(r).map(|(p, r)| p * r).sum())
            .collect();
        let mut mdp = Self::new(n_states, n_actions, trans, reward, gamma, terminal)?;
        mdp.reward_sas = Some(reward_sas);
        Ok(mdp)
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn p(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.trans[(a * self.n_states + s) * self.n_states + s_next]
    }

    /// Row `P(. | s, a)`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let i = a * self.n_states + s;
        &self.trans[i * self.n_states..(i + 1) * self.n_states]
    }

    /// Expected reward `R_a(s)`.
    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[a * self.n_states + s]
    }

    /// `r(s, a, s')`; falls back to the expected reward when the MDP only
    /// carries an expected-reward table.
    #[inline]
    pub fn transition_reward(&self, s: usize, a: usize, s_next: usize) -> f64 {
        match &self.reward_sas {
            Some(r) => r[(a * self.n_states + s) * self.n_states + s_next],
            None => self.reward(s, a),
        }
    }

    pub fn has_transition_rewards(&self) -> bool {
        self.reward_sas.is_some()
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    #[inline]
    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminals(&self) -> &[bool] {
        &self.terminal
    }

    /// Indicator `1(s')`: zero at terminal states.
    #[inline]
    pub fn bootstrap(&self, s_next: usize) -> f64 {
        if self.terminal[s_next] {
            0.0
        } else {
            1.0
        }
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        sample_index(self.row(s, a), rng)
    }

    /// Same model, different discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidMdp(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        let mut m = self.clone();
        m.gamma = gamma;
        Ok(m)
    }

    /// Plain-text fixture format:
    ///
    /// ```text
    /// S A gamma
    /// <P_0 row-major: S lines of S numbers>
    /// ...
    /// <P_{A-1}>
    /// <R: A lines of S numbers, line a holds R_a(.)>
    /// ```
    ///
    /// Terminal flags and per-transition rewards are not part of the format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n_states, self.n_actions, fmt_f64(self.gamma));
        for a in 0..self.n_actions {
            for s in 0..self.n_states {
                let line: Vec<String> = self.row(s, a).iter().map(|v| fmt_f64(*v)).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        for a in 0..self.n_actions {
            let line: Vec<String> = (0..self.n_states)
                .map(|s| fmt_f64(self.reward(s, a)))
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses [`TabularMdp::to_text`] output. Blank lines and `#` comments
    /// are skipped; errors carry 1-based line numbers.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let parse_nums = |line_no: usize, line: &str| -> Result<Vec<f64>> {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("not a number: {tok:?}"),
                    })
                })
                .collect()
        };

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line: hline,
                message: "header must be `S A gamma`".into(),
            });
        }
        let parse_count = |tok: &str| {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: hline,
                message: format!("not a count: {tok:?}"),
            })
        };
        let n_states = parse_count(toks[0])?;
        let n_actions = parse_count(toks[1])?;
        let gamma = toks[2].parse::<f64>().map_err(|_| Error::Parse {
            line: hline,
            message: format!("not a number: {:?}", toks[2]),
        })?;

        let mut next_row = |what: &str| -> Result<Vec<f64>> {
            let (no, line) = lines.next().ok_or(Error::Parse {
                line: hline,
                message: format!("unexpected end of input while reading {what}"),
            })?;
            let nums = parse_nums(no, line)?;
            if nums.len() != n_states {
                return Err(Error::Parse {
                    line: no,
                    message: format!("{what}: expected {n_states} numbers, found {}", nums.len()),
                });
            }
            Ok(nums)
        };

        let mut trans = Vec::with_capacity(n_states * n_actions * n_states);
        for a in 0..n_actions {
            for s in 0..n_states {
                trans.extend(next_row(&format!("P[{a}][{s}]"))?);
            }
        }
        let mut reward = Vec::with_capacity(n_states * n_actions);
        for a in 0..n_actions {
            reward.extend(next_row(&format!("R[{a}]"))?);
        }
        Self::new(n_states, n_actions, trans, reward, gamma, vec![false; n_states])
    }
}

fn fmt_f64(v: f64) -> String {
    // `{}` on f64 prints the shortest round-tripping representation.
    format!("{v}")
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` slightly below one; take the last positive entry.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Time-invariant behaviour: a state distribution `p` and a policy `b(a|s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorDistribution {
    state_dist: Vec<f64>,
    /// `policy[s * A + a] = b(a | s)`
    policy: Vec<f64>,
    n_actions: usize,
}

impl BehaviorDistribution {
    /// `policy` is laid out state-major, `policy[s * A + a] = b(a|s)`.
    pub fn new(state_dist: Vec<f64>, policy: Vec<f64>, n_actions: usize) -> Result<Self> {
        let n_states = state_dist.len();
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument("empty behavior distribution".into()));
        }
        if policy.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch {
                expected: n_states * n_actions,
                got: policy.len(),
            });
        }
        if state_dist.iter().chain(&policy).any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
        }
        let total: f64 = state_dist.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidArgument(format!(
                "state distribution sums to {total}"
            )));
        }
        for (s, row) in policy.chunks(n_actions).enumerate() {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidArgument(format!(
                    "b(.|s={s}) sums to {total}"
                )));
            }
        }
        Ok(Self {
            state_dist,
            policy,
            n_actions,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            state_dist: vec![1.0 / n_states as f64; n_states],
            policy: vec![1.0 / n_actions as f64; n_states * n_actions],
            n_actions,
        }
    }

    /// Uniform state distribution with the given policy.
    pub fn uniform_states(policy: Vec<f64>, n_actions: usize) -> Result<Self> {
        let n_states = policy.len() / n_actions.max(1);
        Self::new(vec![1.0 / n_states as f64; n_states], policy, n_actions)
    }

    pub fn n_states(&self) -> usize {
        self.state_dist.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn state_prob(&self, s: usize) -> f64 {
        self.state_dist[s]
    }

    pub fn action_prob(&self, s: usize, a: usize) -> f64 {
        self.policy[s * self.n_actions + a]
    }

    /// `d(s, a) = p(s) b(a | s)`.
    pub fn d(&self, s: usize, a: usize) -> f64 {
        self.state_dist[s] * self.policy[s * self.n_actions + a]
    }

    /// Checks `d(s, a) > 0` everywhere; names the first offending pair.
    pub fn check_exploration(&self) -> Result<()> {
        for a in 0..self.n_actions {
            for s in 0..self.n_states() {
                if !(self.d(s, a) > 0.0) {
                    return Err(Error::ExplorationViolation {
                        state: s,
                        action: a,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn check_compatible(&self, mdp: &TabularMdp) -> Result<()> {
        if self.n_states() != mdp.n_states() {
            return Err(Error::DimensionMismatch {
                expected: mdp.n_states(),
                got: self.n_states(),
            });
        }
        if self.n_actions != mdp.n_actions() {
            return Err(Error::DimensionMismatch {
                expected: mdp.n_actions(),
                got: self.n_actions,
            });
        }
        Ok(())
    }

    /// Draws `(s, a) ~ d`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let s = sample_index(&self.state_dist, rng);
        let a = sample_index(&self.policy[s * self.n_actions..(s + 1) * self.n_actions], rng);
        (s, a)
    }
}

/// Deterministic policy and its selector matrix `Pi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolicyMatrix {
    n_actions: usize,
    actions: Vec<usize>,
}

impl PolicyMatrix {
    pub fn from_actions(actions: Vec<usize>, n_actions: usize) -> Result<Self> {
        if let Some(&a) = actions.iter().find(|&&a| a >= n_actions) {
            return Err(Error::OutOfRange {
                what: "action",
                index: a,
                limit: n_actions,
            });
        }
        Ok(Self { n_actions, actions })
    }

    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    /// Dense `|S| x |S||A|` selector: row `s` has a single 1 at column
    /// `pi(s) * |S| + s`.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.actions.len();
        let mut m = DMatrix::zeros(n, n * self.n_actions);
        for (s, &a) in self.actions.iter().enumerate() {
            m[(s, a * n + s)] = 1.0;
        }
        m
    }

    /// `(Pi q)(s) = q(s, pi(s))`.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let n = self.actions.len();
        self.actions
            .iter()
            .enumerate()
            .map(|(s, &a)| q[a * n + s])
            .collect()
    }

    /// Every deterministic policy, in lexicographic order of the action
    /// vector (state 0 varies slowest).
    pub fn enumerate(n_states: usize, n_actions: usize) -> impl Iterator<Item = PolicyMatrix> {
        let total = (n_actions as u128).pow(n_states as u32);
        (0..total).map(move |mut code| {
            let mut actions = vec![0; n_states];
            for s in (0..n_states).rev() {
                actions[s] = (code % n_actions as u128) as usize;
                code /= n_actions as u128;
            }
            PolicyMatrix { n_actions, actions }
        })
    }

    pub fn count(n_states: usize, n_actions: usize) -> u128 {
        (n_actions as u128).saturating_pow(n_states as u32)
    }
}

/// Greedy selector `Pi_Q`; ties broken toward the lowest action index.
pub fn greedy_policy(q: &QTable) -> PolicyMatrix {
    PolicyMatrix {
        n_actions: q.n_actions(),
        actions: (0..q.n_states()).map(|s| q.argmax(s)).collect(),
    }
}

fn check_dims(q: &QTable, mdp: &TabularMdp) -> Result<()> {
    if q.len() != mdp.n_pairs() || q.n_states() != mdp.n_states() {
        return Err(Error::DimensionMismatch {
            expected: mdp.n_pairs(),
            got: q.len(),
        });
    }
    Ok(())
}

/// `(TQ)(s,a) = R(s,a) + gamma * sum_{s'} P(s'|s,a) 1(s') max_a' Q(s',a')`.
pub fn bellman_operator(q: &QTable, mdp: &TabularMdp) -> Result<QTable> {
    check_dims(q, mdp)?;
    Ok(bellman_unchecked(q, mdp))
}

fn bellman_unchecked(q: &QTable, mdp: &TabularMdp) -> QTable {
    let n = mdp.n_states();
    let v: Vec<f64> = (0..n).map(|s| mdp.bootstrap(s) * q.max(s)).collect();
    let mut out = QTable::zeros(n, mdp.n_actions());
    for a in 0..mdp.n_actions() {
        for s in 0..n {
            let ev: f64 = mdp.row(s, a).iter().zip(&v).map(|(p, v)| p * v).sum();
            out.set(s, a, mdp.reward(s, a) + mdp.gamma() * ev);
        }
    }
    out
}

/// Value iteration from `Q = 0` until `||TQ - Q||_inf <= tol`.
/// Returns the final iterate and the number of Bellman applications.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> (QTable, usize) {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    let mut iters = 0;
    loop {
        let next = bellman_unchecked(&q, mdp);
        iters += 1;
        let residual = next.sup_dist(&q);
        q = next;
        if residual <= tol * (1.0 - mdp.gamma()) {
            // One more application certifies the residual of the returned iterate.
            return (q, iters);
        }
    }
}

/// `Q*` to Bellman residual at most `tol`.
pub fn optimal_q(mdp: &TabularMdp, tol: f64) -> QTable {
    value_iteration(mdp, tol).0
}

/// `V^pi` by solving `(I - gamma P_pi) V = R_pi` with the terminal
/// indicator applied to next states.
pub fn policy_value(mdp: &TabularMdp, policy: &PolicyMatrix) -> Vec<f64> {
    let n = mdp.n_states();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for s in 0..n {
        let a = policy.action(s);
        r[s] = mdp.reward(s, a);
        for s2 in 0..n {
            m[(s, s2)] -= mdp.gamma() * mdp.p(s, a, s2) * mdp.bootstrap(s2);
        }
    }
    let v = m
        .lu()
        .solve(&r)
        .expect("I - gamma P_pi is nonsingular for gamma < 1");
    v.iter().copied().collect()
}

/// `Q^pi(s,a) = R(s,a) + gamma sum P(s'|s,a) 1(s') V^pi(s')`.
pub fn policy_q(mdp: &TabularMdp, policy: &PolicyMatrix) -> QTable {
    let v = policy_value(mdp, policy);
    let n = mdp.n_states();
    let mut q = QTable::zeros(n, mdp.n_actions());
    for a in 0..mdp.n_actions() {
        for s in 0..n {
            let ev: f64 = (0..n)
                .map(|s2| mdp.p(s, a, s2) * mdp.bootstrap(s2) * v[s2])
                .sum();
            q.set(s, a, mdp.reward(s, a) + mdp.gamma() * ev);
        }
    }
    q
}

/// Howard policy iteration; exact up to the linear solves.
pub fn policy_iteration(mdp: &TabularMdp) -> (PolicyMatrix, QTable) {
    let mut policy = PolicyMatrix {
        n_actions: mdp.n_actions(),
        actions: vec![0; mdp.n_states()],
    };
    loop {
        let q = policy_q(mdp, &policy);
        // Keep the current action unless another is strictly better, so the
        // loop cannot cycle between tied policies.
        let mut changed = false;
        let mut next = policy.actions.clone();
        for (s, slot) in next.iter_mut().enumerate() {
            let cur = q.get(s, *slot);
            let best = q.argmax(s);
            if q.get(s, best) > cur + 1e-12 * (1.0 + cur.abs()) {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            return (policy, q);
        }
        policy.actions = next;
    }
}

/// `D`, stacked `P` and `R` in the action-major enumeration.
#[derive(Debug, Clone)]
pub struct StateActionMatrices {
    /// Diagonal of `D`.
    pub d: DVector<f64>,
    /// `|S||A| x |S|`, row `a*S+s` is `P(. | s, a)`.
    pub p: DMatrix<f64>,
    pub r: DVector<f64>,
}

impl StateActionMatrices {
    pub fn d_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.d)
    }
}

pub fn state_action_matrices(
    mdp: &TabularMdp,
    beh: &BehaviorDistribution,
) -> Result<StateActionMatrices> {
    beh.check_compatible(mdp)?;
    beh.check_exploration()?;
    let n = mdp.n_states();
    let sa = mdp.n_pairs();
    let d = DVector::from_fn(sa, |i, _| beh.d(i % n, i / n));
    let p = DMatrix::from_fn(sa, n, |i, j| mdp.p(i % n, i / n, j));
    let r = DVector::from_column_slice(mdp.rewards());
    Ok(StateActionMatrices { d, p, r })
}
