//! Tabular stochastic-approximation learners: Q-learning, double
//! Q-learning, and the two gradient target-tracking variants (asymmetric
//! `agt2`, symmetric `sgt2`).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::envs::{TabularEnv, Transition};
use crate::error::{Error, Result};
use crate::mdp::{optimal_q, BehaviorDistribution, QTable, TabularMdp};

/// Online estimate `q_a` and target estimate `q_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct QPair {
    pub q_a: QTable,
    pub q_b: QTable,
}

impl QPair {
    pub fn new(q_a: QTable, q_b: QTable) -> Result<Self> {
        if q_a.n_states() != q_b.n_states() || q_a.n_actions() != q_b.n_actions() {
            return Err(Error::DimensionMismatch {
                expected: q_a.len(),
                got: q_b.len(),
            });
        }
        Ok(Self { q_a, q_b })
    }

    /// Both tables set to `q`.
    pub fn equal(q: QTable) -> Self {
        Self {
            q_b: q.clone(),
            q_a: q,
        }
    }

    pub fn n_states(&self) -> usize {
        self.q_a.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.q_a.n_actions()
    }

    /// `(||q_a - q*||_inf, ||q_b - q*||_inf)`.
    pub fn sup_errors(&self, q_star: &QTable) -> (f64, f64) {
        (self.q_a.sup_dist(q_star), self.q_b.sup_dist(q_star))
    }

    pub fn is_finite(&self) -> bool {
        self.q_a.is_finite() && self.q_b.is_finite()
    }
}

fn check_transition(q: &QTable, t: &Transition) -> Result<()> {
    let (ns, na) = (q.n_states(), q.n_actions());
    for (what, index, limit) in [("state", t.s, ns), ("action", t.a, na), ("next state", t.s_next, ns)] {
        if index >= limit {
            return Err(Error::OutOfRange { what, index, limit });
        }
    }
    Ok(())
}

/// Watkins update `Q(s,a) += alpha (r + 1(s') gamma max Q(s',.) - Q(s,a))`.
pub fn q_learning_step(q: &mut QTable, t: &Transition, alpha: f64, gamma: f64) -> Result<()> {
    check_transition(q, t)?;
    let target = t.r + t.bootstrap() * gamma * q.max(t.s_next);
    let i = q.index(t.s, t.a);
    let v = &mut q.values_mut()[i];
    *v += alpha * (target - *v);
    Ok(())
}

/// Double Q-learning. `update_a` is the coin: the chosen table is updated
/// toward the other table evaluated at the chosen table's greedy action.
pub fn double_q_learning_step(
    pair: &mut QPair,
    t: &Transition,
    alpha: f64,
    gamma: f64,
    update_a: bool,
) -> Result<()> {
    check_transition(&pair.q_a, t)?;
    let (upd, other) = if update_a {
        (&mut pair.q_a, &pair.q_b)
    } else {
        (&mut pair.q_b, &pair.q_a)
    };
    let a_star = upd.argmax(t.s_next);
    let target = t.r + t.bootstrap() * gamma * other.get(t.s_next, a_star);
    let i = upd.index(t.s, t.a);
    let v = &mut upd.values_mut()[i];
    *v += alpha * (target - *v);
    Ok(())
}

/// Asymmetric target tracking: the online table does a Q-learning step
/// bootstrapped from the target table, and the target table moves toward
/// the pre-update online value with relative rate `beta`.
pub fn agt2_ql_step(pair: &mut QPair, t: &Transition, alpha: f64, beta: f64, gamma: f64) -> Result<()> {
    check_transition(&pair.q_a, t)?;
    let i = pair.q_a.index(t.s, t.a);
    let qa = pair.q_a.values()[i];
    let qb = pair.q_b.values()[i];
    let target = t.r + t.bootstrap() * gamma * pair.q_b.max(t.s_next);
    pair.q_a.values_mut()[i] = qa + alpha * (target - qa);
    pair.q_b.values_mut()[i] = qb + alpha * beta * (qa - qb);
    Ok(())
}

/// Symmetric target tracking: each table bootstraps from the other and is
/// pulled toward it with weight `beta`. Both right-hand sides use
/// pre-update values.
pub fn sgt2_ql_step(pair: &mut QPair, t: &Transition, alpha: f64, beta: f64, gamma: f64) -> Result<()> {
    check_transition(&pair.q_a, t)?;
    let i = pair.q_a.index(t.s, t.a);
    let qa = pair.q_a.values()[i];
    let qb = pair.q_b.values()[i];
    let boot = t.bootstrap() * gamma;
    let ya = t.r + boot * pair.q_b.max(t.s_next);
    let yb = t.r + boot * pair.q_a.max(t.s_next);
    pair.q_a.values_mut()[i] = qa + alpha * (ya - qa + beta * (qb - qa));
    pair.q_b.values_mut()[i] = qb + alpha * (yb - qb + beta * (qa - qb));
    Ok(())
}

/// Step-size rule: constant, or harmonic `alpha_k = a / (b + k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    Harmonic { a: f64, b: f64 },
}

impl StepSchedule {
    #[inline]
    pub fn alpha(&self, k: u64) -> f64 {
        match *self {
            Self::Constant(a) => a,
            Self::Harmonic { a, b } => a / (b + k as f64),
        }
    }

    /// Checks `alpha_k` in `(0, 1]` for every `k`.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Constant(a) => a > 0.0 && a <= 1.0,
            // Decreasing in k, so k = 0 is the largest step.
            Self::Harmonic { a, b } => a > 0.0 && b > 0.0 && a <= b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("step sizes of {self:?} leave (0, 1]")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    QLearning,
    DoubleQ,
    Agt2,
    Sgt2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::QLearning, Self::DoubleQ, Self::Agt2, Self::Sgt2];

    pub fn uses_beta(&self) -> bool {
        matches!(self, Self::Agt2 | Self::Sgt2)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q_learning" => Ok(Self::QLearning),
            "double_q" => Ok(Self::DoubleQ),
            "agt2_ql" => Ok(Self::Agt2),
            "sgt2_ql" => Ok(Self::Sgt2),
            other => Err(Error::InvalidArgument(format!(
                "unknown tabular algorithm {other:?} (expected q_learning, double_q, agt2_ql or sgt2_ql)"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::QLearning => "q_learning",
            Self::DoubleQ => "double_q",
            Self::Agt2 => "agt2_ql",
            Self::Sgt2 => "sgt2_ql",
        })
    }
}

/// Linear epsilon decay from `start` to `end` over `decay_steps` steps;
/// `decay_steps = 0` keeps `start` fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        Self {
            start: eps,
            end: eps,
            decay_steps: 0,
        }
    }

    pub fn at(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            if self.decay_steps == 0 {
                self.start
            } else {
                self.end
            }
        } else {
            let frac = step as f64 / self.decay_steps as f64;
            self.start + frac * (self.end - self.start)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.start) && (0.0..=1.0).contains(&self.end) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("epsilon outside [0, 1]: {self:?}")))
        }
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self::constant(0.1)
    }
}

/// Where transitions come from.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Sampling {
    /// `(s, a) ~ d`, `s' ~ P(.|s, a)`, independent across steps.
    Iid {
        mdp: TabularMdp,
        behavior: BehaviorDistribution,
    },
    /// Epsilon-greedy episodes on a grid world (greedy w.r.t. the online
    /// estimate).
    Episodic {
        env: TabularEnv,
        epsilon: EpsilonSchedule,
    },
}

impl Sampling {
    pub fn mdp(&self) -> &TabularMdp {
        match self {
            Self::Iid { mdp, .. } => mdp,
            Self::Episodic { env, .. } => env.mdp(),
        }
    }
}

/// Initial tables: entries uniform in `[lo, hi)`, independent per table
/// unless `equal` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    pub lo: f64,
    pub hi: f64,
    pub equal: bool,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            equal: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub beta: f64,
    pub schedule: StepSchedule,
    pub sampling: Sampling,
    pub total_steps: u64,
    /// Sup-norm errors are logged every `log_interval` steps (and at the end).
    pub log_interval: u64,
    pub init: InitSpec,
    pub seed: u64,
}

/// One logged point of a tabular run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPoint {
    pub step: u64,
    pub err_a: f64,
    pub err_b: f64,
}

#[derive(Debug, Clone)]
pub struct LearnerRun {
    pub algorithm: Algorithm,
    pub errors: Vec<ErrorPoint>,
    /// Undiscounted per-episode returns (episodic sampling only; the last,
    /// possibly unfinished episode is dropped).
    pub episode_returns: Vec<f64>,
    pub pair: QPair,
    pub q_star: QTable,
    /// Largest `||q_a||_inf` or `||q_b||_inf` seen at a logging point.
    pub max_abs: f64,
    /// Set when an iterate became non-finite; the run stops there.
    pub diverged: bool,
}

impl LearnerRun {
    /// The table whose greedy policy the algorithm would act with.
    pub fn estimate(&self) -> QTable {
        match self.algorithm {
            Algorithm::DoubleQ => {
                let v = self
                    .pair
                    .q_a
                    .values()
                    .iter()
                    .zip(self.pair.q_b.values())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                QTable::from_vec(self.pair.n_states(), self.pair.n_actions(), v)
                    .expect("finite average of finite tables")
            }
            _ => self.pair.q_a.clone(),
        }
    }
}

fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], n_states: usize, n_actions: usize, s: usize, eps: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < eps {
        return rng.random_range(0..n_actions);
    }
    let mut best = 0;
    for a in 1..n_actions {
        if q[a * n_states + s] > q[best * n_states + s] {
            best = a;
        }
    }
    best
}

fn validate(cfg: &LearnerConfig) -> Result<()> {
    cfg.schedule.validate()?;
    if cfg.algorithm.uses_beta() && !(cfg.beta > 0.0 && cfg.beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {}", cfg.beta)));
    }
    if cfg.log_interval == 0 {
        return Err(Error::InvalidArgument("log_interval must be positive".into()));
    }
    if !(cfg.init.lo <= cfg.init.hi) {
        return Err(Error::InvalidArgument("init range is empty".into()));
    }
    match &cfg.sampling {
        Sampling::Iid { mdp, behavior } => {
            behavior.check_compatible(mdp)?;
            behavior.check_exploration()
        }
        Sampling::Episodic { epsilon, .. } => epsilon.validate(),
    }
}

/// Runs one learner for `total_steps` updates and logs sup-norm errors
/// against the value-iteration `Q*`. Deterministic in `cfg.seed`.
pub fn run_learner(cfg: &LearnerConfig) -> Result<LearnerRun> {
    validate(cfg)?;
    let mdp = cfg.sampling.mdp();
    let gamma = mdp.gamma();
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let q_star = optimal_q(mdp, 1e-10);
    let mut rng = crate::seeded_rng(cfg.seed);

    let q_a = QTable::random(ns, na, cfg.init.lo, cfg.init.hi, &mut rng);
    let q_b = if cfg.init.equal || cfg.algorithm == Algorithm::QLearning {
        q_a.clone()
    } else {
        QTable::random(ns, na, cfg.init.lo, cfg.init.hi, &mut rng)
    };
    let mut pair = QPair { q_a, q_b };

    let mut run = LearnerRun {
        algorithm: cfg.algorithm,
        errors: Vec::new(),
        episode_returns: Vec::new(),
        pair: pair.clone(),
        q_star: q_star.clone(),
        max_abs: 0.0,
        diverged: false,
    };
    let log = |pair: &QPair, step: u64, run: &mut LearnerRun| {
        let (err_a, err_b) = pair.sup_errors(&q_star);
        run.errors.push(ErrorPoint { step, err_a, err_b });
        run.max_abs = run.max_abs.max(pair.q_a.sup_norm()).max(pair.q_b.sup_norm());
    };
    log(&pair, 0, &mut run);

    let mut env = match &cfg.sampling {
        Sampling::Episodic { env, .. } => {
            let mut env = env.clone();
            env.reseed(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
            env.reset_state();
            Some(env)
        }
        Sampling::Iid { .. } => None,
    };
    let mut episode_return = 0.0;

    for k in 0..cfg.total_steps {
        let t = match (&cfg.sampling, env.as_mut()) {
            (Sampling::Iid { mdp, behavior }, _) => {
                let (s, a) = behavior.sample(&mut rng);
                let s_next = mdp.sample_next(s, a, &mut rng);
                Transition::new(s, a, mdp.transition_reward(s, a, s_next), s_next, mdp.is_terminal(s_next))
            }
            (Sampling::Episodic { epsilon, .. }, Some(env)) => {
                if env.is_done() {
                    run.episode_returns.push(episode_return);
                    episode_return = 0.0;
                    env.reset_state();
                }
                let acting = match cfg.algorithm {
                    Algorithm::DoubleQ => pair
                        .q_a
                        .values()
                        .iter()
                        .zip(pair.q_b.values())
                        .map(|(a, b)| a + b)
                        .collect(),
                    _ => pair.q_a.values().to_vec(),
                };
                let a = epsilon_greedy(&acting, ns, na, env.state(), epsilon.at(k), &mut rng);
                let t = env.step_state(a)?;
                episode_return += t.r;
                t
            }
            (Sampling::Episodic { .. }, None) => unreachable!("episodic sampling always has an env"),
        };

        let alpha = cfg.schedule.alpha(k);
        match cfg.algorithm {
            Algorithm::QLearning => q_learning_step(&mut pair.q_a, &t, alpha, gamma)?,
            Algorithm::DoubleQ => {
                let coin = rng.random::<bool>();
                double_q_learning_step(&mut pair, &t, alpha, gamma, coin)?
            }
            Algorithm::Agt2 => agt2_ql_step(&mut pair, &t, alpha, cfg.beta, gamma)?,
            Algorithm::Sgt2 => sgt2_ql_step(&mut pair, &t, alpha, cfg.beta, gamma)?,
        }
        if cfg.algorithm == Algorithm::QLearning {
            let i = pair.q_a.index(t.s, t.a);
            let v = pair.q_a.values()[i];
            pair.q_b.values_mut()[i] = v;
        }

        let step = k + 1;
        if step % cfg.log_interval == 0 || step == cfg.total_steps {
            log(&pair, step, &mut run);
            if !pair.is_finite() {
                run.diverged = true;
                break;
            }
        }
    }
    if env.as_ref().is_some_and(|e| e.is_done()) {
        run.episode_returns.push(episode_return);
    }
    run.pair = pair;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::example_mdp;

    fn table(v: &[f64]) -> QTable {
        QTable::from_vec(2, 2, v.to_vec()).unwrap()
    }

    /// Pair on a 2x2 layout where (s=0, a=0) is the updated entry and
    /// state 1 is the next state.
    fn pair_with(qa00: f64, qb00: f64, qa_next: f64, qb_next: f64) -> QPair {
        QPair {
            q_a: table(&[qa00, qa_next, 0.0, qa_next - 1.0]),
            q_b: table(&[qb00, qb_next, 0.0, qb_next - 1.0]),
        }
    }

    #[test]
    fn agt2_zero_init() {
        let mut p = QPair::equal(QTable::zeros(2, 2));
        agt2_ql_step(&mut p, &Transition::new(0, 0, 1.0, 1, false), 0.5, 1.0, 0.9).unwrap();
        assert_eq!(p.q_a.get(0, 0), 0.5);
        assert_eq!(p.q_b.get(0, 0), 0.0);
    }

    #[test]
    fn agt2_hand_step() {
        let mut p = pair_with(1.0, 0.4, 0.0, 2.0);
        agt2_ql_step(&mut p, &Transition::new(0, 0, 0.5, 1, false), 0.1, 2.0, 0.9).unwrap();
        assert!((p.q_a.get(0, 0) - 1.13).abs() < 1e-12);
        assert!((p.q_b.get(0, 0) - 0.52).abs() < 1e-12);
    }

    #[test]
    fn agt2_terminal_ignores_target() {
        let mut p = pair_with(0.0, 0.0, 50.0, 50.0);
        agt2_ql_step(&mut p, &Transition::new(0, 0, 1.0, 1, true), 1.0, 1.0, 0.9).unwrap();
        assert_eq!(p.q_a.get(0, 0), 1.0);
    }

    #[test]
    fn sgt2_hand_step() {
        let mut p = pair_with(1.0, 0.4, 1.5, 2.0);
        sgt2_ql_step(&mut p, &Transition::new(0, 0, 0.5, 1, false), 0.1, 1.0, 0.9).unwrap();
        assert!((p.q_a.get(0, 0) - 1.07).abs() < 1e-12);
        assert!((p.q_b.get(0, 0) - 0.605).abs() < 1e-12);
    }

    #[test]
    fn sgt2_equal_tables_stay_equal() {
        let mut rng = crate::seeded_rng(1);
        let mut p = QPair::equal(QTable::random(2, 2, -1.0, 1.0, &mut rng));
        let mut q = p.q_a.clone();
        let t = Transition::new(1, 1, 0.3, 0, false);
        sgt2_ql_step(&mut p, &t, 0.2, 0.7, 0.9).unwrap();
        q_learning_step(&mut q, &t, 0.2, 0.9).unwrap();
        assert_eq!(p.q_a, p.q_b);
        assert!(p.q_a.sup_dist(&q) < 1e-15);
    }

    #[test]
    fn sgt2_zero_beta_decouples() {
        let mut p = pair_with(1.0, 0.4, 1.5, 2.0);
        sgt2_ql_step(&mut p, &Transition::new(0, 0, 0.5, 1, false), 0.1, 0.0, 0.9).unwrap();
        assert!((p.q_a.get(0, 0) - (1.0 + 0.1 * (0.5 + 0.9 * 2.0 - 1.0))).abs() < 1e-15);
        assert!((p.q_b.get(0, 0) - (0.4 + 0.1 * (0.5 + 0.9 * 1.5 - 0.4))).abs() < 1e-15);
    }

    #[test]
    fn double_q_with_equal_tables_matches_q_learning() {
        let mut rng = crate::seeded_rng(2);
        let q0 = QTable::random(2, 2, 0.0, 1.0, &mut rng);
        let t = Transition::new(0, 1, 0.7, 1, false);
        for coin in [true, false] {
            let mut p = QPair::equal(q0.clone());
            let mut q = q0.clone();
            double_q_learning_step(&mut p, &t, 0.3, 0.9, coin).unwrap();
            q_learning_step(&mut q, &t, 0.3, 0.9).unwrap();
            let updated = if coin { &p.q_a } else { &p.q_b };
            assert_eq!(updated, &q);
        }
    }

    #[test]
    fn double_q_uses_other_table_at_own_argmax() {
        let mut p = QPair {
            q_a: table(&[0.0, 5.0, 0.0, 1.0]),
            q_b: table(&[0.0, -2.0, 0.0, 3.0]),
        };
        double_q_learning_step(&mut p, &Transition::new(0, 0, 0.0, 1, false), 1.0, 1.0, true).unwrap();
        // argmax q_a(1, .) = 0, so the target is q_b(1, 0) = -2.
        assert_eq!(p.q_a.get(0, 0), -2.0);
    }

    #[test]
    fn out_of_range_transition_rejected() {
        let mut p = QPair::equal(QTable::zeros(2, 2));
        let err = agt2_ql_step(&mut p, &Transition::new(0, 2, 0.0, 1, false), 0.1, 1.0, 0.9).unwrap_err();
        assert_eq!(err, Error::OutOfRange { what: "action", index: 2, limit: 2 });
        assert!(sgt2_ql_step(&mut p, &Transition::new(0, 0, 0.0, 5, false), 0.1, 1.0, 0.9).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(StepSchedule::Harmonic { a: 80.0, b: 200.0 }.validate().is_ok());
        assert!(StepSchedule::Harmonic { a: 2.0, b: 1.0 }.validate().is_err());
        assert!(StepSchedule::Constant(0.0).validate().is_err());
        assert_eq!(StepSchedule::Harmonic { a: 80.0, b: 200.0 }.alpha(200), 0.2);
    }

    #[test]
    fn epsilon_schedule_linear() {
        let e = EpsilonSchedule { start: 1.0, end: 0.0, decay_steps: 10 };
        assert_eq!(e.at(0), 1.0);
        assert_eq!(e.at(5), 0.5);
        assert_eq!(e.at(50), 0.0);
        assert_eq!(EpsilonSchedule::constant(0.3).at(1000), 0.3);
    }

    fn iid_config(algorithm: Algorithm, beta: f64, steps: u64, seed: u64) -> LearnerConfig {
        let (mdp, behavior) = example_mdp();
        LearnerConfig {
            algorithm,
            beta,
            schedule: StepSchedule::Harmonic { a: 80.0, b: 200.0 },
            sampling: Sampling::Iid { mdp, behavior },
            total_steps: steps,
            log_interval: 1000,
            init: InitSpec::default(),
            seed,
        }
    }

    #[test]
    fn zero_steps_logs_only_initial_error() {
        let run = run_learner(&iid_config(Algorithm::Agt2, 0.1, 0, 0)).unwrap();
        assert_eq!(run.errors.len(), 1);
        assert_eq!(run.errors[0].step, 0);
    }

    #[test]
    fn q_learning_zero_discount_learns_rewards() {
        let mut cfg = iid_config(Algorithm::QLearning, 0.0, 50_000, 3);
        if let Sampling::Iid { mdp, .. } = &mut cfg.sampling {
            *mdp = mdp.with_gamma(0.0).unwrap();
        }
        let run = run_learner(&cfg).unwrap();
        assert!(run.pair.q_a.sup_dist(&table(&[3.0, 1.0, 2.0, 1.0])) < 1e-6);
    }

    #[test]
    fn q_learning_converges_on_example() {
        let run = run_learner(&iid_config(Algorithm::QLearning, 0.0, 200_000, 0)).unwrap();
        assert!(run.errors.last().unwrap().err_a < 0.05);
    }

    #[test]
    fn exploration_violation_surfaces_at_start() {
        let (mdp, _) = example_mdp();
        let behavior = BehaviorDistribution::uniform_states(vec![1.0, 0.0, 0.5, 0.5], 2).unwrap();
        let mut cfg = iid_config(Algorithm::Sgt2, 1.0, 10, 0);
        cfg.sampling = Sampling::Iid { mdp, behavior };
        assert_eq!(run_learner(&cfg).unwrap_err(), Error::ExplorationViolation { state: 0, action: 1 });
    }

    #[test]
    fn nonpositive_beta_rejected() {
        assert!(run_learner(&iid_config(Algorithm::Agt2, 0.0, 10, 0)).is_err());
        assert!(run_learner(&iid_config(Algorithm::QLearning, 0.0, 10, 0)).is_ok());
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let a = run_learner(&iid_config(Algorithm::Sgt2, 0.2, 5000, 7)).unwrap();
        let b = run_learner(&iid_config(Algorithm::Sgt2, 0.2, 5000, 7)).unwrap();
        assert_eq!(a.pair, b.pair);
        assert_eq!(a.errors, b.errors);
    }
}
