//! Continuous-time models of the tabular target-tracking learners.
//!
//! The state is the stacked error `x = [q_a - q*; q_b - q*]` of length
//! `2 |S||A|`. Each learner has an original (switching) field `f`, an upper
//! comparison field `h` whose policy is greedy in `x2` itself, and a lower
//! comparison field `g` with the policy frozen at `pi*`. All six fields are
//! quasi-monotone increasing, so `g <= f <= h` element-wise lets integrated
//! trajectories sandwich each other.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{greedy_policy, policy_iteration, state_action_matrices, BehaviorDistribution, PolicyMatrix, QTable, TabularMdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Learner {
    Agt2,
    Sgt2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    Original,
    Upper,
    Lower,
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Agt2 => "agt2",
            Self::Sgt2 => "sgt2",
        })
    }
}

impl FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agt2" | "agt2_ql" => Ok(Self::Agt2),
            "sgt2" | "sgt2_ql" => Ok(Self::Sgt2),
            other => Err(Error::InvalidArgument(format!("unknown learner {other:?} (expected agt2 or sgt2)"))),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Original => "original",
            Self::Upper => "upper",
            Self::Lower => "lower",
        })
    }
}

/// The model data every field needs: `D`, the bootstrap-masked `P`, `gamma`,
/// `Q*` and its greedy policy.
#[derive(Debug, Clone)]
pub struct OdeModel {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    d: Vec<f64>,
    /// `|S||A| x |S|`, row-major, with columns of terminal states zeroed.
    p: Vec<f64>,
    q_star: QTable,
    pi_star: PolicyMatrix,
    max_q_star: Vec<f64>,
}

impl OdeModel {
    pub fn new(mdp: &TabularMdp, beh: &BehaviorDistribution) -> Result<Self> {
        let m = state_action_matrices(mdp, beh)?;
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        let mut p = Vec::with_capacity(ns * na * ns);
        for i in 0..ns * na {
            for j in 0..ns {
                p.push(m.p[(i, j)] * mdp.bootstrap(j));
            }
        }
        // Policy iteration gives Q* up to linear-solve accuracy, which keeps
        // the equilibrium residual at rounding level.
        let (_, q_star) = policy_iteration(mdp);
        let pi_star = greedy_policy(&q_star);
        let max_q_star = (0..ns).map(|s| q_star.max(s)).collect();
        Ok(Self {
            n_states: ns,
            n_actions: na,
            gamma: mdp.gamma(),
            d: m.d.iter().copied().collect(),
            p,
            q_star,
            pi_star,
            max_q_star,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn q_star(&self) -> &QTable {
        &self.q_star
    }

    pub fn pi_star(&self) -> &PolicyMatrix {
        &self.pi_star
    }

    /// Bootstrap-masked `P` as a dense matrix.
    pub fn p_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_pairs(), self.n_states, &self.p)
    }

    /// `gamma * (P v)_i`, written into `out`.
    fn gamma_pv(&self, v: &[f64], out: &mut [f64]) {
        let ns = self.n_states;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.p[i * ns..(i + 1) * ns];
            *o = self.gamma * row.iter().zip(v).map(|(p, v)| p * v).sum::<f64>();
        }
    }

    fn max_over_actions(&self, x: &[f64], s: usize) -> f64 {
        (0..self.n_actions)
            .map(|a| x[a * self.n_states + s])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_a (x + q*)(s, a) - max_a q*(s, a)` per state.
    fn shifted_max(&self, x: &[f64]) -> Vec<f64> {
        let qs = self.q_star.values();
        (0..self.n_states)
            .map(|s| {
                let m = (0..self.n_actions)
                    .map(|a| {
                        let i = a * self.n_states + s;
                        x[i] + qs[i]
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                m - self.max_q_star[s]
            })
            .collect()
    }

    /// Per-state bootstrap value of `x` under `system`:
    /// original `max(x + q*) - max q*`, upper `max x`, lower `x(s, pi*(s))`.
    fn next_values(&self, system: System, x: &[f64]) -> Vec<f64> {
        match system {
            System::Original => self.shifted_max(x),
            System::Upper => (0..self.n_states).map(|s| self.max_over_actions(x, s)).collect(),
            System::Lower => self.pi_star.apply(x),
        }
    }
}

/// One of the six vector fields.
#[derive(Debug, Clone)]
pub struct OdeField {
    learner: Learner,
    system: System,
    beta: f64,
    model: OdeModel,
}

impl OdeField {
    pub fn new(learner: Learner, system: System, model: OdeModel, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be nonnegative, got {beta}")));
        }
        Ok(Self {
            learner,
            system,
            beta,
            model,
        })
    }

    pub fn from_mdp(learner: Learner, system: System, mdp: &TabularMdp, beh: &BehaviorDistribution, beta: f64) -> Result<Self> {
        Self::new(learner, system, OdeModel::new(mdp, beh)?, beta)
    }

    pub fn learner(&self) -> Learner {
        self.learner
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn model(&self) -> &OdeModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        2 * self.model.n_pairs()
    }

    /// Same learner and model, another system.
    pub fn sibling(&self, system: System) -> OdeField {
        OdeField {
            system,
            ..self.clone()
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.model.n_pairs();
        debug_assert_eq!(x.len(), 2 * n);
        let (x1, x2) = x.split_at(n);
        let (o1, o2) = out.split_at_mut(n);
        let d = &self.model.d;
        let b = self.beta;
        let v2 = self.model.next_values(self.system, x2);
        self.model.gamma_pv(&v2, o1);
        match self.learner {
            Learner::Agt2 => {
                for i in 0..n {
                    o1[i] = d[i] * (o1[i] - x1[i]);
                    o2[i] = b * d[i] * (x1[i] - x2[i]);
                }
            }
            Learner::Sgt2 => {
                let v1 = self.model.next_values(self.system, x1);
                self.model.gamma_pv(&v1, o2);
                for i in 0..n {
                    o1[i] = d[i] * (o1[i] - (1.0 + b) * x1[i] + b * x2[i]);
                    o2[i] = d[i] * (o2[i] - (1.0 + b) * x2[i] + b * x1[i]);
                }
            }
        }
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval(x, &mut out);
        out
    }

    /// Global Lipschitz constant of the field in the sup norm, assembled
    /// from `max d`, `gamma` and `beta`.
    pub fn lipschitz_constant(&self) -> f64 {
        let g = self.model.gamma;
        let b = self.beta;
        let dmax = self.model.d.iter().copied().fold(0.0, f64::max);
        match (self.learner, self.system) {
            (Learner::Agt2, System::Lower) => self
                .model
                .d
                .iter()
                .map(|&d| f64::max(d * (1.0 + g), 2.0 * b * d))
                .fold(0.0, f64::max),
            (Learner::Agt2, _) => f64::max(dmax, 2.0 * b * dmax) + g * dmax,
            (Learner::Sgt2, System::Lower) => dmax * ((1.0 + b) + g + b),
            (Learner::Sgt2, _) => (1.0 + 2.0 * b) * dmax + 2.0 * g * dmax,
        }
    }

    /// The linear mode `A` of the switching system for policies `sigma1`
    /// (applied to the `x2` bootstrap) and `sigma2` (applied to the `x1`
    /// bootstrap, symmetric learner only).
    ///
    /// Asymmetric: `[-D, gamma D P Pi1; beta D, -beta D]`.
    /// Symmetric: `[-(1+beta) D, gamma D P Pi1 + beta D; gamma D P Pi2 + beta D, -(1+beta) D]`.
    pub fn mode_matrix(&self, sigma1: &PolicyMatrix, sigma2: &PolicyMatrix) -> DMatrix<f64> {
        mode_matrix(&self.model, self.learner, self.beta, self.model.gamma, sigma1, sigma2)
    }
}

fn mode_matrix(model: &OdeModel, learner: Learner, beta: f64, gamma: f64, s1: &PolicyMatrix, s2: &PolicyMatrix) -> DMatrix<f64> {
    let n = model.n_pairs();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&model.d));
    let p = model.p_matrix();
    let dp1 = &d * &p * s1.dense() * gamma;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    match learner {
        Learner::Agt2 => {
            a.view_mut((0, 0), (n, n)).copy_from(&(-&d));
            a.view_mut((0, n), (n, n)).copy_from(&dp1);
            a.view_mut((n, 0), (n, n)).copy_from(&(&d * beta));
            a.view_mut((n, n), (n, n)).copy_from(&(&d * -beta));
        }
        Learner::Sgt2 => {
            let dp2 = &d * &p * s2.dense() * gamma;
            a.view_mut((0, 0), (n, n)).copy_from(&(&d * -(1.0 + beta)));
            a.view_mut((0, n), (n, n)).copy_from(&(dp1 + &d * beta));
            a.view_mut((n, 0), (n, n)).copy_from(&(dp2 + &d * beta));
            a.view_mut((n, n), (n, n)).copy_from(&(&d * -(1.0 + beta)));
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Self::Euler),
            "rk4" => Ok(Self::Rk4),
            other => Err(Error::InvalidArgument(format!("unknown integrator {other:?} (expected euler or rk4)"))),
        }
    }
}

/// Fixed-step solution on the grid `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub method: Method,
    dim: usize,
    times: Vec<f64>,
    /// Row-major `len x dim`.
    states: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn initial(&self) -> &[f64] {
        self.state(0)
    }

    /// Writes `t,comp_0,...` rows, keeping every `stride`-th grid point
    /// (plus the last).
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim).map(|i| format!("comp_{i}")));
        w.write_record(&header).map_err(csv_err)?;
        let last = self.len() - 1;
        for k in (0..self.len()).filter(|&k| k % stride == 0 || k == last) {
            let mut row = vec![format!("{}", self.times[k])];
            row.extend(self.state(k).iter().map(|v| format!("{v}")));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates `dx/dt = field(x)` from `x0` over `[0, t_end]` with
/// `round(t_end / dt)` fixed steps. Aborts on a non-finite state.
pub fn integrate<F>(field: F, x0: &[f64], dt: f64, t_end: f64, method: Method) -> Result<Trajectory>
where
    F: Fn(&[f64], &mut [f64]),
{
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_end > 0, got dt={dt}, t_end={t_end}")));
    }
    let dim = x0.len();
    let steps = (t_end / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity((steps + 1) * dim);
    times.push(0.0);
    states.extend_from_slice(x0);

    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for k in 1..=steps {
        match method {
            Method::Euler => {
                field(&x, &mut k1);
                for i in 0..dim {
                    x[i] += dt * k1[i];
                }
            }
            Method::Rk4 => {
                field(&x, &mut k1);
                for i in 0..dim {
                    tmp[i] = x[i] + 0.5 * dt * k1[i];
                }
                field(&tmp, &mut k2);
                for i in 0..dim {
                    tmp[i] = x[i] + 0.5 * dt * k2[i];
                }
                field(&tmp, &mut k3);
                for i in 0..dim {
                    tmp[i] = x[i] + dt * k3[i];
                }
                field(&tmp, &mut k4);
                for i in 0..dim {
                    x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        let t = k as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { time: t });
        }
        times.push(t);
        states.extend_from_slice(&x);
    }
    Ok(Trajectory {
        dt,
        method,
        dim,
        times,
        states,
    })
}

/// Integrates an [`OdeField`].
pub fn integrate_field(field: &OdeField, x0: &[f64], dt: f64, t_end: f64, method: Method) -> Result<Trajectory> {
    if x0.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: x0.len(),
        });
    }
    integrate(|x, out| field.eval(x, out), x0, dt, t_end, method)
}

/// First point where the ordering `lower <= original <= upper` broke.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichViolation {
    pub time: f64,
    pub component: usize,
    pub lower: f64,
    pub original: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub points_checked: usize,
    pub first_violation: Option<SandwichViolation>,
    /// Largest `max(lower - original, original - upper)` over the grid.
    pub worst_gap: f64,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `lower <= original <= upper` element-wise at every grid point up
/// to `slack`. The trajectories must share their grid and start strictly
/// ordered.
pub fn check_sandwich(lower: &Trajectory, original: &Trajectory, upper: &Trajectory, slack: f64) -> Result<SandwichReport> {
    if lower.times != original.times || upper.times != original.times || lower.dim != original.dim || upper.dim != original.dim {
        return Err(Error::InvalidArgument("sandwich check needs trajectories on one grid".into()));
    }
    if original.is_empty() {
        return Err(Error::InvalidArgument("empty trajectories".into()));
    }
    let strictly = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(a, b)| a < b);
    if !strictly(lower.initial(), original.initial()) || !strictly(original.initial(), upper.initial()) {
        return Err(Error::InvalidArgument(
            "initial conditions must satisfy lower < original < upper element-wise".into(),
        ));
    }
    let mut report = SandwichReport {
        points_checked: original.len(),
        first_violation: None,
        worst_gap: f64::NEG_INFINITY,
    };
    for k in 0..original.len() {
        let (l, o, u) = (lower.state(k), original.state(k), upper.state(k));
        for i in 0..original.dim {
            let gap = f64::max(l[i] - o[i], o[i] - u[i]);
            report.worst_gap = report.worst_gap.max(gap);
            if gap > slack && report.first_violation.is_none() {
                report.first_violation = Some(SandwichViolation {
                    time: original.times[k],
                    component: i,
                    lower: l[i],
                    original: o[i],
                    upper: u[i],
                });
            }
        }
    }
    Ok(report)
}

/// Integrates the three systems of `field`'s learner from `x0 - margin`,
/// `x0` and `x0 + margin`, returning `(lower, original, upper)`.
pub fn sandwich_trajectories(field: &OdeField, x0: &[f64], margin: f64, dt: f64, t_end: f64, method: Method) -> Result<(Trajectory, Trajectory, Trajectory)> {
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument(format!("margin must be positive, got {margin}")));
    }
    let lo: Vec<f64> = x0.iter().map(|v| v - margin).collect();
    let hi: Vec<f64> = x0.iter().map(|v| v + margin).collect();
    Ok((
        integrate_field(&field.sibling(System::Lower), &lo, dt, t_end, method)?,
        integrate_field(&field.sibling(System::Original), x0, dt, t_end, method)?,
        integrate_field(&field.sibling(System::Upper), &hi, dt, t_end, method)?,
    ))
}

/// Number of greedy-policy changes of the `x2` block along a trajectory of
/// the original system.
pub fn policy_switches(field: &OdeField, traj: &Trajectory) -> usize {
    let n = field.model.n_pairs();
    let qs = field.model.q_star.values();
    let (ns, na) = (field.model.n_states, field.model.n_actions);
    let policy_at = |k: usize| {
        let x2 = &traj.state(k)[n..];
        let q: Vec<f64> = x2.iter().zip(qs).map(|(x, q)| x + q).collect();
        greedy_policy(&QTable::from_vec(ns, na, q).expect("finite trajectory"))
    };
    let mut prev = policy_at(0);
    let mut switches = 0;
    for k in 1..traj.len() {
        let cur = policy_at(k);
        if cur != prev {
            switches += 1;
            prev = cur;
        }
    }
    switches
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub samples: usize,
    pub violations: usize,
    /// Most negative `f_i(x + delta) - f_i(x)` seen.
    pub worst: f64,
}

/// Randomized check of quasi-monotonicity: for `x` uniform in
/// `[-scale, scale]^n` and `delta >= 0` with `delta_i = 0` at a random
/// coordinate `i`, requires `f_i(x + delta) >= f_i(x) - 1e-12`.
pub fn quasi_monotone_probe<F, R>(field: F, dim: usize, samples: usize, scale: f64, rng: &mut R) -> ProbeReport
where
    F: Fn(&[f64], &mut [f64]),
    R: Rng + ?Sized,
{
    let mut report = ProbeReport {
        samples,
        violations: 0,
        worst: f64::INFINITY,
    };
    let mut fx = vec![0.0; dim];
    let mut fy = vec![0.0; dim];
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..scale)).collect();
        let i = rng.random_range(0..dim);
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(j, v)| if j == i { *v } else { v + rng.random_range(0.0..scale) })
            .collect();
        field(&x, &mut fx);
        field(&y, &mut fy);
        let diff = fy[i] - fx[i];
        report.worst = report.worst.min(diff);
        if diff < -1e-12 {
            report.violations += 1;
        }
    }
    report
}

/// Largest `||f(x) - f(y)||_inf / ||x - y||_inf` over random pairs in
/// `[-scale, scale]^n`.
pub fn lipschitz_probe<F, R>(field: F, dim: usize, samples: usize, scale: f64, rng: &mut R) -> f64
where
    F: Fn(&[f64], &mut [f64]),
    R: Rng + ?Sized,
{
    let mut fx = vec![0.0; dim];
    let mut fy = vec![0.0; dim];
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..scale)).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..scale)).collect();
        field(&x, &mut fx);
        field(&y, &mut fy);
        let num = fx.iter().zip(&fy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let den = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    worst
}

/// `[A]_ii + sum_{j != i} |[A]_ij| < 0` for every row.
pub fn row_dominating_check(matrix: &DMatrix<f64>) -> Result<bool> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            got: matrix.ncols(),
        });
    }
    Ok(row_margins(matrix).iter().all(|m| *m < 0.0))
}

/// Per-row value `[A]_ii + sum_{j != i} |[A]_ij|`.
pub fn row_margins(matrix: &DMatrix<f64>) -> Vec<f64> {
    (0..matrix.nrows())
        .map(|i| {
            let off: f64 = (0..matrix.ncols()).filter(|&j| j != i).map(|j| matrix[(i, j)].abs()).sum();
            matrix[(i, i)] + off
        })
        .collect()
}

/// Scaled mode matrix whose row dominance certifies stability under
/// arbitrary switching. The asymmetric learner uses the similarity
/// `L = diag(I, gamma^{1/2} I)`, giving
/// `[-D, gamma^{1/2} D P Pi; gamma^{1/2} beta D, -beta D]`; the symmetric
/// learner's mode matrix is used as is. `gamma` is passed separately so
/// that `gamma >= 1` can be probed.
pub fn certificate_matrix(model: &OdeModel, learner: Learner, beta: f64, gamma: f64, s1: &PolicyMatrix, s2: &PolicyMatrix) -> DMatrix<f64> {
    match learner {
        Learner::Agt2 => {
            let n = model.n_pairs();
            let g = gamma.sqrt();
            let mut a = mode_matrix(model, Learner::Agt2, beta, g, s1, s2);
            let mut lower_left = a.view_mut((n, 0), (n, n));
            lower_left *= g;
            a
        }
        Learner::Sgt2 => mode_matrix(model, Learner::Sgt2, beta, gamma, s1, s2),
    }
}

/// Most policies (or policy pairs) a certificate will enumerate.
pub const MAX_CERTIFIED_POLICIES: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyVerdict {
    pub sigma1: Vec<usize>,
    /// Only meaningful for the symmetric learner.
    pub sigma2: Vec<usize>,
    /// Largest row margin; negative means the row condition holds.
    pub worst_margin: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub learner: Learner,
    pub beta: f64,
    pub gamma: f64,
    pub verdicts: Vec<PolicyVerdict>,
}

impl Certificate {
    pub fn certified(&self) -> bool {
        self.verdicts.iter().all(|v| v.passes)
    }
}

/// Runs the row-dominance check over every deterministic policy (asymmetric)
/// or every policy pair (symmetric).
pub fn certify(model: &OdeModel, learner: Learner, beta: f64, gamma: f64) -> Result<Certificate> {
    let (ns, na) = (model.n_states, model.n_actions);
    let singles = PolicyMatrix::count(ns, na);
    let total = match learner {
        Learner::Agt2 => singles,
        Learner::Sgt2 => singles.saturating_mul(singles),
    };
    if total > MAX_CERTIFIED_POLICIES {
        return Err(Error::TooManyPolicies {
            count: total,
            limit: MAX_CERTIFIED_POLICIES,
        });
    }
    let mut verdicts = Vec::with_capacity(total as usize);
    let mut push = |s1: &PolicyMatrix, s2: &PolicyMatrix| {
        let m = certificate_matrix(model, learner, beta, gamma, s1, s2);
        let worst_margin = row_margins(&m).into_iter().fold(f64::NEG_INFINITY, f64::max);
        verdicts.push(PolicyVerdict {
            sigma1: s1.actions().to_vec(),
            sigma2: s2.actions().to_vec(),
            worst_margin,
            passes: worst_margin < 0.0,
        });
    };
    match learner {
        Learner::Agt2 => {
            for s in PolicyMatrix::enumerate(ns, na) {
                push(&s, &s);
            }
        }
        Learner::Sgt2 => {
            for s1 in PolicyMatrix::enumerate(ns, na) {
                for s2 in PolicyMatrix::enumerate(ns, na) {
                    push(&s1, &s2);
                }
            }
        }
    }
    Ok(Certificate {
        learner,
        beta,
        gamma,
        verdicts,
    })
}
