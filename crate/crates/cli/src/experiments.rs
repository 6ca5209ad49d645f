//! The five experiment kinds. Each expands into independent jobs, one per
//! grid point and seed; jobs run in parallel and their records are
//! collected in job order, so output does not depend on the worker count.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gtt_core::analysis::verify_bounds;
use gtt_core::envs::{example_mdp, gridworld, random_mdp, CartPole, CartPoleParams, GridKind, GridParams, TabularEnv};
use gtt_core::mdp::{greedy_policy, optimal_q, policy_value};
use gtt_core::nn::{self, DeepAlgorithm, DeepConfig, OptimizerKind};
use gtt_core::ode::{certify, check_sandwich, policy_switches, sandwich_trajectories, Learner, OdeField, OdeModel, System};
use gtt_core::record::write_csv;
use gtt_core::tabular::{run_learner, Algorithm, EpsilonSchedule, InitSpec, LearnerConfig, Sampling, StepSchedule};
use gtt_core::{seeded_rng, BehaviorDistribution, ExperimentRecord, QPair, QTable, TabularMdp};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{EnvConfig, ExperimentConfig, ExperimentKind, GridEnv, StepConfig};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads; `0` lets rayon pick.
    pub workers: usize,
    pub out_dir: PathBuf,
    /// Relative `file` environment paths resolve against this directory.
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ExperimentRecord>,
    /// Set for certificate experiments: every (learner, beta) certified.
    pub certified: Option<bool>,
    pub elapsed_secs: f64,
}

/// A tabular problem for one seed: the MDP, the behaviour distribution used
/// for i.i.d. sampling and, for grid worlds, the episodic environment.
struct Problem {
    mdp: TabularMdp,
    behavior: BehaviorDistribution,
    env: Option<TabularEnv>,
}

fn grid_kind(env: &EnvConfig) -> Option<(GridKind, &GridEnv)> {
    match env {
        EnvConfig::Frozenlake(g) => Some((GridKind::FrozenLake, g)),
        EnvConfig::Cliffwalk(g) => Some((GridKind::CliffWalk, g)),
        EnvConfig::TaxiLite(g) => Some((GridKind::TaxiLite, g)),
        _ => None,
    }
}

fn grid_env(kind: GridKind, g: &GridEnv, seed: u64) -> Result<TabularEnv, CliError> {
    let params = GridParams {
        slip: g.slip,
        gamma: g.gamma,
        max_steps: g.max_steps,
    };
    Ok(gridworld(kind, params, seed)?)
}

fn problem(cfg: &ExperimentConfig, file_mdp: Option<&TabularMdp>, seed: u64) -> Result<Problem, CliError> {
    let uniform = |mdp: TabularMdp| {
        let behavior = BehaviorDistribution::uniform(mdp.n_states(), mdp.n_actions());
        Problem { mdp, behavior, env: None }
    };
    Ok(match &cfg.env {
        EnvConfig::Example => {
            let (mdp, behavior) = example_mdp();
            Problem { mdp, behavior, env: None }
        }
        EnvConfig::Random(r) => uniform(random_mdp(r.states, r.actions, r.gamma, r.seed.unwrap_or(seed))?),
        EnvConfig::File(_) => uniform(file_mdp.expect("file MDP loaded up front").clone()),
        EnvConfig::Frozenlake(_) | EnvConfig::Cliffwalk(_) | EnvConfig::TaxiLite(_) => {
            let (kind, g) = grid_kind(&cfg.env).expect("grid environment");
            let env = grid_env(kind, g, seed)?;
            Problem {
                env: Some(env.clone()),
                ..uniform(env.mdp().clone())
            }
        }
        EnvConfig::Cartpole(_) => return Err(CliError::Config("cartpole has no tabular model".into())),
    })
}

fn load_file_mdp(cfg: &ExperimentConfig, base: &Path) -> Result<Option<TabularMdp>, CliError> {
    let EnvConfig::File(f) = &cfg.env else {
        return Ok(None);
    };
    let path = if f.path.is_relative() { base.join(&f.path) } else { f.path.clone() };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(Some(TabularMdp::from_text(&text)?))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))
}

/// Runs every job of `cfg`. Trajectory files (ODE experiments) are written
/// under `opts.out_dir` as the jobs finish.
pub fn run(cfg: &ExperimentConfig, name: &str, opts: &RunOptions) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let file_mdp = load_file_mdp(cfg, &opts.base_dir)?;
    let ctx = Ctx {
        cfg,
        file_mdp: file_mdp.as_ref(),
        env_name: cfg.env_name(),
        traj_dir: opts.out_dir.join(format!("{name}_trajectories")),
        checkpoint_dir: opts.out_dir.join(format!("{name}_checkpoints")),
    };
    let pool = pool(opts.workers)?;
    let (records, certified) = pool.install(|| match cfg.experiment {
        ExperimentKind::TabularConvergence => tabular(&ctx).map(|r| (r, None)),
        ExperimentKind::OdeSandwich => ode(&ctx).map(|r| (r, None)),
        ExperimentKind::BoundCheck => bounds(&ctx).map(|r| (r, None)),
        ExperimentKind::DeepTraining => deep(&ctx).map(|r| (r, None)),
        ExperimentKind::StabilityCertificate => certificates(&ctx).map(|(r, c)| (r, Some(c))),
    })?;
    Ok(RunOutput {
        records,
        certified,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    file_mdp: Option<&'a TabularMdp>,
    env_name: String,
    traj_dir: PathBuf,
    checkpoint_dir: PathBuf,
}

impl Ctx<'_> {
    fn problem(&self, seed: u64) -> Result<Problem, CliError> {
        problem(self.cfg, self.file_mdp, seed)
    }

    fn record(&self, algorithm: impl Into<String>) -> ExperimentRecord {
        ExperimentRecord::new(self.cfg.experiment.to_string(), algorithm, self.env_name.clone())
    }
}

/// Expands `points x seeds` into jobs, runs them on the current pool and
/// returns their records in expansion order.
fn fan_out<P, F>(points: &[P], seeds: &[u64], job: F) -> Result<Vec<ExperimentRecord>, CliError>
where
    P: Sync,
    F: Fn(&P, u64) -> Result<ExperimentRecord, CliError> + Sync,
{
    let jobs: Vec<(&P, u64)> = points.iter().flat_map(|p| seeds.iter().map(move |&s| (p, s))).collect();
    let mut records = jobs.into_par_iter().map(|(p, s)| job(p, s)).collect::<Result<Vec<_>, _>>()?;
    for r in &mut records {
        r.sort();
    }
    Ok(records)
}

fn with_betas<T: Copy>(items: &[T], betas: &[f64], uses_beta: impl Fn(T) -> bool) -> Vec<(T, Option<f64>)> {
    items
        .iter()
        .flat_map(|&it| {
            if uses_beta(it) {
                betas.iter().map(|&b| (it, Some(b))).collect::<Vec<_>>()
            } else {
                vec![(it, None)]
            }
        })
        .collect()
}

fn tabular(ctx: &Ctx) -> Result<Vec<ExperimentRecord>, CliError> {
    let t = ctx.cfg.tabular.as_ref().expect("validated");
    let points = with_betas(&t.algorithms()?, &t.betas, |a: Algorithm| a.uses_beta());
    let schedule = match t.step {
        StepConfig::Harmonic { a, b } => StepSchedule::Harmonic { a, b },
        StepConfig::Constant { alpha } => StepSchedule::Constant(alpha),
    };
    fan_out(&points, &ctx.cfg.seeds, |&(algorithm, beta), seed| {
        let p = ctx.problem(seed)?;
        let sampling = match &p.env {
            Some(env) => Sampling::Episodic {
                env: env.clone(),
                epsilon: EpsilonSchedule {
                    start: t.epsilon_start,
                    end: t.epsilon_end,
                    decay_steps: t.epsilon_decay,
                },
            },
            None => Sampling::Iid {
                mdp: p.mdp.clone(),
                behavior: p.behavior,
            },
        };
        let run = run_learner(&LearnerConfig {
            algorithm,
            beta: beta.unwrap_or(0.0),
            schedule,
            sampling,
            total_steps: t.steps,
            log_interval: t.log_interval,
            init: InitSpec {
                lo: t.init_low,
                hi: t.init_high,
                equal: t.init_equal,
            },
            seed,
        })?;
        let mut rec = ctx.record(algorithm.to_string());
        if let Some(b) = beta {
            rec = rec.with_beta(b);
        }
        for e in &run.errors {
            rec.push(seed, e.step, "err_a", e.err_a);
            rec.push(seed, e.step, "err_b", e.err_b);
        }
        for (i, r) in run.episode_returns.iter().enumerate() {
            rec.push(seed, i as u64, "episode_return", *r);
        }
        if let (Some(env), false) = (&p.env, run.diverged) {
            let v = policy_value(&p.mdp, &greedy_policy(&run.estimate()));
            let v_star = policy_value(&p.mdp, &greedy_policy(&run.q_star));
            rec.push(seed, 0, "greedy_start_value", env.start_value(&v));
            rec.push(seed, 0, "optimal_start_value", env.start_value(&v_star));
        }
        rec.push(seed, 0, "diverged", f64::from(u8::from(run.diverged)));
        Ok(rec)
    })
}

/// Stacked deviation `(q_a - Q*, q_b - Q*)` of two random tables.
fn random_deviation(q_star: &QTable, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    let (ns, na) = (q_star.n_states(), q_star.n_actions());
    let q_a = QTable::random(ns, na, lo, hi, &mut rng);
    let q_b = QTable::random(ns, na, lo, hi, &mut rng);
    q_a.values()
        .iter()
        .chain(q_b.values())
        .zip(q_star.values().iter().chain(q_star.values()))
        .map(|(q, s)| q - s)
        .collect()
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn ode(ctx: &Ctx) -> Result<Vec<ExperimentRecord>, CliError> {
    let o = ctx.cfg.ode.as_ref().expect("validated");
    let method = o.method()?;
    let points = with_betas(&o.learners()?, &o.betas, |_| true);
    if o.trajectories {
        fs::create_dir_all(&ctx.traj_dir)?;
    }
    fan_out(&points, &ctx.cfg.seeds, |&(learner, beta), seed| {
        let beta = beta.expect("every learner has a beta");
        let p = ctx.problem(seed)?;
        let field = OdeField::from_mdp(learner, System::Original, &p.mdp, &p.behavior, beta)?;
        let x0 = random_deviation(field.model().q_star(), o.init_low, o.init_high, seed);
        let (lo, orig, hi) = sandwich_trajectories(&field, &x0, o.margin, o.dt, o.t_end, method)?;
        let report = check_sandwich(&lo, &orig, &hi, o.slack)?;

        let mut rec = ctx.record(learner.to_string()).with_beta(beta);
        let last = orig.len() - 1;
        for k in (0..orig.len()).filter(|&k| k % o.stride == 0 || k == last) {
            rec.push(seed, k as u64, "norm_original", sup_norm(orig.state(k)));
            rec.push(seed, k as u64, "norm_lower", sup_norm(lo.state(k)));
            rec.push(seed, k as u64, "norm_upper", sup_norm(hi.state(k)));
        }
        rec.push(seed, 0, "sandwich_holds", f64::from(u8::from(report.holds())));
        rec.push(seed, 0, "worst_gap", report.worst_gap);
        rec.push(seed, 0, "policy_switches", policy_switches(&field, &orig) as f64);

        if o.trajectories {
            for (system, traj) in [("lower", &lo), ("original", &orig), ("upper", &hi)] {
                let path = ctx.traj_dir.join(format!("{learner}_beta{beta}_seed{seed}_{system}.csv"));
                let file = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                traj.write_csv(std::io::BufWriter::new(file), o.stride)?;
            }
        }
        Ok(rec)
    })
}

fn bounds(ctx: &Ctx) -> Result<Vec<ExperimentRecord>, CliError> {
    let b = ctx.cfg.bounds.as_ref().expect("validated");
    let points = with_betas(&b.learners()?, &b.betas, |_| true);
    fan_out(&points, &ctx.cfg.seeds, |&(learner, beta), seed| {
        let beta = beta.expect("every learner has a beta");
        let p = ctx.problem(seed)?;
        let q_star = optimal_q(&p.mdp, 1e-12);
        let mut rng = seeded_rng(seed);
        let (lmin, lmax) = (b.noise_min.ln(), b.noise_max.ln());
        let mut rec = ctx.record(learner.to_string()).with_beta(beta);
        for i in 0..b.pairs {
            let scale = rng.random_range(lmin..=lmax).exp();
            let mut perturb = || {
                let v = q_star.values().iter().map(|q| q + scale * rng.random_range(-1.0..=1.0)).collect();
                QTable::from_vec(q_star.n_states(), q_star.n_actions(), v)
            };
            let pair = QPair::new(perturb()?, perturb()?)?;
            let report = verify_bounds(&pair, &p.mdp, beta, learner)?;
            let i = i as u64;
            rec.push(seed, i, "epsilon", report.epsilon);
            rec.push(seed, i, "bound_q1", report.bound_q1);
            rec.push(seed, i, "bound_q2", report.bound_q2);
            rec.push(seed, i, "err_q1", report.observed_err_q1);
            rec.push(seed, i, "err_q2", report.observed_err_q2);
            rec.push(seed, i, "satisfied_q1", f64::from(u8::from(report.satisfied_q1())));
            rec.push(seed, i, "satisfied_q2", f64::from(u8::from(report.satisfied_q2())));
        }
        Ok(rec)
    })
}

#[derive(Clone, Copy)]
enum DeepPoint {
    Dqn(usize),
    Tracking(DeepAlgorithm, f64),
}

fn deep(ctx: &Ctx) -> Result<Vec<ExperimentRecord>, CliError> {
    let d = ctx.cfg.deep.as_ref().expect("validated");
    let mut points = Vec::new();
    for algo in d.algorithms()? {
        match algo {
            DeepAlgorithm::Dqn => points.extend(d.periods.iter().map(|&c| DeepPoint::Dqn(c))),
            _ => points.extend(d.betas.iter().map(|&b| DeepPoint::Tracking(algo, b))),
        }
    }
    if d.checkpoints {
        fs::create_dir_all(&ctx.checkpoint_dir)?;
    }
    let optimizer = match d.optimizer.as_str() {
        "adam" => OptimizerKind::adam(d.lr),
        _ => OptimizerKind::Sgd {
            lr: d.lr,
            momentum: d.momentum,
        },
    };
    fan_out(&points, &ctx.cfg.seeds, |&point, seed| {
        let (algorithm, period, beta) = match point {
            DeepPoint::Dqn(c) => (DeepAlgorithm::Dqn, c, 1.0),
            DeepPoint::Tracking(a, b) => (a, 1, b),
        };
        let cfg = DeepConfig {
            algorithm,
            hidden: d.hidden.clone(),
            optimizer,
            gamma: d.gamma,
            batch_size: d.batch_size,
            buffer_capacity: d.buffer_capacity,
            warmup: d.warmup,
            train_every: d.train_every,
            epsilon: EpsilonSchedule {
                start: d.epsilon_start,
                end: d.epsilon_end,
                decay_steps: d.epsilon_decay,
            },
            episodes: d.episodes,
            period,
            beta,
            seed,
        };
        let run = match &ctx.cfg.env {
            EnvConfig::Cartpole(c) => {
                let params = CartPoleParams {
                    max_steps: c.max_steps,
                    ..CartPoleParams::default()
                };
                nn::train(&mut CartPole::with_params(params, seed), &cfg)?
            }
            env => {
                let (kind, g) = grid_kind(env).expect("validated episodic environment");
                nn::train(&mut grid_env(kind, g, seed)?, &cfg)?
            }
        };
        let mut rec = ctx.record(algorithm.to_string());
        let tag;
        (rec, tag) = match point {
            DeepPoint::Dqn(c) => (rec.with_period(c as u64), format!("period{c}")),
            DeepPoint::Tracking(_, b) => (rec.with_beta(b), format!("beta{b}")),
        };
        if d.checkpoints {
            let path = ctx.checkpoint_dir.join(format!("{algorithm}_{tag}_seed{seed}.bin"));
            let file = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut w = std::io::BufWriter::new(file);
            run.online.save(&mut w)?;
            w.flush()?;
        }
        for (i, (r, l)) in run.episode_returns.iter().zip(&run.episode_losses).enumerate() {
            rec.push(seed, i as u64, "episode_return", *r);
            rec.push(seed, i as u64, "episode_loss", *l);
        }
        rec.push(seed, 0, "env_steps", run.env_steps as f64);
        rec.push(seed, 0, "grad_steps", run.grad_steps as f64);
        rec.push(seed, 0, "diverged", f64::from(u8::from(run.diverged)));
        Ok(rec)
    })
}

fn certificates(ctx: &Ctx) -> Result<(Vec<ExperimentRecord>, bool), CliError> {
    let c = ctx.cfg.certificate_section();
    let points = with_betas(&c.learners()?, &c.betas, |_: Learner| true);
    let records = fan_out(&points, &ctx.cfg.seeds, |&(learner, beta), seed| {
        let beta = beta.expect("every learner has a beta");
        let p = ctx.problem(seed)?;
        let model = OdeModel::new(&p.mdp, &p.behavior)?;
        let gamma = c.gamma.unwrap_or(p.mdp.gamma());
        let cert = certify(&model, learner, beta, gamma)?;
        let mut rec = ctx.record(learner.to_string()).with_beta(beta);
        for (i, v) in cert.verdicts.iter().enumerate() {
            rec.push(seed, i as u64, "policy_margin", v.worst_margin);
            rec.push(seed, i as u64, "policy_pass", f64::from(u8::from(v.passes)));
        }
        let worst = cert.verdicts.iter().map(|v| v.worst_margin).fold(f64::NEG_INFINITY, f64::max);
        rec.push(seed, 0, "worst_margin", worst);
        rec.push(seed, 0, "certified", f64::from(u8::from(cert.certified())));
        Ok(rec)
    })?;
    let all = records
        .iter()
        .all(|r| r.metric("certified").all(|row| row.value == 1.0));
    Ok((records, all))
}

/// Writes `<name>.csv` and `<name>.manifest` into `out_dir`.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    name: &str,
    config_path: &Path,
    opts: &RunOptions,
    output: &RunOutput,
) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(&opts.out_dir)?;
    let csv_path = opts.out_dir.join(format!("{name}.csv"));
    let file = fs::File::create(&csv_path).map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    write_csv(std::io::BufWriter::new(file), &output.records)?;

    let rows: usize = output.records.iter().map(|r| r.rows().len()).sum();
    let mut manifest = format!(
        "version = {:?}\nexperiment = {:?}\nconfig = {:?}\nworkers = {}\nwall_clock_secs = {:.3}\nrows = {rows}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.experiment.to_string(),
        config_path.display().to_string(),
        opts.workers,
        output.elapsed_secs,
    );
    if let Some(c) = output.certified {
        manifest.push_str(&format!("certified = {c}\n"));
    }
    manifest.push_str("\n# resolved configuration\n");
    manifest.push_str(&cfg.to_toml());
    let manifest_path = opts.out_dir.join(format!("{name}.manifest"));
    fs::write(&manifest_path, manifest)?;
    Ok((csv_path, manifest_path))
}
