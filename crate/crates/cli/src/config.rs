//! Experiment configuration: a TOML document with a top-level header, an
//! `[env]` table and exactly one section for the experiment kind. Unknown
//! keys and sections that the experiment does not use are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gtt_core::envs::GridKind;
use gtt_core::nn::DeepAlgorithm;
use gtt_core::ode::{Learner, Method};
use gtt_core::tabular::Algorithm;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TabularConvergence,
    OdeSandwich,
    BoundCheck,
    DeepTraining,
    StabilityCertificate,
}

impl ExperimentKind {
    fn section(self) -> &'static str {
        match self {
            Self::TabularConvergence => "tabular",
            Self::OdeSandwich => "ode",
            Self::BoundCheck => "bounds",
            Self::DeepTraining => "deep",
            Self::StabilityCertificate => "certificate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TabularConvergence => "tabular_convergence",
            Self::OdeSandwich => "ode_sandwich",
            Self::BoundCheck => "bound_check",
            Self::DeepTraining => "deep_training",
            Self::StabilityCertificate => "stability_certificate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Output file stem; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seeds: Vec<u64>,
    pub env: EnvConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabular: Option<TabularSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<OdeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deep: Option<DeepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    /// The two-state example MDP with its fixed behavior distribution.
    Example,
    /// Random MDP with uniform behavior.
    Random(RandomEnv),
    Frozenlake(GridEnv),
    Cliffwalk(GridEnv),
    TaxiLite(GridEnv),
    Cartpole(CartPoleEnv),
    /// MDP in the plain-text format, uniform behavior.
    File(FileEnv),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomEnv {
    pub states: usize,
    pub actions: usize,
    pub gamma: f64,
    /// Fixed MDP seed; when absent each run seed draws its own MDP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEnv {
    #[serde(default)]
    pub slip: f64,
    #[serde(default = "default_grid_gamma")]
    pub gamma: f64,
    #[serde(default = "default_grid_max_steps")]
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartPoleEnv {
    #[serde(default = "default_cartpole_max_steps")]
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEnv {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepConfig {
    /// `alpha_k = a / (b + k)`.
    Harmonic { a: f64, b: f64 },
    Constant { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularSection {
    pub algorithms: Vec<String>,
    #[serde(default)]
    pub betas: Vec<f64>,
    pub step: StepConfig,
    pub steps: u64,
    #[serde(default = "default_log_interval")]
    pub log_interval: u64,
    #[serde(default)]
    pub init_low: f64,
    #[serde(default = "one")]
    pub init_high: f64,
    #[serde(default)]
    pub init_equal: bool,
    /// Exploration for episodic environments.
    #[serde(default = "one")]
    pub epsilon_start: f64,
    #[serde(default = "default_tabular_epsilon_end")]
    pub epsilon_end: f64,
    #[serde(default = "default_tabular_epsilon_decay")]
    pub epsilon_decay: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    pub learners: Vec<String>,
    pub betas: Vec<f64>,
    #[serde(default = "one")]
    pub margin: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Record every `stride`-th grid point (the last point is always kept).
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Initial tables are drawn uniformly from `[init_low, init_high)`.
    #[serde(default)]
    pub init_low: f64,
    #[serde(default = "one")]
    pub init_high: f64,
    /// Also dump the three trajectories per grid point as CSV.
    #[serde(default)]
    pub trajectories: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub learners: Vec<String>,
    pub betas: Vec<f64>,
    /// Random table pairs per seed.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Perturbations of `Q*` have log-uniform scale in `[noise_min, noise_max]`.
    #[serde(default = "default_noise_min")]
    pub noise_min: f64,
    #[serde(default = "default_noise_max")]
    pub noise_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepSection {
    pub algorithms: Vec<String>,
    /// Hard-update periods for `dqn`.
    #[serde(default)]
    pub periods: Vec<usize>,
    /// Tracking weights for `agt2_dqn` and `sgt2_dqn`.
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default = "default_deep_gamma")]
    pub gamma: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_buffer")]
    pub buffer_capacity: usize,
    #[serde(default = "default_batch")]
    pub warmup: usize,
    #[serde(default = "default_train_every")]
    pub train_every: usize,
    pub episodes: usize,
    #[serde(default = "one")]
    pub epsilon_start: f64,
    #[serde(default = "default_deep_epsilon_end")]
    pub epsilon_end: f64,
    #[serde(default = "default_deep_epsilon_decay")]
    pub epsilon_decay: u64,
    /// Save the final online network of every run.
    #[serde(default)]
    pub checkpoints: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    #[serde(default = "default_learners")]
    pub learners: Vec<String>,
    #[serde(default = "default_certificate_betas")]
    pub betas: Vec<f64>,
    /// Overrides the MDP discount in the certificate matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Default for CertificateSection {
    fn default() -> Self {
        Self {
            learners: default_learners(),
            betas: default_certificate_betas(),
            gamma: None,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_grid_gamma() -> f64 {
    0.99
}
fn default_grid_max_steps() -> usize {
    200
}
fn default_cartpole_max_steps() -> usize {
    500
}
fn default_log_interval() -> u64 {
    1000
}
fn default_tabular_epsilon_end() -> f64 {
    0.1
}
fn default_tabular_epsilon_decay() -> u64 {
    20_000
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    200.0
}
fn default_method() -> String {
    "rk4".into()
}
fn default_slack() -> f64 {
    1e-6
}
fn default_stride() -> usize {
    1000
}
fn default_pairs() -> usize {
    100
}
fn default_noise_min() -> f64 {
    1e-3
}
fn default_noise_max() -> f64 {
    10.0
}
fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}
fn default_optimizer() -> String {
    "sgd".into()
}
fn default_lr() -> f64 {
    1e-3
}
fn default_deep_gamma() -> f64 {
    0.99
}
fn default_batch() -> usize {
    64
}
fn default_buffer() -> usize {
    10_000
}
fn default_train_every() -> usize {
    1
}
fn default_deep_epsilon_end() -> f64 {
    0.05
}
fn default_deep_epsilon_decay() -> u64 {
    5000
}
fn default_learners() -> Vec<String> {
    vec!["agt2".into(), "sgt2".into()]
}
fn default_certificate_betas() -> Vec<f64> {
    vec![0.01, 1.0, 100.0]
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_all<T: FromStr<Err = gtt_core::Error>>(what: &str, names: &[String]) -> Result<Vec<T>, CliError> {
    if names.is_empty() {
        return Err(invalid(format!("{what} list is empty")));
    }
    names.iter().map(|n| n.parse::<T>().map_err(CliError::from)).collect()
}

fn check_betas(betas: &[f64]) -> Result<(), CliError> {
    if betas.is_empty() {
        return Err(invalid("betas list is empty"));
    }
    match betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        Some(b) => Err(invalid(format!("beta must be positive and finite, got {b}"))),
        None => Ok(()),
    }
}

fn check_positive(what: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

fn check_epsilon(start: f64, end: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&start) && (0.0..=1.0).contains(&end) {
        Ok(())
    } else {
        Err(invalid(format!("epsilon values must lie in [0, 1], got {start} and {end}")))
    }
}

impl ExperimentConfig {
    /// Parses and validates `text`. Syntax errors and unknown keys carry
    /// the 1-based line number.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn is_tabular_env(&self) -> bool {
        !matches!(self.env, EnvConfig::Cartpole(_))
    }

    /// Grid worlds and cart-pole can be played episode by episode.
    pub fn is_episodic_env(&self) -> bool {
        matches!(
            self.env,
            EnvConfig::Frozenlake(_) | EnvConfig::Cliffwalk(_) | EnvConfig::TaxiLite(_) | EnvConfig::Cartpole(_)
        )
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(invalid("seeds list is empty"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("seeds list contains duplicates"));
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(invalid(format!("name {name:?} is not a plain file stem")));
            }
        }
        self.validate_env()?;

        let present = [
            ("tabular", self.tabular.is_some()),
            ("ode", self.ode.is_some()),
            ("bounds", self.bounds.is_some()),
            ("deep", self.deep.is_some()),
            ("certificate", self.certificate.is_some()),
        ];
        let wanted = self.experiment.section();
        for (section, is_present) in present {
            if is_present && section != wanted {
                return Err(invalid(format!("section [{section}] is not used by {}", self.experiment)));
            }
        }
        let missing = || invalid(format!("{} needs a [{wanted}] section", self.experiment));

        let needs_tabular_env = || {
            if self.is_tabular_env() {
                Ok(())
            } else {
                Err(invalid(format!("{} needs a tabular environment", self.experiment)))
            }
        };
        match self.experiment {
            ExperimentKind::TabularConvergence => {
                needs_tabular_env()?;
                self.tabular.as_ref().ok_or_else(missing)?.validate()
            }
            ExperimentKind::OdeSandwich => {
                needs_tabular_env()?;
                self.ode.as_ref().ok_or_else(missing)?.validate()
            }
            ExperimentKind::BoundCheck => {
                needs_tabular_env()?;
                self.bounds.as_ref().ok_or_else(missing)?.validate()
            }
            ExperimentKind::DeepTraining => {
                if !self.is_episodic_env() {
                    return Err(invalid("deep_training needs a grid world or cartpole environment"));
                }
                self.deep.as_ref().ok_or_else(missing)?.validate()
            }
            ExperimentKind::StabilityCertificate => {
                needs_tabular_env()?;
                self.certificate_section().validate()
            }
        }
    }

    /// The certificate settings, defaulted when the section is absent.
    pub fn certificate_section(&self) -> CertificateSection {
        self.certificate.clone().unwrap_or_default()
    }

    fn validate_env(&self) -> Result<(), CliError> {
        let gamma_ok = |g: f64| (0.0..1.0).contains(&g);
        match &self.env {
            EnvConfig::Random(r) => {
                if r.states == 0 || r.actions == 0 {
                    return Err(invalid("random MDP needs positive states and actions"));
                }
                if !gamma_ok(r.gamma) {
                    return Err(invalid(format!("gamma must lie in [0, 1), got {}", r.gamma)));
                }
            }
            EnvConfig::Frozenlake(g) | EnvConfig::Cliffwalk(g) | EnvConfig::TaxiLite(g) => {
                if !(0.0..=1.0).contains(&g.slip) {
                    return Err(invalid(format!("slip must lie in [0, 1], got {}", g.slip)));
                }
                if !gamma_ok(g.gamma) {
                    return Err(invalid(format!("gamma must lie in [0, 1), got {}", g.gamma)));
                }
                if g.max_steps == 0 {
                    return Err(invalid("max_steps must be positive"));
                }
            }
            EnvConfig::Cartpole(c) => {
                if c.max_steps == 0 {
                    return Err(invalid("max_steps must be positive"));
                }
            }
            EnvConfig::Example | EnvConfig::File(_) => {}
        }
        Ok(())
    }

    pub fn env_name(&self) -> String {
        match &self.env {
            EnvConfig::Example => "example".into(),
            EnvConfig::Random(r) => match r.seed {
                Some(seed) => format!("random_{}x{}_s{seed}", r.states, r.actions),
                None => format!("random_{}x{}", r.states, r.actions),
            },
            EnvConfig::Frozenlake(_) => GridKind::FrozenLake.to_string(),
            EnvConfig::Cliffwalk(_) => GridKind::CliffWalk.to_string(),
            EnvConfig::TaxiLite(_) => GridKind::TaxiLite.to_string(),
            EnvConfig::Cartpole(_) => "cartpole".into(),
            EnvConfig::File(f) => f
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    }
}

impl TabularSection {
    pub fn algorithms(&self) -> Result<Vec<Algorithm>, CliError> {
        parse_all("algorithms", &self.algorithms)
    }

    fn validate(&self) -> Result<(), CliError> {
        let algos = self.algorithms()?;
        if algos.iter().any(|a| a.uses_beta()) {
            check_betas(&self.betas)?;
        } else if !self.betas.is_empty() {
            return Err(invalid("betas given but no listed algorithm uses them"));
        }
        match self.step {
            StepConfig::Harmonic { a, b } => {
                check_positive("step a", a)?;
                check_positive("step b", b)?;
                if a > b {
                    return Err(invalid(format!("harmonic step needs a <= b so that alpha_k <= 1, got a={a} b={b}")));
                }
            }
            StepConfig::Constant { alpha } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(invalid(format!("constant step must lie in (0, 1], got {alpha}")));
                }
            }
        }
        if self.steps == 0 || self.log_interval == 0 {
            return Err(invalid("steps and log_interval must be positive"));
        }
        if !(self.init_low <= self.init_high) || !self.init_low.is_finite() || !self.init_high.is_finite() {
            return Err(invalid("init range must be finite with init_low <= init_high"));
        }
        check_epsilon(self.epsilon_start, self.epsilon_end)
    }
}

impl OdeSection {
    pub fn learners(&self) -> Result<Vec<Learner>, CliError> {
        parse_all("learners", &self.learners)
    }

    pub fn method(&self) -> Result<Method, CliError> {
        Ok(self.method.parse()?)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.learners()?;
        self.method()?;
        check_betas(&self.betas)?;
        check_positive("margin", self.margin)?;
        check_positive("dt", self.dt)?;
        check_positive("t_end", self.t_end)?;
        if !(self.slack >= 0.0) {
            return Err(invalid("slack must be nonnegative"));
        }
        if self.stride == 0 {
            return Err(invalid("stride must be positive"));
        }
        if (self.t_end / self.dt) > 1e8 {
            return Err(invalid("t_end / dt exceeds 1e8 grid points"));
        }
        if !(self.init_low <= self.init_high) {
            return Err(invalid("init range must satisfy init_low <= init_high"));
        }
        Ok(())
    }
}

impl BoundSection {
    pub fn learners(&self) -> Result<Vec<Learner>, CliError> {
        parse_all("learners", &self.learners)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.learners()?;
        check_betas(&self.betas)?;
        if self.pairs == 0 {
            return Err(invalid("pairs must be positive"));
        }
        check_positive("noise_min", self.noise_min)?;
        check_positive("noise_max", self.noise_max)?;
        if self.noise_min > self.noise_max {
            return Err(invalid("noise_min must not exceed noise_max"));
        }
        Ok(())
    }
}

impl DeepSection {
    pub fn algorithms(&self) -> Result<Vec<DeepAlgorithm>, CliError> {
        parse_all("algorithms", &self.algorithms)
    }

    fn validate(&self) -> Result<(), CliError> {
        let algos = self.algorithms()?;
        if algos.contains(&DeepAlgorithm::Dqn) {
            if self.periods.is_empty() {
                return Err(invalid("dqn needs a nonempty periods list"));
            }
            if self.periods.contains(&0) {
                return Err(invalid("periods must be at least 1"));
            }
        } else if !self.periods.is_empty() {
            return Err(invalid("periods given but dqn is not listed"));
        }
        if algos.iter().any(|a| *a != DeepAlgorithm::Dqn) {
            check_betas(&self.betas)?;
        } else if !self.betas.is_empty() {
            return Err(invalid("betas given but no target-tracking algorithm is listed"));
        }
        if !matches!(self.optimizer.as_str(), "sgd" | "adam") {
            return Err(invalid(format!("optimizer must be sgd or adam, got {:?}", self.optimizer)));
        }
        check_positive("lr", self.lr)?;
        if self.optimizer == "adam" && self.momentum != 0.0 {
            return Err(invalid("momentum only applies to the sgd optimizer"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if self.hidden.contains(&0) {
            return Err(invalid("hidden layer widths must be positive"));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(invalid("need 0 < batch_size <= buffer_capacity"));
        }
        if self.train_every == 0 || self.episodes == 0 {
            return Err(invalid("train_every and episodes must be positive"));
        }
        check_epsilon(self.epsilon_start, self.epsilon_end)
    }
}

impl CertificateSection {
    pub fn learners(&self) -> Result<Vec<Learner>, CliError> {
        parse_all("learners", &self.learners)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.learners()?;
        check_betas(&self.betas)?;
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(invalid(format!("gamma override must be finite and nonnegative, got {g}")));
            }
        }
        Ok(())
    }
}
