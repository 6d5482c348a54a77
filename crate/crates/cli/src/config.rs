//! Experiment configuration: one TOML file drives training, sampling,
//! evaluation, and the kernel-learning experiment.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use levelset::bench::{ScoreShape, SyntheticTask};
use levelset::harness::task1_boxes;
use levelset::kernel::KernelKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskConfig,
    pub learner: LearnerConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub harness: HarnessConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Ellipsoidal region scored by the pouring shape (defaults 4 controls,
    /// 4 contexts).
    Pour,
    /// Ellipsoidal region scored by the scooping shape (7 controls,
    /// 2 contexts).
    Scoop,
    /// Ellipsoidal region scored by the piecewise-linear shape.
    Piecewise,
    /// Two unequal feasible boxes scored by the pushing shape; the harness
    /// blocks one box per task instance.
    TwoBox,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    pub d_theta: Option<usize>,
    pub d_alpha: Option<usize>,
    /// Fraction of the control box occupied by the true super-level set.
    #[serde(default = "default_volume")]
    pub volume_fraction: f64,
    #[serde(default = "default_task_noise")]
    pub noise_std: f64,
    /// Piecewise shape threshold.
    pub tau: Option<f64>,
    /// How strongly the context moves the region center.
    pub center_shift: Option<f64>,
}

fn default_volume() -> f64 {
    0.08
}

fn default_task_noise() -> f64 {
    0.01
}

impl TaskConfig {
    pub fn dims(&self) -> (usize, usize) {
        let (dt, da) = match self.kind {
            TaskKind::Pour => (4, 4),
            TaskKind::Scoop => (7, 2),
            TaskKind::Piecewise => (2, 1),
            TaskKind::TwoBox => (2, 0),
        };
        (self.d_theta.unwrap_or(dt), self.d_alpha.unwrap_or(da))
    }

    pub fn build(&self, noise_seed: u64) -> anyhow::Result<SyntheticTask<f64>> {
        let (d_theta, d_alpha) = self.dims();
        let task = match self.kind {
            TaskKind::Pour => SyntheticTask::ellipsoid(
                d_theta,
                d_alpha,
                ScoreShape::Pour2D,
                self.volume_fraction,
                self.center_shift.unwrap_or(0.2),
                self.noise_std,
                noise_seed,
            ),
            TaskKind::Scoop => SyntheticTask::ellipsoid(
                d_theta,
                d_alpha,
                ScoreShape::Scoop2D,
                self.volume_fraction,
                self.center_shift.unwrap_or(0.05),
                self.noise_std,
                noise_seed,
            ),
            TaskKind::Piecewise => SyntheticTask::ellipsoid(
                d_theta,
                d_alpha,
                ScoreShape::Piecewise {
                    tau: self.tau.unwrap_or(0.9),
                },
                self.volume_fraction,
                self.center_shift.unwrap_or(0.2),
                self.noise_std,
                noise_seed,
            ),
            TaskKind::TwoBox => {
                if d_theta != 2 {
                    bail!("task.d_theta: the two-box task is 2-dimensional");
                }
                SyntheticTask::two_box_push(task1_boxes(), d_alpha, self.noise_std, noise_seed)
            }
        };
        task.map_err(|e| anyhow::anyhow!("task config invalid: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kernel: KernelKind,
    /// Active-learning evaluations after seeding.
    pub budget: usize,
    #[serde(default = "default_n_seed")]
    pub n_seed: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Refit hyperparameters every k-th evaluation.
    #[serde(default = "default_refit_every")]
    pub refit_every: usize,
    #[serde(default = "default_fit_iters")]
    pub fit_max_iters: usize,
    #[serde(default = "default_candidates")]
    pub acquisition_candidates: usize,
}

fn default_n_seed() -> usize {
    5
}

fn default_restarts() -> usize {
    2
}

fn default_refit_every() -> usize {
    1
}

fn default_fit_iters() -> usize {
    150
}

fn default_candidates() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Proposals per buffer round (`n`).
    #[serde(default = "default_proposals")]
    pub proposals_per_round: usize,
    /// Buffer target (`m`).
    #[serde(default = "default_buffer_target")]
    pub buffer_target: usize,
    #[serde(default = "default_round_cap")]
    pub round_cap: usize,
    /// Quantile of the relaxed confidence threshold.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    /// Union-bound mass scheme: single, uniform, infinite.
    #[serde(default = "default_pi_scheme")]
    pub pi_scheme: String,
    /// Which streams evaluate runs.
    #[serde(default = "default_samplers")]
    pub samplers: Vec<String>,
}

fn default_proposals() -> usize {
    100
}

fn default_buffer_target() -> usize {
    20
}

fn default_round_cap() -> usize {
    1000
}

fn default_quantile() -> f64 {
    0.95
}

fn default_pi_scheme() -> String {
    "infinite".into()
}

fn default_samplers() -> Vec<String> {
    vec!["rejection".into(), "adaptive".into(), "diverse".into()]
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            proposals_per_round: default_proposals(),
            buffer_target: default_buffer_target(),
            round_cap: default_round_cap(),
            quantile: default_quantile(),
            pi_scheme: default_pi_scheme(),
            samplers: default_samplers(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    /// Independent evaluation seeds.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_test_tasks")]
    pub test_tasks: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_attempt_cap")]
    pub attempt_cap: usize,
    #[serde(default = "default_training_tasks")]
    pub training_tasks: usize,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
}

fn default_seeds() -> usize {
    20
}

fn default_test_tasks() -> usize {
    100
}

fn default_epsilon() -> f64 {
    0.3
}

fn default_gamma() -> f64 {
    0.6
}

fn default_attempt_cap() -> usize {
    10
}

fn default_training_tasks() -> usize {
    50
}

fn default_eval_every() -> usize {
    10
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            seeds: default_seeds(),
            test_tasks: default_test_tasks(),
            epsilon: default_epsilon(),
            gamma: default_gamma(),
            attempt_cap: default_attempt_cap(),
            training_tasks: default_training_tasks(),
            eval_every: default_eval_every(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.sampler.quantile > 0.0 && self.sampler.quantile < 1.0) {
            bail!("sampler.quantile: must lie in (0,1)");
        }
        if self.sampler.proposals_per_round < 2 {
            bail!("sampler.proposals_per_round: must be at least 2");
        }
        if self.sampler.buffer_target < 1 {
            bail!("sampler.buffer_target: must be at least 1");
        }
        for s in &self.sampler.samplers {
            if !matches!(s.as_str(), "rejection" | "adaptive" | "diverse") {
                bail!("sampler.samplers: unknown sampler '{s}'");
            }
        }
        match self.sampler.pi_scheme.as_str() {
            "single" | "uniform" | "infinite" => {}
            other => bail!("sampler.pi_scheme: unknown scheme '{other}'"),
        }
        if !(self.harness.epsilon >= 0.0 && self.harness.epsilon < 1.0) {
            bail!("harness.epsilon: must lie in [0,1)");
        }
        if !(self.harness.gamma > 0.0 && self.harness.gamma < 1.0) {
            bail!("harness.gamma: must lie in (0,1)");
        }
        let (_, _) = self.task.dims();
        self.task.build(0).map(|_| ()).context("task")?;
        Ok(())
    }

    /// Hash of the canonical serialized config; embedded in every output.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for b in &digest[..8] {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}
