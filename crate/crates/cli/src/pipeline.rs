//! Shared building blocks behind the subcommands: seeded training, model
//! files, set construction, and stream factories.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use levelset::active::{
    active_learn, ActiveConfig, ContextSource, SearchConfig, SelectionStrategy, TrainRun,
};
use levelset::adaptive::{AdaptiveStream, BufferConfig, RejectionStream, SampleStream};
use levelset::bench::SyntheticTask;
use levelset::diverse::{DiverseStream, DiversityKernel};
use levelset::gp::posterior_with_mean;
use levelset::seed::{derive_rng, mix};
use levelset::{Dataset, GpModel, KernelSpec, SuperLevelSet};

use crate::config::ExperimentConfig;
use crate::output::VERSION;

// Stream tags for deriving unit RNGs from the root seed.
pub const TAG_TASK_NOISE: u64 = 0x01;
pub const TAG_TRAIN: u64 = 0x02;
pub const TAG_BUILD: u64 = 0x03;
pub const TAG_SAMPLE: u64 = 0x04;
pub const TAG_EVAL: u64 = 0x1000;

pub fn active_config(cfg: &ExperimentConfig) -> ActiveConfig<f64> {
    let (d_theta, _) = cfg.task.dims();
    let mut ac = ActiveConfig::new(
        cfg.learner.kernel,
        d_theta,
        cfg.task.noise_std.max(1e-3),
    );
    ac.n_seed = cfg.learner.n_seed;
    ac.refit_every = cfg.learner.refit_every;
    ac.fit.restarts = cfg.learner.restarts;
    ac.fit.max_iters = cfg.learner.fit_max_iters;
    ac.search.candidates = cfg.learner.acquisition_candidates;
    ac
}

pub fn buffer_config(cfg: &ExperimentConfig) -> BufferConfig {
    BufferConfig {
        proposals_per_round: cfg.sampler.proposals_per_round,
        buffer_target: cfg.sampler.buffer_target,
        round_cap: cfg.sampler.round_cap,
    }
}

/// Train the score model for a config and root seed.
pub fn train(
    cfg: &ExperimentConfig,
    seed: u64,
    strategy: SelectionStrategy,
) -> anyhow::Result<(SyntheticTask<f64>, TrainRun<f64>)> {
    let task = cfg.task.build(mix(seed, TAG_TASK_NOISE))?;
    let (_, d_alpha) = cfg.task.dims();
    let mut ac = active_config(cfg);
    ac.strategy = strategy;
    let mut rng = derive_rng(seed, TAG_TRAIN);
    let run = active_learn(
        |t: &[f64], a: &[f64]| task.score(t, a).map_err(|e| e.to_string()),
        &ContextSource::UniformIid { dim: d_alpha },
        cfg.learner.budget,
        &ac,
        None,
        &mut rng,
    )
    .map_err(|e| anyhow::anyhow!("training failed: {e}"))?;
    Ok((task, run))
}

/// Serialized trained model: kernel, noise, and the data that defines the
/// posterior.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub d_theta: usize,
    pub d_alpha: usize,
    pub kernel: KernelSpec,
    pub noise_std: f64,
    pub prior_mean: f64,
    pub dataset: Dataset,
}

impl ModelFile {
    pub fn new(
        cfg_hash: &str,
        seed: u64,
        d_theta: usize,
        d_alpha: usize,
        run: &TrainRun<f64>,
    ) -> Self {
        ModelFile {
            version: VERSION.into(),
            config_hash: cfg_hash.into(),
            seed,
            d_theta,
            d_alpha,
            kernel: run.fitted.spec.clone(),
            noise_std: run.dataset.noise_std(),
            prior_mean: run.prior_mean,
            dataset: run.dataset.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading model file {}", path.display()))?;
        let model: ModelFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing model file {}", path.display()))?;
        Ok(model)
    }

    pub fn posterior(&self) -> anyhow::Result<GpModel> {
        Ok(posterior_with_mean(
            &self.dataset,
            &self.kernel,
            self.prior_mean,
        )?)
    }
}

/// Build the super-level set for one context.
pub fn build_set(
    model: GpModel,
    context: Vec<f64>,
    quantile: f64,
    seed: u64,
    tag: u64,
) -> anyhow::Result<SuperLevelSet> {
    let mut rng = derive_rng(seed, tag);
    Ok(SuperLevelSet::build(
        model,
        context,
        quantile,
        &SearchConfig::default(),
        &mut rng,
    )?)
}

pub fn make_stream(
    name: &str,
    set: SuperLevelSet,
    buffer: BufferConfig,
    seed: u64,
    tag: u64,
) -> anyhow::Result<Box<dyn SampleStream<f64> + Send>> {
    let rng = derive_rng(seed, tag);
    Ok(match name {
        "rejection" => Box::new(RejectionStream::new(set, rng)),
        "adaptive" => Box::new(AdaptiveStream::new(set, buffer, rng)),
        "diverse" => {
            let d = set_dim(&set);
            Box::new(DiverseStream::new(
                set,
                DiversityKernel::reference(d),
                buffer,
                rng,
            )?)
        }
        other => anyhow::bail!("unknown sampler '{other}'"),
    })
}

fn set_dim(set: &SuperLevelSet) -> usize {
    set.d_theta()
}
