//! Library surface of the experiment runner; `main` is a thin wrapper so
//! integration tests can drive the commands in-process.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use levelset::active::SelectionStrategy;

#[derive(Parser, Debug)]
#[command(
    name = "levelset",
    version,
    about = "Learn skill-success level sets and sample from them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Strategy {
    Straddle,
    Random,
}

impl From<Strategy> for SelectionStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Straddle => SelectionStrategy::Straddle,
            Strategy::Random => SelectionStrategy::UniformRandom,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SamplerArg {
    Rejection,
    Adaptive,
    Diverse,
}

impl SamplerArg {
    pub fn name(self) -> &'static str {
        match self {
            SamplerArg::Rejection => "rejection",
            SamplerArg::Adaptive => "adaptive",
            SamplerArg::Diverse => "diverse",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run active level-set training and write the dataset, model, and log.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Strategy::Straddle)]
        strategy: Strategy,
    },
    /// Sample controls from a trained model for one context.
    Sample {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated context vector (empty for context-free models).
        #[arg(long, default_value = "")]
        context: String,
        #[arg(long, value_enum, default_value_t = SamplerArg::Adaptive)]
        sampler: SamplerArg,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0.95)]
        quantile: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train once, then measure every configured sampler across seeds.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads across evaluation seeds.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Kernel-learning experiment on the two-box pushing task.
    Task1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Render the tables from a previous evaluate/task1 run.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Exit-status taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Other = 1,
    Config = 2,
    Numerical = 3,
    SamplerCap = 4,
}

fn classify(err: &anyhow::Error) -> ExitCode {
    if let Some(core) = err.downcast_ref::<levelset::Error>() {
        return match core {
            levelset::Error::VanishingSet { .. } => ExitCode::SamplerCap,
            levelset::Error::Factorization { .. }
            | levelset::Error::FitFailed(_)
            | levelset::Error::NonFinite { .. } => ExitCode::Numerical,
            _ => ExitCode::Numerical,
        };
    }
    if err.downcast_ref::<toml::de::Error>().is_some() {
        return ExitCode::Config;
    }
    let text = err.to_string();
    if text.contains("config") || text.contains("context has") {
        ExitCode::Config
    } else {
        ExitCode::Other
    }
}

pub fn parse_context(raw: &str) -> anyhow::Result<Vec<f64>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| anyhow::anyhow!("context entry '{f}': {e}"))
        })
        .collect()
}

/// Run a parsed command; returns the exit code.
pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Train {
            config,
            seed,
            out,
            strategy,
        } => config::ExperimentConfig::load(&config)
            .map_err(|e| (ExitCode::Config, e))
            .and_then(|cfg| {
                commands::cmd_train(&cfg, seed, &out, strategy.into())
                    .map_err(|e| (classify(&e), e))
            }),
        Command::Sample {
            model,
            context,
            sampler,
            count,
            quantile,
            seed,
            out,
        } => parse_context(&context)
            .map_err(|e| (ExitCode::Config, e))
            .and_then(|ctx| {
                commands::cmd_sample(&model, &ctx, sampler.name(), count, quantile, seed, &out)
                    .map_err(|e| (classify(&e), e))
            }),
        Command::Evaluate {
            config,
            seed,
            out,
            jobs,
        } => config::ExperimentConfig::load(&config)
            .map_err(|e| (ExitCode::Config, e))
            .and_then(|cfg| {
                commands::cmd_evaluate(&cfg, seed, &out, jobs).map_err(|e| (classify(&e), e))
            }),
        Command::Task1 {
            config,
            seed,
            out,
            jobs,
        } => config::ExperimentConfig::load(&config)
            .map_err(|e| (ExitCode::Config, e))
            .and_then(|cfg| {
                commands::cmd_task1(&cfg, seed, &out, jobs).map_err(|e| (classify(&e), e))
            }),
        Command::Report { out } => {
            commands::cmd_report(&out).map_err(|e| (classify(&e), e))
        }
    };
    match result {
        Ok(()) => ExitCode::Success,
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            code
        }
    }
}
