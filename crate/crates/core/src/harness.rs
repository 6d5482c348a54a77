//! Mock plan-skeleton harness and sampler evaluation metrics.
//!
//! The mock planner wraps a two-box pushing task with a hidden downstream
//! constraint: one of the feasible boxes is blocked per task instance, the
//! sampler cannot see which, and samples landing there are rejected. This
//! reproduces the structure used to study task-level kernel learning.

use std::time::Instant;

use rand::Rng;

use crate::scalar::Scalar;

use crate::active::{
    active_learn, ActiveConfig, ContextSource,
};
use crate::adaptive::{AdaptiveStream, BufferConfig, SampleStream};
use crate::bench::{FeasibleRegion, SyntheticTask};
use crate::diverse::{diversity, task_kernel_learning, DiverseStream, DiversityKernel};
use crate::error::{Error, Result};
use crate::gp::posterior_with_mean;
use crate::kernel::KernelKind;
use crate::seed::derive_rng;
use crate::superlevel::SuperLevelSet;

/// Discounted planner reward `J = sum_n flag_n gamma^n`, n starting at 1.
pub fn discounted_reward(trace: &[bool], gamma: f64) -> f64 {
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must be in (0,1)");
    let mut j = 0.0;
    let mut g = 1.0;
    for &flag in trace {
        g *= gamma;
        if flag {
            j += g;
        }
    }
    j
}

/// Outcome of asking the mock planner to use a control value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanCheck {
    Accepted,
    /// Feasible for the skill but rejected by the hidden downstream
    /// constraint (the blocked side).
    RejectedDownstream,
    /// Not in the true super-level set at all.
    InfeasibleConstraint,
}

/// One task instance: the synthetic two-box task plus which box the hidden
/// obstacle blocks this time.
#[derive(Debug, Clone)]
pub struct MockTask {
    pub synthetic: SyntheticTask<f64>,
    pub blocked_box: usize,
    /// Score assigned to rejected-but-attempted samples in audit logs.
    pub invalid_penalty: f64,
}

impl MockTask {
    /// Draw an instance: the blocked box is uniform over the boxes, and the
    /// instance is redrawn until some feasible unblocked control exists.
    pub fn sample_instance<R: Rng + ?Sized>(
        synthetic: &SyntheticTask<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        let FeasibleRegion::BoxUnion { boxes, .. } = &synthetic.region else {
            return Err(Error::InvalidArgument(
                "mock tasks need a box-union region".into(),
            ));
        };
        if boxes.len() < 2 {
            return Err(Error::InvalidArgument(
                "mock tasks need at least two boxes so one can be blocked".into(),
            ));
        }
        for _ in 0..100 {
            let blocked_box = (f64::sample_unit(rng) * boxes.len() as f64) as usize % boxes.len();
            let task = MockTask {
                synthetic: synthetic.clone(),
                blocked_box,
                invalid_penalty: -0.1,
            };
            // Satisfiable iff some unblocked box center is feasible.
            let ok = boxes.iter().enumerate().any(|(i, (lo, hi))| {
                if i == blocked_box {
                    return false;
                }
                let center: Vec<f64> =
                    lo.iter().zip(hi).map(|(&a, &b)| 0.5 * (a + b)).collect();
                task.synthetic.true_member(&center, &[])
            });
            if ok {
                return Ok(task);
            }
        }
        Err(Error::InvalidArgument(
            "could not draw a satisfiable task instance".into(),
        ))
    }

    fn boxes(&self) -> &[(Vec<f64>, Vec<f64>)] {
        match &self.synthetic.region {
            FeasibleRegion::BoxUnion { boxes, .. } => boxes,
            _ => unreachable!("constructor enforces a box union"),
        }
    }

    /// Which box a control belongs to: the one whose falloff dominates.
    fn dominant_box(&self, theta: &[f64]) -> usize {
        let boxes = self.boxes();
        let mut best = 0usize;
        let mut best_frac = f64::NEG_INFINITY;
        for (i, (lo, hi)) in boxes.iter().enumerate() {
            let frac = theta
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&x, (&a, &b))| {
                    let out = if x < a {
                        a - x
                    } else if x > b {
                        x - b
                    } else {
                        0.0
                    };
                    -out
                })
                .fold(f64::INFINITY, f64::min);
            if frac > best_frac {
                best_frac = frac;
                best = i;
            }
        }
        best
    }

    /// The planner's verdict on one proposed control.
    pub fn plan_check(&self, theta: &[f64]) -> PlanCheck {
        if !self.synthetic.true_member(theta, &[]) {
            PlanCheck::InfeasibleConstraint
        } else if self.dominant_box(theta) == self.blocked_box {
            PlanCheck::RejectedDownstream
        } else {
            PlanCheck::Accepted
        }
    }
}

/// Per-run sampler metrics in the style of the sampling-effectiveness
/// tables: false-positive rate over 50 yields, cost of those 50 yields in
/// wall time and membership calls, samples needed for 5 true positives
/// (capped at 100), diversity of those positives under the reference
/// kernel, and the discounted reward of the membership trace.
#[derive(Debug, Clone)]
pub struct SamplerMetrics {
    pub fp_rate: f64,
    pub t50_seconds: f64,
    pub t50_calls: usize,
    pub n5: usize,
    pub n5_capped: bool,
    pub diversity5: Option<f64>,
    pub reward: f64,
}

pub const N5_CAP: usize = 100;

/// Evaluate one stream against ground truth for one seed.
pub fn run_sampler_once(
    stream: &mut dyn SampleStream<f64>,
    task: &SyntheticTask<f64>,
    context: &[f64],
    gamma: f64,
) -> Result<SamplerMetrics> {
    let started = Instant::now();
    let mut yields: Vec<Vec<f64>> = Vec::with_capacity(N5_CAP);
    for _ in 0..50 {
        yields.push(stream.next_sample()?);
    }
    let t50_seconds = started.elapsed().as_secs_f64();
    let t50_calls = stream.status().membership_calls;

    let mut flags: Vec<bool> = yields
        .iter()
        .map(|t| task.true_member(t, context))
        .collect();
    let fp_rate = flags.iter().filter(|&&f| !f).count() as f64 / 50.0;
    let reward = discounted_reward(&flags, gamma);

    // Keep sampling (up to 100 total) until 5 positives.
    while flags.iter().filter(|&&f| f).count() < 5 && yields.len() < N5_CAP {
        let t = stream.next_sample()?;
        flags.push(task.true_member(&t, context));
        yields.push(t);
    }
    let positives: Vec<usize> = flags
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect();
    let (n5, n5_capped) = if positives.len() >= 5 {
        (positives[4] + 1, false)
    } else {
        (N5_CAP, true)
    };
    let diversity5 = if n5_capped {
        None
    } else {
        let five: Vec<Vec<f64>> = positives[..5].iter().map(|&i| yields[i].clone()).collect();
        Some(diversity(&five, &DiversityKernel::reference(task.d_theta))?)
    };
    Ok(SamplerMetrics {
        fp_rate,
        t50_seconds,
        t50_calls,
        n5,
        n5_capped,
        diversity5,
        reward,
    })
}

/// Mean and standard deviation of each metric across seeds.
#[derive(Debug, Clone, Default)]
pub struct MetricsAggregate {
    pub runs: usize,
    pub failed_runs: usize,
    pub capped_runs: usize,
    pub fp_rate: (f64, f64),
    pub t50_seconds: (f64, f64),
    pub t50_calls: (f64, f64),
    pub n5: (f64, f64),
    /// Aggregated over uncapped runs only.
    pub diversity5: (f64, f64),
    pub reward: (f64, f64),
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run a stream factory across seeds and aggregate. A stream error marks
/// that run failed (matching how the paper footnotes failed runs) without
/// aborting the evaluation.
pub fn evaluate_sampler<F>(
    mut factory: F,
    task: &SyntheticTask<f64>,
    context: &[f64],
    seeds: &[u64],
    gamma: f64,
) -> (Vec<Option<SamplerMetrics>>, MetricsAggregate)
where
    F: FnMut(u64) -> Box<dyn SampleStream<f64>>,
{
    let per_seed: Vec<Option<SamplerMetrics>> = seeds
        .iter()
        .map(|&s| {
            let mut stream = factory(s);
            run_sampler_once(stream.as_mut(), task, context, gamma).ok()
        })
        .collect();
    let agg = aggregate_metrics(&per_seed);
    (per_seed, agg)
}

/// Aggregate per-run metrics into means and standard deviations.
pub fn aggregate_metrics(per_seed: &[Option<SamplerMetrics>]) -> MetricsAggregate {
    let ok: Vec<&SamplerMetrics> = per_seed.iter().flatten().collect();
    MetricsAggregate {
        runs: per_seed.len(),
        failed_runs: per_seed.iter().filter(|m| m.is_none()).count(),
        capped_runs: ok.iter().filter(|m| m.n5_capped).count(),
        fp_rate: mean_sd(&ok.iter().map(|m| m.fp_rate).collect::<Vec<_>>()),
        t50_seconds: mean_sd(&ok.iter().map(|m| m.t50_seconds).collect::<Vec<_>>()),
        t50_calls: mean_sd(&ok.iter().map(|m| m.t50_calls as f64).collect::<Vec<_>>()),
        n5: mean_sd(&ok.iter().map(|m| m.n5 as f64).collect::<Vec<_>>()),
        diversity5: mean_sd(
            &ok.iter()
                .filter_map(|m| m.diversity5)
                .collect::<Vec<_>>(),
        ),
        reward: mean_sd(&ok.iter().map(|m| m.reward).collect::<Vec<_>>()),
    }
}

/// Sampling strategies compared in the kernel-learning experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMethod {
    Adaptive,
    DiverseFixed,
    DiverseLearned,
}

impl SamplerMethod {
    pub fn name(self) -> &'static str {
        match self {
            SamplerMethod::Adaptive => "adaptive",
            SamplerMethod::DiverseFixed => "diverse-fixed",
            SamplerMethod::DiverseLearned => "diverse-learned",
        }
    }
}

/// Configuration of the two-box kernel-learning experiment.
#[derive(Debug, Clone)]
pub struct Task1Config {
    pub training_tasks: usize,
    pub test_tasks: usize,
    pub epsilon: f64,
    pub gamma: f64,
    /// Sampler yields allowed per task instance.
    pub attempt_cap: usize,
    /// Evaluate the learning curve every this many training tasks.
    pub eval_every: usize,
    pub seeds: Vec<u64>,
    pub buffer: BufferConfig,
    pub quantile: f64,
    /// Active-learning budget for the shared score model.
    pub train_budget: usize,
    pub kernel_kind: KernelKind,
    pub noise_std: f64,
}

impl Default for Task1Config {
    fn default() -> Self {
        Task1Config {
            training_tasks: 50,
            test_tasks: 100,
            epsilon: 0.3,
            gamma: 0.6,
            attempt_cap: 10,
            eval_every: 10,
            seeds: (0..10).collect(),
            buffer: BufferConfig {
                proposals_per_round: 100,
                buffer_target: 40,
                round_cap: 1000,
            },
            quantile: 0.99,
            train_budget: 120,
            kernel_kind: KernelKind::SquaredExponential,
            noise_std: 0.02,
        }
    }
}

/// One learning-curve row: per seed, method, and evaluation point.
#[derive(Debug, Clone)]
pub struct Task1Row {
    pub seed: u64,
    pub method: SamplerMethod,
    pub tasks_trained: usize,
    pub mean_reward: f64,
    pub mean_samples_to_success: f64,
    pub success_rate: f64,
    /// Inverse length scales in effect (learned kernel only; reference
    /// values otherwise).
    pub kernel_snapshot: Vec<f64>,
}

/// Per-training-task audit record.
#[derive(Debug, Clone)]
pub struct Task1Audit {
    pub seed: u64,
    pub task_index: usize,
    pub attempts: usize,
    pub kernel_updates: usize,
    pub solved: bool,
}

#[derive(Debug, Clone)]
pub struct Task1Outcome {
    pub rows: Vec<Task1Row>,
    pub audit: Vec<Task1Audit>,
    /// Learned inverse length scales at the end of each seed's training.
    pub final_kernels: Vec<(u64, Vec<f64>)>,
}

impl Task1Outcome {
    /// Combine per-seed outcomes (order-preserving).
    pub fn merge(mut outcomes: Vec<Task1Outcome>) -> Task1Outcome {
        let mut all = Task1Outcome {
            rows: Vec::new(),
            audit: Vec::new(),
            final_kernels: Vec::new(),
        };
        for o in outcomes.drain(..) {
            all.rows.extend(o.rows);
            all.audit.extend(o.audit);
            all.final_kernels.extend(o.final_kernels);
        }
        all
    }
}

/// Closed-form reward ceiling for the two-box task: an ideal sampler places
/// its first try in one box and switches after a rejection, so
/// `J = (gamma + gamma^2) / 2` in expectation over the hidden block.
pub fn task1_optimal_reward(gamma: f64) -> f64 {
    0.5 * (gamma + gamma * gamma)
}

/// The two unequal feasible boxes used by the experiment. The obstacle side
/// is dimension 0; dimension 1 does not discriminate. The left box is tall
/// and much larger, so under the uninformed kernel the most diverse
/// follow-up to a failure inside it is usually still inside it (far in the
/// non-discriminative dimension); shrinking that dimension's weight is what
/// makes the sampler switch sides.
pub fn task1_boxes() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (vec![0.25, 0.05], vec![0.35, 0.95]), // larger box, left
        (vec![0.55, 0.35], vec![0.65, 0.65]), // smaller box, right
    ]
}

fn attempt_episode(
    stream: &mut dyn SampleStream<f64>,
    task: &MockTask,
    cap: usize,
) -> Result<(Option<usize>, Vec<bool>)> {
    let mut flags = Vec::with_capacity(cap);
    for attempt in 1..=cap {
        let theta = stream.next_sample()?;
        let check = task.plan_check(&theta);
        flags.push(check == PlanCheck::Accepted);
        if check == PlanCheck::Accepted {
            return Ok((Some(attempt), flags));
        }
    }
    Ok((None, flags))
}

/// Run the kernel-learning experiment: per seed, train the learned kernel
/// on a stream of task instances and periodically evaluate all three
/// methods on a shared held-out test set.
pub fn run_task1_experiment(cfg: &Task1Config, root_seed: u64) -> Result<Task1Outcome> {
    let outcomes = cfg
        .seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| run_task1_seed(cfg, root_seed, i, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Task1Outcome::merge(outcomes))
}

/// One seed's worth of the experiment; independent units so callers may run
/// seeds in parallel and still get the serial results.
pub fn run_task1_seed(
    cfg: &Task1Config,
    root_seed: u64,
    seed_idx: usize,
    seed: u64,
) -> Result<Task1Outcome> {
    let synthetic = SyntheticTask::two_box_push(task1_boxes(), 0, cfg.noise_std, root_seed)?;
    let d_theta = synthetic.d_theta;

    let mut rows = Vec::new();
    let mut audit = Vec::new();
    let mut final_kernels = Vec::new();

    {
        let unit = (seed_idx as u64) << 32;
        // Shared score model for this seed.
        let mut train_cfg =
            ActiveConfig::new(cfg.kernel_kind, d_theta, cfg.noise_std.max(1e-3));
        train_cfg.refit_every = 10;
        train_cfg.fit.restarts = 1;
        train_cfg.fit.max_iters = 60;
        // The push score stretches the latent noise by its slope, so let
        // the evidence pick the observation noise instead of trusting the
        // configured latent level.
        train_cfg.fit.fit_noise = true;
        let mut rng = derive_rng(root_seed, unit);
        let run = active_learn(
            |t: &[f64], a: &[f64]| synthetic.score(t, a).map_err(|e| e.to_string()),
            &ContextSource::UniformIid { dim: 0 },
            cfg.train_budget,
            &train_cfg,
            None,
            &mut rng,
        )
        .map_err(|e| Error::InvalidArgument(format!("task1 training failed: {e}")))?;
        let model = posterior_with_mean(&run.dataset, &run.fitted.spec, run.prior_mean)?;
        let set = SuperLevelSet::build(
            model,
            vec![],
            cfg.quantile,
            &crate::active::SearchConfig::default(),
            &mut derive_rng(root_seed, unit | 1),
        )?;

        // Held-out test instances, fixed for the whole curve.
        let mut test_rng = derive_rng(root_seed, unit | 2);
        let test_instances: Vec<MockTask> = (0..cfg.test_tasks)
            .map(|_| MockTask::sample_instance(&synthetic, &mut test_rng))
            .collect::<Result<_>>()?;

        let mut learned = DiversityKernel::reference(d_theta);

        let evaluate = |tasks_trained: usize,
                            learned: &DiversityKernel<f64>,
                            rows: &mut Vec<Task1Row>|
         -> Result<()> {
            for method in [
                SamplerMethod::Adaptive,
                SamplerMethod::DiverseFixed,
                SamplerMethod::DiverseLearned,
            ] {
                let mut rewards = Vec::with_capacity(test_instances.len());
                let mut samples_to_success = Vec::with_capacity(test_instances.len());
                let mut solved = 0usize;
                for (i, inst) in test_instances.iter().enumerate() {
                    // Method-independent stream seeds: with epsilon = 0 the
                    // learned and fixed curves coincide exactly.
                    let tag = unit | 3 | ((tasks_trained as u64) << 40) | ((i as u64) << 8);
                    let stream_rng = derive_rng(root_seed, tag);
                    let (success_at, flags) = match method {
                        SamplerMethod::Adaptive => {
                            let mut s =
                                AdaptiveStream::new(set.clone(), cfg.buffer, stream_rng);
                            attempt_episode(&mut s, inst, cfg.attempt_cap)?
                        }
                        SamplerMethod::DiverseFixed => {
                            let mut s = DiverseStream::new(
                                set.clone(),
                                DiversityKernel::reference(d_theta),
                                cfg.buffer,
                                stream_rng,
                            )?;
                            attempt_episode(&mut s, inst, cfg.attempt_cap)?
                        }
                        SamplerMethod::DiverseLearned => {
                            let mut s = DiverseStream::new(
                                set.clone(),
                                learned.clone(),
                                cfg.buffer,
                                stream_rng,
                            )?;
                            attempt_episode(&mut s, inst, cfg.attempt_cap)?
                        }
                    };
                    rewards.push(discounted_reward(&flags, cfg.gamma));
                    samples_to_success
                        .push(success_at.unwrap_or(cfg.attempt_cap) as f64);
                    if success_at.is_some() {
                        solved += 1;
                    }
                }
                rows.push(Task1Row {
                    seed,
                    method,
                    tasks_trained,
                    mean_reward: mean_sd(&rewards).0,
                    mean_samples_to_success: mean_sd(&samples_to_success).0,
                    success_rate: solved as f64 / test_instances.len() as f64,
                    kernel_snapshot: match method {
                        SamplerMethod::DiverseLearned => {
                            learned.inverse_length_scales().to_vec()
                        }
                        _ => DiversityKernel::<f64>::reference(d_theta)
                            .inverse_length_scales()
                            .to_vec(),
                    },
                });
            }
            Ok(())
        };

        evaluate(0, &learned, &mut rows)?;

        // Pre-draw the training instances, then run the kernel-learning
        // protocol in blocks so the curve can be evaluated between them.
        let mut train_rng = derive_rng(root_seed, unit | 4);
        let instances: Vec<MockTask> = (0..cfg.training_tasks)
            .map(|_| MockTask::sample_instance(&synthetic, &mut train_rng))
            .collect::<Result<_>>()?;
        let mut done = 0usize;
        while done < cfg.training_tasks {
            let block = cfg.eval_every.max(1).min(cfg.training_tasks - done);
            let block_start = done;
            let (updated, block_audit) = task_kernel_learning(
                learned,
                block,
                cfg.epsilon,
                cfg.attempt_cap,
                |i, kernel| {
                    let task_index = (block_start + i + 1) as u64;
                    DiverseStream::new(
                        set.clone(),
                        kernel,
                        cfg.buffer,
                        derive_rng(root_seed, unit | 5 | (task_index << 8)),
                    )
                },
                |i, theta| {
                    instances[block_start + i].plan_check(theta) == PlanCheck::Accepted
                },
            )?;
            learned = updated;
            for a in block_audit {
                audit.push(Task1Audit {
                    seed,
                    task_index: block_start + a.task_index + 1,
                    attempts: a.attempts,
                    kernel_updates: a.kernel_updates,
                    solved: a.solved,
                });
            }
            done += block;
            evaluate(done, &learned, &mut rows)?;
        }
        final_kernels.push((seed, learned.inverse_length_scales().to_vec()));
    }

    Ok(Task1Outcome {
        rows,
        audit,
        final_kernels,
    })
}
