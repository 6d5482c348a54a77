//! Straddle-based active level-set learning.
//!
//! The acquisition rule prefers points near the zero boundary of the score
//! or with large posterior uncertainty; maximizing it over the control box
//! drives each query of the scoring oracle.

use rand::Rng;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::gp::{fit_hyperparameters, posterior_with_mean, FitConfig, FitResult, GpModel};
use crate::kernel::{KernelKind, KernelSpec};
use crate::scalar::Scalar;
use crate::space::ParameterSpace;

/// Straddle acquisition: `-|mean| + 1.96 std`. Negative values mean the
/// point has under a 5 percent chance of sitting on the boundary side of
/// interest.
pub fn straddle<S: Scalar>(mean: S, std: S) -> S {
    debug_assert!(std >= S::zero());
    -mean.abs() + S::from_f64(1.96) * std
}

/// Where and how hard to look when maximizing an acquisition over the box.
/// Shared by the straddle step and the most-confident-point search.
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Uniform candidates scored per maximization.
    pub candidates: usize,
    /// Best candidates kept for local refinement.
    pub refine_top: usize,
    /// Random-perturbation hill-climb steps per kept candidate.
    pub refine_steps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            candidates: 1000,
            refine_top: 5,
            refine_steps: 20,
        }
    }
}

/// Maximize `f` over the unit box by candidate scoring plus local
/// refinement. Ties break to the earliest candidate, so the result is
/// deterministic for a fixed RNG stream.
pub fn maximize_over_box<S: Scalar, R: Rng + ?Sized>(
    dim: usize,
    f: impl Fn(&[S]) -> S,
    cfg: &SearchConfig,
    rng: &mut R,
) -> (Vec<S>, S) {
    assert!(cfg.candidates >= 1, "need at least one candidate");
    let mut scored: Vec<(Vec<S>, S)> = (0..cfg.candidates)
        .map(|_| {
            let theta = ParameterSpace::sample_unit(dim, rng);
            let v = f(&theta);
            (theta, v)
        })
        .collect();

    // Indices of the refine_top best, stable under ties.
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[b].1
            .partial_cmp(&scored[a].1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(cfg.refine_top.max(1));

    for &idx in &order {
        let mut cur = scored[idx].0.clone();
        let mut cur_v = scored[idx].1;
        let mut step = S::from_f64(0.1);
        let decay = S::from_f64(0.85);
        for _ in 0..cfg.refine_steps {
            let cand: Vec<S> = cur
                .iter()
                .map(|&x| {
                    let x = x + step * S::sample_std_normal(rng);
                    x.max(S::zero()).min(S::one())
                })
                .collect();
            let v = f(&cand);
            if v > cur_v {
                cur = cand;
                cur_v = v;
            }
            step *= decay;
        }
        scored[idx] = (cur, cur_v);
    }

    let best = order
        .iter()
        .copied()
        .max_by(|&a, &b| {
            scored[a].1
                .partial_cmp(&scored[b].1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.cmp(&a))
        })
        .unwrap();
    scored.swap_remove(best)
}

/// One acquisition request: the fixed context, the (normalized) control box,
/// and how many uniform candidates to score.
#[derive(Debug, Clone)]
pub struct AcquisitionQuery<S> {
    pub context: Vec<S>,
    pub control_box: ParameterSpace<S>,
    pub candidate_count: usize,
}

impl<S: Scalar> AcquisitionQuery<S> {
    pub fn new(context: Vec<S>, d_theta: usize, candidate_count: usize) -> Result<Self> {
        if candidate_count == 0 {
            return Err(Error::InvalidArgument(
                "candidate_count must be at least 1".into(),
            ));
        }
        Ok(AcquisitionQuery {
            context,
            control_box: ParameterSpace::unit(d_theta),
            candidate_count,
        })
    }

    pub fn d_theta(&self) -> usize {
        self.control_box.dim()
    }
}

pub(crate) fn joint<S: Scalar>(theta: &[S], alpha: &[S]) -> Vec<S> {
    let mut x = Vec::with_capacity(theta.len() + alpha.len());
    x.extend_from_slice(theta);
    x.extend_from_slice(alpha);
    x
}

/// Pick the control with maximal straddle value for the query's context.
pub fn select_next<S: Scalar, R: Rng + ?Sized>(
    model: &GpModel<S>,
    query: &AcquisitionQuery<S>,
    search: &SearchConfig,
    rng: &mut R,
) -> Result<Vec<S>> {
    check_dim(model.input_dim(), query.d_theta() + query.context.len())?;
    let search = SearchConfig {
        candidates: query.candidate_count,
        ..*search
    };
    let (theta, _) = maximize_over_box(
        query.d_theta(),
        |theta| {
            let (m, v) = model.predict_unchecked(&joint(theta, &query.context));
            straddle(m, v.sqrt())
        },
        &search,
        rng,
    );
    Ok(theta)
}

/// How contexts are scheduled during training.
#[derive(Debug, Clone)]
pub enum ContextSource<S> {
    /// Cycle through a fixed list.
    RoundRobin(Vec<Vec<S>>),
    /// Independent uniform draws from the normalized context cube.
    UniformIid { dim: usize },
}

impl<S: Scalar> ContextSource<S> {
    pub fn dim(&self) -> usize {
        match self {
            ContextSource::RoundRobin(list) => list.first().map_or(0, Vec::len),
            ContextSource::UniformIid { dim } => *dim,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, step: usize, rng: &mut R) -> Vec<S> {
        match self {
            ContextSource::RoundRobin(list) => list[step % list.len()].clone(),
            ContextSource::UniformIid { dim } => ParameterSpace::sample_unit(*dim, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStrategy {
    Straddle,
    UniformRandom,
}

/// Configuration for the full training loop.
#[derive(Debug, Clone)]
pub struct ActiveConfig<S> {
    pub kernel_kind: KernelKind,
    pub d_theta: usize,
    /// Observation noise assumed by the GP.
    pub noise_std: S,
    /// Uniform seed evaluations when no initial dataset is given.
    pub n_seed: usize,
    /// Refit hyperparameters every k-th evaluation (1 = every step).
    pub refit_every: usize,
    pub fit: FitConfig<S>,
    pub search: SearchConfig,
    pub strategy: SelectionStrategy,
    /// Model the targets around their running mean instead of zero. Raw
    /// scores can sit far from zero over most of the box; without this the
    /// posterior reverts to zero in unexplored space and the acquisition
    /// chases crossings that are not there.
    pub center_targets: bool,
}

impl<S: Scalar> ActiveConfig<S> {
    pub fn new(kernel_kind: KernelKind, d_theta: usize, noise_std: S) -> Self {
        ActiveConfig {
            kernel_kind,
            d_theta,
            noise_std,
            n_seed: 5,
            refit_every: 1,
            fit: FitConfig::default(),
            search: SearchConfig::default(),
            strategy: SelectionStrategy::Straddle,
            center_targets: true,
        }
    }
}

/// Per-evaluation record for training logs.
#[derive(Debug, Clone)]
pub struct StepRecord<S> {
    pub theta: Vec<S>,
    pub alpha: Vec<S>,
    pub y: S,
    /// Straddle value of the selected point; absent for seed rows and random
    /// selections.
    pub acquisition: Option<S>,
    /// Log marginal likelihood when this step refit the hyperparameters.
    pub refit_lml: Option<S>,
}

/// Outcome of a training run: the data, the per-step trace, the last
/// fitted kernel, and the constant prior mean the learner settled on.
#[derive(Debug, Clone)]
pub struct TrainRun<S> {
    pub dataset: Dataset<S>,
    pub steps: Vec<StepRecord<S>>,
    pub fitted: FitResult<S>,
    pub prior_mean: S,
}

/// Errors from the training loop. An oracle failure carries the data
/// gathered so far.
#[derive(Debug, Error)]
pub enum ActiveError<S: Scalar> {
    #[error("oracle failed at evaluation {step}: {message}")]
    Oracle {
        step: usize,
        message: String,
        partial: Dataset<S>,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

fn call_oracle<S: Scalar>(
    oracle: &mut impl FnMut(&[S], &[S]) -> std::result::Result<S, String>,
    theta: &[S],
    alpha: &[S],
    step: usize,
    data: &Dataset<S>,
) -> std::result::Result<S, ActiveError<S>> {
    let fail = |message: String| ActiveError::Oracle {
        step,
        message,
        partial: data.clone(),
    };
    let y = oracle(theta, alpha).map_err(&fail)?;
    if !y.is_finite() {
        return Err(fail(format!("non-finite score {y}")));
    }
    Ok(y)
}

/// Run the active level-set training loop for `budget` evaluations.
///
/// Starts from `init` when given, otherwise from `cfg.n_seed` uniform
/// evaluations. The returned dataset has exactly `budget` rows more than the
/// seed data, and the whole trajectory is reproducible from the RNG.
pub fn active_learn<S: Scalar, R: Rng + ?Sized>(
    mut oracle: impl FnMut(&[S], &[S]) -> std::result::Result<S, String>,
    contexts: &ContextSource<S>,
    budget: usize,
    cfg: &ActiveConfig<S>,
    init: Option<Dataset<S>>,
    rng: &mut R,
) -> std::result::Result<TrainRun<S>, ActiveError<S>> {
    let d_alpha = contexts.dim();
    let mut steps = Vec::new();
    let mut data = match init {
        Some(d) => {
            if let Some(dim) = d.input_dim() {
                check_dim(cfg.d_theta + d_alpha, dim).map_err(ActiveError::Core)?;
            }
            d
        }
        None => {
            let mut d = Dataset::empty(cfg.noise_std);
            for t in 0..cfg.n_seed {
                let alpha = contexts.draw(t, rng);
                let theta: Vec<S> = ParameterSpace::sample_unit(cfg.d_theta, rng);
                let y = call_oracle(&mut oracle, &theta, &alpha, t, &d)?;
                d.push(joint(&theta, &alpha), y).map_err(ActiveError::Core)?;
                steps.push(StepRecord {
                    theta,
                    alpha,
                    y,
                    acquisition: None,
                    refit_lml: None,
                });
            }
            d
        }
    };

    let mut spec = KernelSpec::isotropic(cfg.kernel_kind, cfg.d_theta + d_alpha, S::from_f64(0.5));
    let mut fitted = FitResult {
        spec: spec.clone(),
        noise_std: data.noise_std(),
        log_marginal: S::nan(),
    };
    let offset = |d: &Dataset<S>| {
        if cfg.center_targets {
            d.values_mean()
        } else {
            S::zero()
        }
    };

    for t in 0..budget {
        let mut refit_lml = None;
        if t % cfg.refit_every.max(1) == 0 && data.len() >= 2 {
            let fit_data = data.with_shifted_values(-offset(&data));
            fitted = fit_hyperparameters(&fit_data, cfg.kernel_kind, &cfg.fit, rng)
                .map_err(ActiveError::Core)?;
            spec = fitted.spec.clone();
            if cfg.fit.fit_noise {
                data.set_noise_std(fitted.noise_std);
            }
            refit_lml = Some(fitted.log_marginal);
        }
        let alpha = contexts.draw(steps.len(), rng);
        let (theta, acquisition) = match cfg.strategy {
            SelectionStrategy::Straddle => {
                let model = posterior_with_mean(&data, &spec, offset(&data))
                    .map_err(ActiveError::Core)?;
                let query =
                    AcquisitionQuery::new(alpha.clone(), cfg.d_theta, cfg.search.candidates)
                        .map_err(ActiveError::Core)?;
                let theta = select_next(&model, &query, &cfg.search, rng)
                    .map_err(ActiveError::Core)?;
                let (m, v) = model.predict_unchecked(&joint(&theta, &alpha));
                let psi = straddle(m, v.sqrt());
                (theta, Some(psi))
            }
            SelectionStrategy::UniformRandom => {
                (ParameterSpace::sample_unit(cfg.d_theta, rng), None)
            }
        };
        let y = call_oracle(&mut oracle, &theta, &alpha, steps.len(), &data)?;
        data.push(joint(&theta, &alpha), y).map_err(ActiveError::Core)?;
        steps.push(StepRecord {
            theta,
            alpha,
            y,
            acquisition,
            refit_lml,
        });
    }

    if fitted.log_marginal.is_nan() && data.len() >= 2 {
        let fit_data = data.with_shifted_values(-offset(&data));
        fitted = fit_hyperparameters(&fit_data, cfg.kernel_kind, &cfg.fit, rng)
            .map_err(ActiveError::Core)?;
    }
    Ok(TrainRun {
        prior_mean: offset(&data),
        dataset: data,
        steps,
        fitted,
    })
}

/// Result of pool-based selection: the selected data in acquisition order
/// plus the original pool indices.
#[derive(Debug, Clone)]
pub struct PoolRun<S> {
    pub dataset: Dataset<S>,
    pub order: Vec<usize>,
}

/// Discrete active learning over a pre-labeled pool: repeatedly extract the
/// pool element with maximal straddle value, without replacement.
pub fn active_learn_pool<S: Scalar, R: Rng + ?Sized>(
    pool: &Dataset<S>,
    budget: usize,
    cfg: &ActiveConfig<S>,
    rng: &mut R,
) -> Result<PoolRun<S>> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("pool must be nonempty".into()));
    }
    if budget > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} exceeds pool size {}",
            pool.len()
        )));
    }
    let mut remaining: Vec<usize> = (0..pool.len()).collect();
    let mut selected = Dataset::empty(pool.noise_std());
    let mut order = Vec::with_capacity(budget);
    let mut spec =
        KernelSpec::isotropic(cfg.kernel_kind, pool.input_dim().unwrap(), S::from_f64(0.5));

    for t in 0..budget {
        if remaining.is_empty() {
            return Err(Error::PoolExhausted { selected: t });
        }
        let offset = if cfg.center_targets {
            selected.values_mean()
        } else {
            S::zero()
        };
        if t % cfg.refit_every.max(1) == 0 && selected.len() >= 2 {
            let fit_data = selected.with_shifted_values(-offset);
            spec = fit_hyperparameters(&fit_data, cfg.kernel_kind, &cfg.fit, rng)?.spec;
        }
        let model = posterior_with_mean(&selected, &spec, offset)?;
        let mut best = 0usize;
        let mut best_psi = S::neg_infinity();
        for (slot, &idx) in remaining.iter().enumerate() {
            let (m, v) = model.predict_unchecked(&pool.points()[idx]);
            let psi = straddle(m, v.sqrt());
            if psi > best_psi {
                best_psi = psi;
                best = slot;
            }
        }
        let idx = remaining.remove(best);
        selected.push(pool.points()[idx].clone(), pool.values()[idx])?;
        order.push(idx);
    }
    Ok(PoolRun {
        dataset: selected,
        order,
    })
}
