//! Diversity-aware sampling and task-level kernel learning.
//!
//! Diversity of a sample set is the DPP-style quantity
//! `D(S) = log det(Xi_S / zeta^2 + I)` under a unit-variance squared
//! exponential kernel with per-dimension inverse length scales. Greedy
//! selection maximizes the marginal gain, which reduces to the GP posterior
//! variance `eta_S(theta)`; per-feature conditional variances attribute a
//! planner rejection to the feature that drove the selection, and that
//! feature's inverse length scale is shrunk.

use rand::Rng;

use crate::adaptive::{sample_buffer_from, BufferConfig, SampleStream, StreamStatus};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{CholeskyFactor, SymMatrix};
use crate::scalar::Scalar;
use crate::superlevel::SuperLevelSet;

/// Floor that keeps an inverse length scale from collapsing to zero.
const INVERSE_LENGTH_FLOOR: f64 = 1e-3;

/// Unit-variance squared exponential diversity kernel
/// `xi(theta, gamma) = exp(-sum_d (l_d (theta_d - gamma_d))^2)` with noise
/// `zeta` entering the Gram matrix as `zeta^2 I`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityKernel<S> {
    inverse_length_scales: Vec<S>,
    noise: S,
}

impl<S: Scalar> DiversityKernel<S> {
    pub fn new(inverse_length_scales: Vec<S>, noise: S) -> Result<Self> {
        if inverse_length_scales.iter().any(|l| !(*l >= S::zero())) {
            return Err(Error::InvalidArgument(
                "inverse length scales must be nonnegative".into(),
            ));
        }
        if !(noise > S::zero()) {
            return Err(Error::InvalidArgument(
                "diversity noise must be positive".into(),
            ));
        }
        Ok(DiversityKernel {
            inverse_length_scales,
            noise,
        })
    }

    /// The reference kernel: `l = [1, ..., 1]`, `zeta = 0.1`.
    pub fn reference(d: usize) -> Self {
        DiversityKernel {
            inverse_length_scales: vec![S::one(); d],
            noise: S::from_f64(0.1),
        }
    }

    pub fn inverse_length_scales(&self) -> &[S] {
        &self.inverse_length_scales
    }

    pub fn noise(&self) -> S {
        self.noise
    }

    pub fn dim(&self) -> usize {
        self.inverse_length_scales.len()
    }

    /// Kernel value; `xi(theta, theta) = 1` always.
    pub fn eval(&self, a: &[S], b: &[S]) -> S {
        let mut acc = S::zero();
        for (l, (&x, &y)) in self.inverse_length_scales.iter().zip(a.iter().zip(b)) {
            let r = *l * (x - y);
            acc += r * r;
        }
        (-acc).exp()
    }

    /// Kernel restricted to one feature: all other inverse length scales
    /// treated as zero.
    fn eval_feature(&self, d: usize, a: S, b: S) -> S {
        let r = self.inverse_length_scales[d] * (a - b);
        (-r * r).exp()
    }
}

/// Diversity of a sample set: `log det(Xi_S / zeta^2 + I)`; zero for the
/// empty set.
pub fn diversity<S: Scalar>(samples: &[Vec<S>], kernel: &DiversityKernel<S>) -> Result<S> {
    if samples.is_empty() {
        return Ok(S::zero());
    }
    let inv_noise_var = S::one() / (kernel.noise * kernel.noise);
    let gram = SymMatrix::from_fn(samples.len(), |i, j| {
        let v = kernel.eval(&samples[i], &samples[j]) * inv_noise_var;
        if i == j {
            v + S::one()
        } else {
            v
        }
    });
    Ok(CholeskyFactor::decompose(&gram)?.ln_det())
}

/// Ordered record of previously yielded samples with the cached factorization
/// of `(Xi_S + zeta^2 I)` under the current kernel.
#[derive(Debug, Clone)]
pub struct SelectionHistory<S> {
    chosen: Vec<Vec<S>>,
    gram_factor: Option<CholeskyFactor<S>>,
    factorizations: usize,
}

impl<S: Scalar> SelectionHistory<S> {
    pub fn new() -> Self {
        SelectionHistory {
            chosen: Vec::new(),
            gram_factor: None,
            factorizations: 0,
        }
    }

    pub fn chosen(&self) -> &[Vec<S>] {
        &self.chosen
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    /// How many Gram factorizations this history has performed.
    pub fn factorization_count(&self) -> usize {
        self.factorizations
    }

    pub fn push(&mut self, theta: Vec<S>, kernel: &DiversityKernel<S>) -> Result<()> {
        self.chosen.push(theta);
        self.refactor(kernel)
    }

    pub fn clear(&mut self) {
        self.chosen.clear();
        self.gram_factor = None;
    }

    /// Rebuild the cached factorization, e.g. after a kernel update.
    pub fn refactor(&mut self, kernel: &DiversityKernel<S>) -> Result<()> {
        if self.chosen.is_empty() {
            self.gram_factor = None;
            return Ok(());
        }
        let noise_var = kernel.noise * kernel.noise;
        let gram = SymMatrix::from_fn(self.chosen.len(), |i, j| {
            let v = kernel.eval(&self.chosen[i], &self.chosen[j]);
            if i == j {
                v + noise_var
            } else {
                v
            }
        });
        self.gram_factor = Some(CholeskyFactor::decompose(&gram)?);
        self.factorizations += 1;
        Ok(())
    }

    fn quad_form(&self, xi: &[S]) -> S {
        let factor = self.gram_factor.as_ref().expect("factor present");
        let v = factor.solve_lower(xi);
        crate::scalar::dot(&v, &v)
    }
}

impl<S: Scalar> Default for SelectionHistory<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Marginal diversity gain `eta_S(theta) = 1 - xi_S' (Xi_S + zeta^2 I)^-1
/// xi_S`; equals 1 for an empty history, stays in `(0, 1]`.
pub fn eta<S: Scalar>(
    history: &SelectionHistory<S>,
    theta: &[S],
    kernel: &DiversityKernel<S>,
) -> S {
    if history.is_empty() {
        return S::one();
    }
    let xi: Vec<S> = history
        .chosen
        .iter()
        .map(|s| kernel.eval(s, theta))
        .collect();
    (S::one() - history.quad_form(&xi)).max(S::zero())
}

/// Per-feature conditional variance `tau_S^theta(d)` for every feature of
/// one candidate, sharing a single Gram factorization across features.
pub fn feature_importance<S: Scalar>(
    history: &SelectionHistory<S>,
    theta: &[S],
    kernel: &DiversityKernel<S>,
) -> Vec<S> {
    let d_total = kernel.dim();
    if history.is_empty() {
        return vec![S::one(); d_total];
    }
    (0..d_total)
        .map(|d| {
            let xi_d: Vec<S> = history
                .chosen
                .iter()
                .map(|s| kernel.eval_feature(d, s[d], theta[d]))
                .collect();
            (S::one() - history.quad_form(&xi_d)).max(S::zero())
        })
        .collect()
}

/// Shrink the inverse length scale of the feature that contributed most to
/// the failed sample's perceived diversity: `l_d <- (1 - eps) l_d` for
/// `d = argmax tau`, floored at 1e-3. Ties break to the lowest index.
pub fn kernel_update<S: Scalar>(
    kernel: &DiversityKernel<S>,
    history: &SelectionHistory<S>,
    theta_failed: &[S],
    epsilon: S,
) -> Result<DiversityKernel<S>> {
    if history.is_empty() {
        return Err(Error::InvalidArgument(
            "kernel update needs a nonempty history".into(),
        ));
    }
    if !(epsilon >= S::zero() && epsilon < S::one()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    check_dim(kernel.dim(), theta_failed.len())?;
    let tau = feature_importance(history, theta_failed, kernel);
    let mut best = 0usize;
    for (d, &t) in tau.iter().enumerate() {
        if t > tau[best] {
            best = d;
        }
    }
    let mut ls = kernel.inverse_length_scales.clone();
    ls[best] = (ls[best] * (S::one() - epsilon)).max(S::from_f64(INVERSE_LENGTH_FLOOR));
    DiversityKernel::new(ls, kernel.noise)
}

/// One diverse yield: the chosen control and the samples yielded before it.
#[derive(Debug, Clone)]
pub struct DiverseYield<S> {
    pub theta: Vec<S>,
    pub history_before: Vec<Vec<S>>,
}

/// Greedy diversity-aware stream over a super-level set. Each yield takes
/// the buffer element maximizing `eta` under the running history, then
/// appends it to the history.
pub struct DiverseStream<S, R> {
    set: SuperLevelSet<S>,
    kernel: DiversityKernel<S>,
    cfg: BufferConfig,
    buffer: Vec<Vec<S>>,
    variance: Vec<S>,
    history: SelectionHistory<S>,
    rng: R,
    status: StreamStatus,
}

impl<S: Scalar, R: Rng> DiverseStream<S, R> {
    pub fn new(
        set: SuperLevelSet<S>,
        kernel: DiversityKernel<S>,
        cfg: BufferConfig,
        rng: R,
    ) -> Result<Self> {
        check_dim(set.d_theta(), kernel.dim())?;
        let variance = vec![S::one(); set.d_theta()];
        Ok(DiverseStream {
            set,
            kernel,
            cfg,
            buffer: Vec::new(),
            variance,
            history: SelectionHistory::new(),
            rng,
            status: StreamStatus::default(),
        })
    }

    pub fn set(&self) -> &SuperLevelSet<S> {
        &self.set
    }

    pub fn kernel(&self) -> &DiversityKernel<S> {
        &self.kernel
    }

    pub fn history(&self) -> &SelectionHistory<S> {
        &self.history
    }

    /// Swap in an updated kernel; the history Gram cache is rebuilt.
    pub fn set_kernel(&mut self, kernel: DiversityKernel<S>) -> Result<()> {
        check_dim(self.set.d_theta(), kernel.dim())?;
        self.kernel = kernel;
        self.history.refactor(&self.kernel)
    }

    /// Start a fresh selection history (new task instance).
    pub fn reset_history(&mut self) {
        self.history.clear();
    }

    fn refill(&mut self) -> Result<()> {
        let mut init: Vec<Vec<S>> = self.buffer.clone();
        init.push(self.set.theta_star().to_vec());
        let draw = sample_buffer_from(
            &self.set,
            &init,
            self.variance.clone(),
            &self.cfg,
            &mut self.rng,
        )?;
        self.status.membership_calls += draw.membership_calls;
        self.status.buffer_fills += 1;
        if draw.capped {
            self.status.cap_hits += 1;
        }
        self.variance = draw.variance;
        self.buffer = draw.samples;
        Ok(())
    }

    /// Yield the next sample together with the history snapshot taken
    /// before it.
    pub fn next_diverse(&mut self) -> Result<DiverseYield<S>> {
        if self.buffer.len() * 2 < self.cfg.buffer_target {
            self.refill()?;
        }
        // Greedy argmax of eta over the buffer; ties to the lowest index,
        // which is the highest-weight draw from the refill.
        let mut best = 0usize;
        let mut best_eta = S::neg_infinity();
        for (i, cand) in self.buffer.iter().enumerate() {
            let e = eta(&self.history, cand, &self.kernel);
            if e > best_eta {
                best_eta = e;
                best = i;
            }
        }
        let theta = self.buffer.remove(best);
        let history_before = self.history.chosen().to_vec();
        self.history.push(theta.clone(), &self.kernel)?;
        self.status.yields += 1;
        Ok(DiverseYield {
            theta,
            history_before,
        })
    }
}

impl<S: Scalar, R: Rng> SampleStream<S> for DiverseStream<S, R> {
    fn next_sample(&mut self) -> Result<Vec<S>> {
        Ok(self.next_diverse()?.theta)
    }

    fn status(&self) -> StreamStatus {
        self.status
    }
}

/// Audit record for one task of the kernel-learning protocol.
#[derive(Debug, Clone)]
pub struct EpisodeAudit {
    pub task_index: usize,
    pub attempts: usize,
    pub kernel_updates: usize,
    pub solved: bool,
}

/// Task-level kernel learning: per task, draw diverse samples until the
/// planner accepts one or the attempt cap is reached; every failure past
/// the first attributes blame via the feature importances and shrinks that
/// feature's inverse length scale by `(1 - epsilon)`. The selection history
/// resets per task; the kernel persists across tasks.
///
/// `new_stream` builds the sampler for one task under the current kernel;
/// `plan_found` is the planner's accept/reject verdict for one control.
pub fn task_kernel_learning<S, R, NS, PF>(
    kernel: DiversityKernel<S>,
    n_tasks: usize,
    epsilon: S,
    attempt_cap: usize,
    mut new_stream: NS,
    mut plan_found: PF,
) -> Result<(DiversityKernel<S>, Vec<EpisodeAudit>)>
where
    S: Scalar,
    R: Rng,
    NS: FnMut(usize, DiversityKernel<S>) -> Result<DiverseStream<S, R>>,
    PF: FnMut(usize, &[S]) -> bool,
{
    if attempt_cap == 0 {
        return Err(Error::InvalidArgument("attempt_cap must be positive".into()));
    }
    let mut kernel = kernel;
    let mut audit = Vec::with_capacity(n_tasks);
    for task_index in 0..n_tasks {
        let mut stream = new_stream(task_index, kernel.clone())?;
        let mut attempts = 0usize;
        let mut updates = 0usize;
        let mut solved = false;
        while attempts < attempt_cap {
            let item = stream.next_diverse()?;
            attempts += 1;
            if plan_found(task_index, &item.theta) {
                solved = true;
                break;
            }
            if !item.history_before.is_empty() && epsilon > S::zero() {
                let mut hist = SelectionHistory::new();
                for h in &item.history_before {
                    hist.push(h.clone(), &kernel)?;
                }
                kernel = kernel_update(&kernel, &hist, &item.theta, epsilon)?;
                stream.set_kernel(kernel.clone())?;
                updates += 1;
            }
        }
        audit.push(EpisodeAudit {
            task_index,
            attempts,
            kernel_updates: updates,
            solved,
        });
    }
    Ok((kernel, audit))
}
