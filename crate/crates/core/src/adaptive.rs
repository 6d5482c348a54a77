//! Streaming samplers over a learned super-level set.
//!
//! `RejectionStream` is the baseline: uniform proposals filtered by
//! membership. `AdaptiveStream` keeps a buffer filled by a truncated
//! Gaussian mixture centered on known-good controls, with importance
//! reweighting so the retained samples approach a uniform draw from the set.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::ParameterSpace;
use crate::superlevel::SuperLevelSet;
use crate::tgmm::{log_sum_exp, sample_tgmm, Tgmm};

/// Knobs for the buffer machinery. The paper leaves the batch sizes free;
/// these defaults keep desk-scale runs fast.
#[derive(Debug, Clone, Copy)]
pub struct BufferConfig {
    /// Proposals per round from each of the mixture and the uniform source.
    pub proposals_per_round: usize,
    /// Buffer size the refill aims for (`m`).
    pub buffer_target: usize,
    /// Rounds after which a refill gives up and pads with `theta*`.
    pub round_cap: usize,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            proposals_per_round: 100,
            buffer_target: 20,
            round_cap: 1000,
        }
    }
}

/// Counters every stream keeps; `membership_calls` is the portable cost
/// measure used by the sampler metrics.
#[derive(Debug, Clone, Copy, Default)]
pub struct StreamStatus {
    pub yields: usize,
    pub membership_calls: usize,
    pub buffer_fills: usize,
    /// Refills that hit the round cap and padded the buffer with `theta*`.
    pub cap_hits: usize,
}

/// A single-consumer source of controls from the super-level set.
pub trait SampleStream<S> {
    fn next_sample(&mut self) -> Result<Vec<S>>;
    fn status(&self) -> StreamStatus;
}

/// One buffer refill result.
#[derive(Debug, Clone)]
pub struct BufferDraw<S> {
    /// Exactly `m` entries, drawn without replacement by importance weight
    /// (padded with `theta*` copies when the round cap was hit).
    pub samples: Vec<Vec<S>>,
    /// The selected entries' weights, renormalized to sum to one.
    pub weights: Vec<S>,
    /// Proposal variance after the final round; a stream feeds this back
    /// into its next refill so the adaptation transient is paid once.
    pub variance: Vec<S>,
    pub capped: bool,
    pub membership_calls: usize,
    pub rounds: usize,
}

/// Grow a pool of members by alternating mixture and uniform proposals,
/// reweighting, and finally drawing `m` entries without replacement.
///
/// `init` must be nonempty and consist of members of the set.
pub fn sample_buffer<S: Scalar, R: Rng + ?Sized>(
    set: &SuperLevelSet<S>,
    init: &[Vec<S>],
    cfg: &BufferConfig,
    rng: &mut R,
) -> Result<BufferDraw<S>> {
    sample_buffer_from(set, init, vec![S::one(); set.d_theta()], cfg, rng)
}

/// [`sample_buffer`] with an explicit starting variance.
pub fn sample_buffer_from<S: Scalar, R: Rng + ?Sized>(
    set: &SuperLevelSet<S>,
    init: &[Vec<S>],
    initial_variance: Vec<S>,
    cfg: &BufferConfig,
    rng: &mut R,
) -> Result<BufferDraw<S>> {
    let n = cfg.proposals_per_round;
    let m = cfg.buffer_target;
    if init.is_empty() {
        return Err(Error::InvalidArgument(
            "sample_buffer needs a nonempty initial set".into(),
        ));
    }
    if n < 2 || m < 1 {
        return Err(Error::InvalidArgument(format!(
            "need proposals_per_round >= 2 and buffer_target >= 1, got {n} and {m}"
        )));
    }
    let d = set.d_theta();
    crate::error::check_dim(d, initial_variance.len())?;

    let mut pool: Vec<Vec<S>> = init.to_vec();
    let mut log_w: Vec<S> = vec![S::zero(); pool.len()];
    let mut variance = initial_variance;
    let mut calls = 0usize;
    let mut rounds = 0usize;

    loop {
        if rounds >= cfg.round_cap {
            break;
        }
        rounds += 1;

        let mix = Tgmm::new(
            normalized_weights(&log_w),
            pool.clone(),
            variance.clone(),
        )?;
        let proposals = sample_tgmm(n, &mix, rng);
        calls += proposals.len();
        let accepted: Vec<Vec<S>> = proposals
            .into_iter()
            .filter(|t| set.membership(t))
            .collect();
        let mut log_w_accepted = Vec::with_capacity(accepted.len());
        for t in &accepted {
            // Importance weight 1 / p_TGMM(theta).
            log_w_accepted.push(-mix.ln_density(t)?);
        }
        // Variance adapts by exactly a factor of two per round.
        let half = accepted.len() * 2 < n;
        for v in &mut variance {
            *v = if half {
                *v / S::from_f64(2.0)
            } else {
                *v * S::from_f64(2.0)
            };
        }

        let mut uniform_accepted = Vec::new();
        for _ in 0..n {
            let t: Vec<S> = ParameterSpace::sample_unit(d, rng);
            calls += 1;
            if set.membership(&t) {
                uniform_accepted.push(t);
            }
        }
        // Uniform acceptances carry weight Vol(B) = 1.
        let log_w_uniform = vec![S::zero(); uniform_accepted.len()];

        log_w.extend(log_w_uniform);
        log_w.extend(log_w_accepted);
        renormalize_log(&mut log_w);
        pool.extend(uniform_accepted);
        pool.extend(accepted);

        if pool.len() > m {
            let (samples, weights) = weighted_without_replacement(&pool, &log_w, m, rng);
            return Ok(BufferDraw {
                samples,
                weights,
                variance,
                capped: false,
                membership_calls: calls,
                rounds,
            });
        }
    }

    // Cap hit: return what the pool holds, padded with theta* repetitions.
    let take = pool.len().min(m);
    let (mut samples, mut weights) = weighted_without_replacement(&pool, &log_w, take, rng);
    while samples.len() < m {
        samples.push(set.theta_star().to_vec());
        weights.push(S::zero());
    }
    renormalize(&mut weights);
    Ok(BufferDraw {
        samples,
        weights,
        variance,
        capped: true,
        membership_calls: calls,
        rounds,
    })
}

fn normalized_weights<S: Scalar>(log_w: &[S]) -> Vec<S> {
    let lse = log_sum_exp(log_w);
    log_w.iter().map(|&lw| (lw - lse).exp()).collect()
}

fn renormalize_log<S: Scalar>(log_w: &mut [S]) {
    let lse = log_sum_exp(log_w);
    for lw in log_w.iter_mut() {
        *lw -= lse;
    }
}

fn renormalize<S: Scalar>(w: &mut [S]) {
    let total: S = w.iter().copied().sum();
    if total > S::zero() {
        for x in w.iter_mut() {
            *x /= total;
        }
    } else {
        let uniform = S::one() / S::from_usize(w.len().max(1));
        for x in w.iter_mut() {
            *x = uniform;
        }
    }
}

/// Weighted sampling without replacement via Gumbel-top-m keys; stable under
/// a fixed RNG stream.
fn weighted_without_replacement<S: Scalar, R: Rng + ?Sized>(
    pool: &[Vec<S>],
    log_w: &[S],
    m: usize,
    rng: &mut R,
) -> (Vec<Vec<S>>, Vec<S>) {
    let mut keyed: Vec<(S, usize)> = log_w
        .iter()
        .enumerate()
        .map(|(i, &lw)| {
            let u = S::sample_unit(rng).max(S::from_f64(1e-300));
            let gumbel = -(-u.ln()).ln();
            (lw + gumbel, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    keyed.truncate(m);
    let samples = keyed.iter().map(|&(_, i)| pool[i].clone()).collect();
    let mut weights: Vec<S> = keyed.iter().map(|&(_, i)| log_w[i].exp()).collect();
    renormalize(&mut weights);
    (samples, weights)
}

/// Algorithm-2 style sampler: keeps a buffer of likely members, refilling
/// whenever it drops below half the target.
pub struct AdaptiveStream<S, R> {
    set: SuperLevelSet<S>,
    cfg: BufferConfig,
    buffer: VecDeque<Vec<S>>,
    variance: Vec<S>,
    rng: R,
    status: StreamStatus,
}

impl<S: Scalar, R: Rng> AdaptiveStream<S, R> {
    pub fn new(set: SuperLevelSet<S>, cfg: BufferConfig, rng: R) -> Self {
        let variance = vec![S::one(); set.d_theta()];
        AdaptiveStream {
            set,
            cfg,
            buffer: VecDeque::new(),
            variance,
            rng,
            status: StreamStatus::default(),
        }
    }

    pub fn set(&self) -> &SuperLevelSet<S> {
        &self.set
    }

    fn refill(&mut self) -> Result<()> {
        // Seed the refill with whatever good samples remain (they passed
        // membership when buffered) plus theta*, and keep the adapted
        // variance, so the proposal does not re-learn the region scale on
        // every refill.
        let mut init: Vec<Vec<S>> = self.buffer.iter().cloned().collect();
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
        self.buffer = draw.samples.into();
        Ok(())
    }
}

impl<S: Scalar, R: Rng> SampleStream<S> for AdaptiveStream<S, R> {
    fn next_sample(&mut self) -> Result<Vec<S>> {
        if self.buffer.len() * 2 < self.cfg.buffer_target {
            self.refill()?;
        }
        let theta = self
            .buffer
            .pop_front()
            .expect("refill produces at least one entry");
        self.status.yields += 1;
        Ok(theta)
    }

    fn status(&self) -> StreamStatus {
        self.status
    }
}

/// Uniform-proposal rejection sampler over the set.
pub struct RejectionStream<S, R> {
    set: SuperLevelSet<S>,
    rng: R,
    /// Proposals allowed per yield before reporting a vanishing set.
    pub proposal_cap: usize,
    status: StreamStatus,
}

impl<S: Scalar, R: Rng> RejectionStream<S, R> {
    pub fn new(set: SuperLevelSet<S>, rng: R) -> Self {
        RejectionStream {
            set,
            rng,
            proposal_cap: 1_000_000,
            status: StreamStatus::default(),
        }
    }

    pub fn set(&self) -> &SuperLevelSet<S> {
        &self.set
    }
}

impl<S: Scalar, R: Rng> SampleStream<S> for RejectionStream<S, R> {
    fn next_sample(&mut self) -> Result<Vec<S>> {
        let d = self.set.d_theta();
        for _ in 0..self.proposal_cap {
            let t: Vec<S> = ParameterSpace::sample_unit(d, &mut self.rng);
            self.status.membership_calls += 1;
            if self.set.membership(&t) {
                self.status.yields += 1;
                return Ok(t);
            }
        }
        Err(Error::VanishingSet {
            cap: self.proposal_cap,
        })
    }

    fn status(&self) -> StreamStatus {
        self.status
    }
}
