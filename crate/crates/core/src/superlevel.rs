//! High-probability super-level sets of the learned score function.
//!
//! For a context `alpha`, the set contains every control whose confidence
//! ratio `phi = mean/std` under the posterior clears a threshold `beta`.
//! Two thresholds are supported: the union-bound value `beta*` that makes
//! all of `T` draws jointly valid with probability `1 - delta`, and the
//! relaxed quantile form `beta = Phi^-1(q Phi(phi(theta*)))` anchored at the
//! most confident control, which keeps the set nonempty even when the union
//! bound admits no point.

use rand::Rng;

use crate::active::{joint, maximize_over_box, SearchConfig};
use crate::error::{check_dim, Error, Result};
use crate::gp::GpModel;
use crate::normal::{std_normal_cdf, std_normal_quantile};
use crate::scalar::Scalar;

/// Sigma floor under which the ratio degenerates to a signed sentinel.
const SIGMA_FLOOR: f64 = 1e-12;
/// Sentinel magnitude returned for degenerate queries.
const RATIO_SENTINEL: f64 = 1e12;

pub(crate) fn ratio<S: Scalar>(mean: S, sigma: S) -> S {
    if sigma < S::from_f64(SIGMA_FLOOR) {
        if mean == S::zero() {
            S::zero()
        } else {
            S::from_f64(RATIO_SENTINEL).copysign(mean)
        }
    } else {
        mean / sigma
    }
}

/// Confidence ratio `phi(theta, alpha) = mean / std` of the posterior score.
pub fn confidence_ratio<S: Scalar>(model: &GpModel<S>, theta: &[S], alpha: &[S]) -> Result<S> {
    check_dim(model.input_dim(), theta.len() + alpha.len())?;
    let (m, v) = model.predict(&joint(theta, alpha))?;
    Ok(ratio(m, v.sqrt()))
}

/// Choice of the `pi_i` sequence in the union bound; any sequence with
/// `sum 1/pi_i <= 1` is admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiScheme {
    /// One sample total: `pi_1 = 1`.
    Single,
    /// A known horizon of `total` samples: `pi_i = total`.
    Uniform { total: usize },
    /// Unbounded streams: `pi_i = pi^2 i^2 / 6`.
    InfiniteQuadratic,
}

impl PiScheme {
    /// `pi_i` for the 1-based sample index.
    pub fn pi(&self, i: usize) -> f64 {
        assert!(i >= 1, "sample index is 1-based");
        match self {
            PiScheme::Single => 1.0,
            PiScheme::Uniform { total } => *total as f64,
            PiScheme::InfiniteQuadratic => {
                std::f64::consts::PI * std::f64::consts::PI * (i * i) as f64 / 6.0
            }
        }
    }
}

/// Union-bound threshold `beta*_i = sqrt(2 ln(pi_i / (2 delta)))`.
///
/// If every one of the `T` picked controls satisfies `phi > beta*_i`, all of
/// them score positive with probability at least `1 - delta`.
pub fn beta_union_bound<S: Scalar>(delta: S, i: usize, scheme: PiScheme) -> Result<S> {
    let delta = delta.as_f64();
    if !(0.0..1.0).contains(&delta) || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    let pi_i = scheme.pi(i);
    if pi_i <= 2.0 * delta {
        return Err(Error::VacuousBound {
            pi: pi_i,
            two_delta: 2.0 * delta,
        });
    }
    Ok(S::from_f64((2.0 * (pi_i / (2.0 * delta)).ln()).sqrt()))
}

/// A learned high-probability super-level set for one context.
#[derive(Debug, Clone)]
pub struct SuperLevelSet<S> {
    model: GpModel<S>,
    context: Vec<S>,
    beta: S,
    theta_star: Vec<S>,
    confidence_quantile: S,
}

impl<S: Scalar> SuperLevelSet<S> {
    /// Build the set: find the most confident control `theta*`, then relax
    /// its confidence by the quantile to obtain the membership threshold.
    /// Never fails to contain `theta*`.
    pub fn build<R: Rng + ?Sized>(
        model: GpModel<S>,
        context: Vec<S>,
        quantile: S,
        search: &SearchConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if !(quantile > S::zero() && quantile < S::one()) {
            return Err(Error::InvalidArgument(format!(
                "quantile must be in (0,1), got {quantile}"
            )));
        }
        if model.input_dim() <= context.len() {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim(),
                got: context.len(),
            });
        }
        let d_theta = model.input_dim() - context.len();
        let (theta_star, phi_star) = maximize_over_box(
            d_theta,
            |theta| {
                let (m, v) = model.predict_unchecked(&joint(theta, &context));
                ratio(m, v.sqrt())
            },
            search,
            rng,
        );
        let beta = relaxed_beta(phi_star, quantile);
        Ok(SuperLevelSet {
            model,
            context,
            beta,
            theta_star,
            confidence_quantile: quantile,
        })
    }

    /// Assemble a set directly from parts; callers that compute `beta` from
    /// the union bound use this.
    pub fn with_beta(
        model: GpModel<S>,
        context: Vec<S>,
        beta: S,
        theta_star: Vec<S>,
    ) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::NonFinite { context: "beta" });
        }
        check_dim(model.input_dim(), theta_star.len() + context.len())?;
        Ok(SuperLevelSet {
            model,
            context,
            beta,
            theta_star,
            confidence_quantile: S::from_f64(f64::NAN),
        })
    }

    pub fn model(&self) -> &GpModel<S> {
        &self.model
    }

    pub fn context(&self) -> &[S] {
        &self.context
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    pub fn theta_star(&self) -> &[S] {
        &self.theta_star
    }

    pub fn confidence_quantile(&self) -> S {
        self.confidence_quantile
    }

    pub fn d_theta(&self) -> usize {
        self.model.input_dim() - self.context.len()
    }

    /// Confidence ratio at a control, without input re-validation.
    pub fn phi(&self, theta: &[S]) -> S {
        let (m, v) = self.model.predict_unchecked(&joint(theta, &self.context));
        ratio(m, v.sqrt())
    }

    /// Membership test: `phi(theta) > beta`.
    pub fn membership(&self, theta: &[S]) -> bool {
        self.phi(theta) > self.beta
    }
}

/// The relaxed threshold `Phi^-1(q Phi(phi_star))`, guarded so that
/// `phi_star` itself always clears it.
fn relaxed_beta<S: Scalar>(phi_star: S, quantile: S) -> S {
    let p = (quantile * std_normal_cdf(phi_star))
        .max(S::from_f64(1e-300))
        .min(S::from_f64(1.0 - 1e-16));
    let beta = std_normal_quantile(p);
    if phi_star > beta {
        beta
    } else {
        // Only reachable when phi_star is so extreme that the CDF saturated;
        // drop just below it to keep theta* a member.
        phi_star - S::from_f64(1e-9).max(phi_star.abs() * S::from_f64(1e-9))
    }
}
