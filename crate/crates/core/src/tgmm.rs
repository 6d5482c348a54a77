//! Mixture of truncated Gaussians over the unit box: the adaptive sampler's
//! proposal distribution.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::normal::{truncnorm_ln_pdf, truncnorm_sample};
use crate::scalar::Scalar;
use crate::space::ParameterSpace;

/// Truncated Gaussian mixture. Every component shares one per-dimension
/// variance vector (the "circular" variance), each coordinate truncated to
/// `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Tgmm<S> {
    weights: Vec<S>,
    means: Vec<Vec<S>>,
    variances: Vec<S>,
}

impl<S: Scalar> Tgmm<S> {
    /// Build a mixture; weights are normalized to sum to one.
    pub fn new(weights: Vec<S>, means: Vec<Vec<S>>, variances: Vec<S>) -> Result<Self> {
        check_dim(weights.len(), means.len())?;
        if weights.is_empty() {
            return Err(Error::InvalidArgument("mixture needs a component".into()));
        }
        if weights.iter().any(|w| !(*w >= S::zero()) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "mixture weights must be nonnegative and finite".into(),
            ));
        }
        let total: S = weights.iter().copied().sum();
        if !(total > S::zero()) {
            return Err(Error::InvalidArgument(
                "mixture weights must not all be zero".into(),
            ));
        }
        let weights: Vec<S> = weights.into_iter().map(|w| w / total).collect();
        let d = variances.len();
        for m in &means {
            check_dim(d, m.len())?;
            if !ParameterSpace::contains_unit(m) {
                return Err(Error::InvalidArgument(
                    "every mixture mean must lie in the unit box".into(),
                ));
            }
        }
        if variances.iter().any(|v| !(*v > S::zero())) {
            return Err(Error::InvalidArgument(
                "every mixture variance must be positive".into(),
            ));
        }
        Ok(Tgmm {
            weights,
            means,
            variances,
        })
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<S>] {
        &self.means
    }

    pub fn variances(&self) -> &[S] {
        &self.variances
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    fn pick_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = S::sample_unit(rng);
        let mut acc = S::zero();
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    /// Draw one point: component by weight, then per-dimension truncated
    /// normals around its mean.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        let c = self.pick_component(rng);
        self.means[c]
            .iter()
            .zip(&self.variances)
            .map(|(&mu, &v)| truncnorm_sample(mu, v.sqrt(), S::zero(), S::one(), rng))
            .collect()
    }

    /// Log density at a point inside the box.
    pub fn ln_density(&self, theta: &[S]) -> Result<S> {
        check_dim(self.dim(), theta.len())?;
        if !ParameterSpace::contains_unit(theta) {
            return Err(Error::InvalidArgument(format!(
                "density query {theta:?} outside the unit box"
            )));
        }
        let mut terms: Vec<S> = Vec::with_capacity(self.weights.len());
        for (w, mean) in self.weights.iter().zip(&self.means) {
            if *w == S::zero() {
                continue;
            }
            let ln_comp: S = theta
                .iter()
                .zip(mean.iter().zip(&self.variances))
                .map(|(&x, (&mu, &v))| truncnorm_ln_pdf(x, mu, v.sqrt(), S::zero(), S::one()))
                .sum();
            terms.push(w.ln() + ln_comp);
        }
        Ok(log_sum_exp(&terms))
    }

    /// Density at a point inside the box; strictly positive there.
    pub fn density(&self, theta: &[S]) -> Result<S> {
        Ok(self.ln_density(theta)?.exp())
    }
}

/// Draw `count` points from the mixture.
pub fn sample_tgmm<S: Scalar, R: Rng + ?Sized>(
    count: usize,
    mix: &Tgmm<S>,
    rng: &mut R,
) -> Vec<Vec<S>> {
    (0..count).map(|_| mix.sample_one(rng)).collect()
}

pub(crate) fn log_sum_exp<S: Scalar>(terms: &[S]) -> S {
    let mx = terms
        .iter()
        .copied()
        .fold(S::neg_infinity(), |a, b| a.max(b));
    if !mx.is_finite() {
        return mx;
    }
    mx + terms.iter().map(|&t| (t - mx).exp()).sum::<S>().ln()
}
