//! Covariance kernels: ARD squared exponential, ARD Matern 5/2, and the
//! multi-layer perceptron (neural network) kernel.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::scalar::Scalar;

/// Kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    SquaredExponential,
    Matern52,
    MultiLayerPerceptron,
}

impl KernelKind {
    /// Number of length-scale entries for an input of dimension `d`.
    /// The MLP kernel carries one extra entry for the bias coordinate of
    /// the augmented input `[1, x]`.
    pub fn length_scale_len(self, input_dim: usize) -> usize {
        match self {
            KernelKind::MultiLayerPerceptron => input_dim + 1,
            _ => input_dim,
        }
    }
}

/// A kernel with its hyperparameters.
///
/// For the stationary kernels `length_scales` holds one ARD length scale per
/// input dimension. For the MLP kernel it holds the diagonal of the input
/// covariance (bias coordinate first), which plays the inverse role: larger
/// entries mean faster variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<S> {
    pub kind: KernelKind,
    pub variance: S,
    pub length_scales: Vec<S>,
}

impl<S: Scalar> KernelSpec<S> {
    pub fn new(kind: KernelKind, variance: S, length_scales: Vec<S>) -> Result<Self> {
        let spec = KernelSpec {
            kind,
            variance,
            length_scales,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Isotropic spec with unit variance and the given shared length scale.
    pub fn isotropic(kind: KernelKind, input_dim: usize, length_scale: S) -> Self {
        KernelSpec {
            kind,
            variance: S::one(),
            length_scales: vec![length_scale; kind.length_scale_len(input_dim)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > S::zero()) || !self.variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kernel variance must be positive and finite, got {}",
                self.variance
            )));
        }
        if self.length_scales.is_empty() {
            return Err(Error::InvalidArgument(
                "kernel needs at least one length scale".into(),
            ));
        }
        if self
            .length_scales
            .iter()
            .any(|l| !(*l > S::zero()) || !l.is_finite())
        {
            return Err(Error::InvalidArgument(
                "every kernel length scale must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    /// Input dimension this spec applies to.
    pub fn input_dim(&self) -> usize {
        match self.kind {
            KernelKind::MultiLayerPerceptron => self.length_scales.len() - 1,
            _ => self.length_scales.len(),
        }
    }

    /// Matern roughness; fixed at 5/2, absent for the other kernels.
    pub fn roughness(&self) -> Option<S> {
        match self.kind {
            KernelKind::Matern52 => Some(S::from_f64(2.5)),
            _ => None,
        }
    }

    /// Prior variance `k(x, x)` at a point.
    pub fn prior_variance(&self, x: &[S]) -> S {
        match self.kind {
            KernelKind::MultiLayerPerceptron => mlp_eval(self, x, x),
            _ => self.variance,
        }
    }
}

/// Evaluate the kernel at a pair of points.
pub fn kernel_eval<S: Scalar>(spec: &KernelSpec<S>, x: &[S], x2: &[S]) -> Result<S> {
    let d = spec.input_dim();
    crate::error::check_dim(d, x.len())?;
    crate::error::check_dim(d, x2.len())?;
    check_finite(x, "kernel input")?;
    check_finite(x2, "kernel input")?;
    Ok(kernel_eval_unchecked(spec, x, x2))
}

/// Same as [`kernel_eval`] without the input checks; used on hot paths where
/// dimensions were validated at model construction.
pub(crate) fn kernel_eval_unchecked<S: Scalar>(spec: &KernelSpec<S>, x: &[S], x2: &[S]) -> S {
    match spec.kind {
        KernelKind::SquaredExponential => {
            let r = scaled_sq_dist(&spec.length_scales, x, x2);
            spec.variance * (-r / S::from_f64(2.0)).exp()
        }
        KernelKind::Matern52 => {
            let r = scaled_sq_dist(&spec.length_scales, x, x2);
            let d = r.sqrt();
            let sqrt5 = S::from_f64(5.0).sqrt();
            let poly = S::one() + sqrt5 * d + S::from_f64(5.0 / 3.0) * r;
            spec.variance * poly * (-sqrt5 * d).exp()
        }
        KernelKind::MultiLayerPerceptron => mlp_eval(spec, x, x2),
    }
}

fn scaled_sq_dist<S: Scalar>(ls: &[S], x: &[S], x2: &[S]) -> S {
    ls.iter()
        .zip(x.iter().zip(x2))
        .map(|(&l, (&a, &b))| {
            let d = (a - b) / l;
            d * d
        })
        .sum()
}

/// Weighted inner product of the augmented inputs `[1, x]` under the MLP
/// kernel's diagonal covariance.
fn mlp_inner<S: Scalar>(sigma2: &[S], x: &[S], x2: &[S]) -> S {
    let bias = sigma2[0];
    bias
        + sigma2[1..]
            .iter()
            .zip(x.iter().zip(x2))
            .map(|(&s, (&a, &b))| s * a * b)
            .sum()
}

fn mlp_eval<S: Scalar>(spec: &KernelSpec<S>, x: &[S], x2: &[S]) -> S {
    let s = &spec.length_scales;
    let num = mlp_inner(s, x, x2);
    let den = ((mlp_inner(s, x, x) + S::one()) * (mlp_inner(s, x2, x2) + S::one())).sqrt();
    let arg = (num / den).max(-S::one()).min(S::one());
    S::from_f64(2.0 / std::f64::consts::PI) * spec.variance * arg.asin()
}
