//! The control box and the min-max map between raw units and the unit cube.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Axis-aligned box of raw control parameters together with its min-max
/// normalization onto `[0,1]^d`. All learning and sampling happens in the
/// normalized cube; this type carries the map back to raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace<S> {
    lo: Vec<S>,
    hi: Vec<S>,
}

impl<S: Scalar> ParameterSpace<S> {
    pub fn new(lo: Vec<S>, hi: Vec<S>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument(
                "parameter space needs lo < hi in every dimension".into(),
            ));
        }
        Ok(ParameterSpace { lo, hi })
    }

    /// The unit hypercube in `d` dimensions.
    pub fn unit(d: usize) -> Self {
        ParameterSpace {
            lo: vec![S::zero(); d],
            hi: vec![S::one(); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Map raw units into the unit cube.
    pub fn normalize(&self, raw: &[S]) -> Result<Vec<S>> {
        check_dim(self.dim(), raw.len())?;
        Ok(raw
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&lo, &hi))| (x - lo) / (hi - lo))
            .collect())
    }

    /// Map a unit-cube point back to raw units.
    pub fn denormalize(&self, unit: &[S]) -> Result<Vec<S>> {
        check_dim(self.dim(), unit.len())?;
        Ok(unit
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&u, (&lo, &hi))| lo + u * (hi - lo))
            .collect())
    }

    /// Whether a normalized point lies in the unit cube.
    pub fn contains_unit(theta: &[S]) -> bool {
        theta.iter().all(|&t| t >= S::zero() && t <= S::one())
    }

    /// Uniform draw from the unit cube.
    pub fn sample_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<S> {
        (0..d).map(|_| S::sample_unit(rng)).collect()
    }
}
