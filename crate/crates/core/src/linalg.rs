//! Dense symmetric matrices and Cholesky factorization.
//!
//! The problem sizes here are small (hundreds of rows at most), so a plain
//! row-major `Vec` with textbook factorization is the right tool. Jitter
//! handling follows one fixed policy: start from 1e-10 scaled by the mean
//! diagonal, escalate tenfold, give up at 1e-4.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const JITTER_BASE: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Dense symmetric matrix, full row-major storage.
#[derive(Debug, Clone)]
pub struct SymMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> SymMatrix<S> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = vec![S::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    fn mean_diag(&self) -> S {
        if self.n == 0 {
            return S::zero();
        }
        (0..self.n).map(|i| self.get(i, i)).sum::<S>() / S::from_usize(self.n)
    }
}

/// Lower-triangular Cholesky factor of a positive definite matrix, plus the
/// diagonal jitter that was needed to obtain it.
#[derive(Debug, Clone)]
pub struct CholeskyFactor<S> {
    n: usize,
    l: Vec<S>,
    jitter: S,
}

impl<S: Scalar> CholeskyFactor<S> {
    /// Factor `a` (destructively trying increasing jitter levels).
    pub fn decompose(a: &SymMatrix<S>) -> Result<Self> {
        let scale = a.mean_diag().max(S::one());
        let mut jitter = S::zero();
        loop {
            if let Some(l) = try_cholesky(a, jitter) {
                return Ok(CholeskyFactor { n: a.n, l, jitter });
            }
            let next = if jitter == S::zero() {
                S::from_f64(JITTER_BASE) * scale
            } else {
                jitter * S::from_f64(10.0)
            };
            if next > S::from_f64(JITTER_MAX) * scale {
                return Err(Error::Factorization {
                    n: a.n,
                    max_jitter: JITTER_MAX * scale.as_f64(),
                });
            }
            jitter = next;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The diagonal jitter added before factorization succeeded.
    pub fn jitter(&self) -> S {
        self.jitter
    }

    /// Solve `L z = b` (forward substitution).
    pub fn solve_lower(&self, b: &[S]) -> Vec<S> {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut acc = z[i];
            for j in 0..i {
                acc = acc - self.l[i * n + j] * z[j];
            }
            z[i] = acc / self.l[i * n + i];
        }
        z
    }

    /// Solve `(L L^T) x = b`.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut x = self.solve_lower(b);
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc = acc - self.l[j * n + i] * x[j];
            }
            x[i] = acc / self.l[i * n + i];
        }
        x
    }

    /// Multiply the lower factor by a vector: `L z`.
    pub fn mul_lower(&self, z: &[S]) -> Vec<S> {
        debug_assert_eq!(z.len(), self.n);
        let n = self.n;
        (0..n)
            .map(|i| (0..=i).map(|j| self.l[i * n + j] * z[j]).sum())
            .collect()
    }

    /// `ln det(A)` of the factored matrix.
    pub fn ln_det(&self) -> S {
        let n = self.n;
        let two = S::from_f64(2.0);
        (0..n).map(|i| self.l[i * n + i].ln() * two).sum()
    }
}

fn try_cholesky<S: Scalar>(a: &SymMatrix<S>, jitter: S) -> Option<Vec<S>> {
    let n = a.n;
    let mut l = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            if i == j {
                sum += jitter;
            }
            for k in 0..j {
                sum = sum - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= S::zero() || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}
