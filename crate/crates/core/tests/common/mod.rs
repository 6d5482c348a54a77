//! Shared oracles for the integration tests. Everything here recomputes
//! the quantities under test from first principles (dense inverses, full
//! eigendecompositions) and stays independent of the library's solve paths.

use levelset::dataset::Dataset;
use levelset::kernel::{kernel_eval, KernelKind, KernelSpec};
use levelset::scalar::Scalar;
use rand::Rng;

/// Dense Gauss-Jordan inverse with partial pivoting.
pub fn invert(mat: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = mat.len();
    let mut a: Vec<Vec<f64>> = mat.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "singular matrix in oracle");
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col];
            for j in 0..n {
                a[i][j] -= f * a[col][j];
                inv[i][j] -= f * inv[col][j];
            }
        }
    }
    inv
}

/// Posterior mean and variance straight from the closed-form expressions
/// with an explicit dense inverse.
pub fn dense_posterior(data: &Dataset<f64>, spec: &KernelSpec<f64>, x: &[f64]) -> (f64, f64) {
    let pts = data.points();
    let n = pts.len();
    let noise = data.noise_std() * data.noise_std();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    kernel_eval(spec, &pts[i], &pts[j]).unwrap()
                        + if i == j { noise } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let inv = invert(&gram);
    let k_vec: Vec<f64> = pts.iter().map(|p| kernel_eval(spec, p, x).unwrap()).collect();
    let y = data.values();
    let mut mean = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        let mut row_y = 0.0;
        let mut row_k = 0.0;
        for j in 0..n {
            row_y += inv[i][j] * y[j];
            row_k += inv[i][j] * k_vec[j];
        }
        mean += k_vec[i] * row_y;
        quad += k_vec[i] * row_k;
    }
    let prior = kernel_eval(spec, x, x).unwrap();
    (mean, prior - quad)
}

/// Symmetric eigenvalues via cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mat: &[Vec<f64>]) -> Vec<f64> {
    let n = mat.len();
    let mut a = mat.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Random dataset in up to `max_dim` dimensions with a matching random
/// kernel spec.
pub fn random_problem<R: Rng>(
    rng: &mut R,
    max_n: usize,
    max_dim: usize,
) -> (Dataset<f64>, KernelSpec<f64>) {
    let n = 1 + (f64::sample_unit(rng) * max_n as f64) as usize;
    let d = 1 + (f64::sample_unit(rng) * max_dim as f64) as usize;
    let kind = match (f64::sample_unit(rng) * 3.0) as usize {
        0 => KernelKind::SquaredExponential,
        1 => KernelKind::Matern52,
        _ => KernelKind::MultiLayerPerceptron,
    };
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| f64::sample_unit(rng)).collect())
        .collect();
    let values: Vec<f64> = (0..n).map(|_| 4.0 * (f64::sample_unit(rng) - 0.5)).collect();
    let noise = 0.05 + 0.25 * f64::sample_unit(rng);
    let variance = 0.5 + 1.5 * f64::sample_unit(rng);
    let ls: Vec<f64> = (0..kind.length_scale_len(d))
        .map(|_| 0.2 + 0.8 * f64::sample_unit(rng))
        .collect();
    (
        Dataset::new(points, values, noise).unwrap(),
        KernelSpec::new(kind, variance, ls).unwrap(),
    )
}
