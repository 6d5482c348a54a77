//! Independent oracles for the acceptance suite: a dense Gauss-Jordan
//! posterior (no shared code with the library's Cholesky path) and small
//! statistical helpers.

use levelset::dataset::Dataset;
use levelset::kernel::{kernel_eval, KernelSpec};

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

/// Closed-form posterior mean and variance by explicit dense inverse.
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
    let k_vec: Vec<f64> = pts
        .iter()
        .map(|p| kernel_eval(spec, p, x).unwrap())
        .collect();
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

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// One-sided paired t statistic for `a - b > 0`.
pub fn paired_t(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let m = mean(&diffs);
    let var = diffs.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1.0);
    m / (var.sqrt() / n.sqrt())
}
