//! Gaussian process regression: posterior construction, prediction,
//! marginal likelihood, and ARD hyperparameter fitting.
//!
//! The posterior over a zero-mean prior with kernel `k` and i.i.d. Gaussian
//! observation noise `zeta` has
//!
//! ```text
//! mean(x) = k_D(x)' (K_D + zeta^2 I)^-1 y
//! var(x)  = k(x,x) - k_D(x)' (K_D + zeta^2 I)^-1 k_D(x)
//! ```
//!
//! computed through one cached Cholesky factorization per model.

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::kernel::{kernel_eval_unchecked, KernelKind, KernelSpec};
use crate::linalg::{CholeskyFactor, SymMatrix};
use crate::optim::NelderMead;
use crate::scalar::{dot, Scalar};

/// Immutable posterior GP. Shareable across threads for prediction.
#[derive(Debug, Clone)]
pub struct GpModel<S> {
    kernel: KernelSpec<S>,
    data: Dataset<S>,
    factor: Option<CholeskyFactor<S>>,
    alpha_vec: Vec<S>,
    prior_mean: S,
}

impl<S: Scalar> GpModel<S> {
    pub fn kernel(&self) -> &KernelSpec<S> {
        &self.kernel
    }

    pub fn data(&self) -> &Dataset<S> {
        &self.data
    }

    /// Input dimension the model predicts over.
    pub fn input_dim(&self) -> usize {
        self.kernel.input_dim()
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &[S]) -> Result<(S, S)> {
        check_dim(self.input_dim(), x.len())?;
        crate::error::check_finite(x, "prediction input")?;
        Ok(self.predict_unchecked(x))
    }

    /// Prediction without input validation, for hot loops over points that
    /// are known to be in the box.
    pub fn predict_unchecked(&self, x: &[S]) -> (S, S) {
        let prior = self.kernel.prior_variance(x);
        let Some(factor) = &self.factor else {
            return (self.prior_mean, prior);
        };
        let k_vec: Vec<S> = self
            .data
            .points()
            .iter()
            .map(|p| kernel_eval_unchecked(&self.kernel, p, x))
            .collect();
        let mean = self.prior_mean + dot(&k_vec, &self.alpha_vec);
        let v = factor.solve_lower(&k_vec);
        let var = prior - dot(&v, &v);
        (mean, var.max(S::zero()))
    }

    /// The constant prior mean the targets were residualized against.
    pub fn prior_mean(&self) -> S {
        self.prior_mean
    }
}

/// Build the posterior GP for a dataset under a kernel. An empty dataset
/// yields the prior. The prior mean is zero, per the closed-form posterior
/// expressions.
pub fn posterior<S: Scalar>(data: &Dataset<S>, spec: &KernelSpec<S>) -> Result<GpModel<S>> {
    posterior_with_mean(data, spec, S::zero())
}

/// [`posterior`] with an explicit constant prior mean: the GP models the
/// residuals `y - m`, and predictions revert to `m` far from data. The
/// training loops pass the running target mean here because the raw scores
/// of some skills sit far from zero over most of the box, and a zero prior
/// mean would otherwise fabricate apparent level-set crossings wherever
/// data is sparse.
pub fn posterior_with_mean<S: Scalar>(
    data: &Dataset<S>,
    spec: &KernelSpec<S>,
    prior_mean: S,
) -> Result<GpModel<S>> {
    spec.validate()?;
    if !prior_mean.is_finite() {
        return Err(Error::NonFinite {
            context: "prior mean",
        });
    }
    if let Some(d) = data.input_dim() {
        check_dim(spec.input_dim(), d)?;
    }
    if data.is_empty() {
        return Ok(GpModel {
            kernel: spec.clone(),
            data: data.clone(),
            factor: None,
            alpha_vec: Vec::new(),
            prior_mean,
        });
    }
    let factor = gram_factor(data, spec)?;
    let residuals: Vec<S> = data.values().iter().map(|&y| y - prior_mean).collect();
    let alpha_vec = factor.solve(&residuals);
    Ok(GpModel {
        kernel: spec.clone(),
        data: data.clone(),
        factor: Some(factor),
        alpha_vec,
        prior_mean,
    })
}

fn gram_factor<S: Scalar>(data: &Dataset<S>, spec: &KernelSpec<S>) -> Result<CholeskyFactor<S>> {
    let pts = data.points();
    let noise_var = data.noise_std() * data.noise_std();
    let gram = SymMatrix::from_fn(pts.len(), |i, j| {
        let k = kernel_eval_unchecked(spec, &pts[i], &pts[j]);
        if i == j {
            k + noise_var
        } else {
            k
        }
    });
    CholeskyFactor::decompose(&gram)
}

/// Log marginal likelihood of the data under the kernel:
/// `-1/2 y'(K+zeta^2 I)^-1 y - 1/2 ln det(K+zeta^2 I) - n/2 ln 2pi`.
pub fn log_marginal_likelihood<S: Scalar>(data: &Dataset<S>, spec: &KernelSpec<S>) -> Result<S> {
    if data.is_empty() {
        return Err(Error::InvalidArgument(
            "marginal likelihood needs at least one observation".into(),
        ));
    }
    spec.validate()?;
    check_dim(spec.input_dim(), data.input_dim().unwrap())?;
    let factor = gram_factor(data, spec)?;
    let y = data.values();
    let alpha = factor.solve(y);
    let half = S::from_f64(0.5);
    let n = S::from_usize(data.len());
    let ln_2pi = S::from_f64((2.0 * std::f64::consts::PI).ln());
    Ok(-half * dot(y, &alpha) - half * factor.ln_det() - half * n * ln_2pi)
}

/// Draw one function realization from the GP prior at a fixed set of points.
/// Used by synthetic-recovery tests and the coverage experiments.
pub fn sample_prior_at<S: Scalar, R: Rng + ?Sized>(
    spec: &KernelSpec<S>,
    points: &[Vec<S>],
    rng: &mut R,
) -> Result<Vec<S>> {
    let gram = SymMatrix::from_fn(points.len(), |i, j| {
        kernel_eval_unchecked(spec, &points[i], &points[j])
    });
    let factor = CholeskyFactor::decompose(&gram)?;
    let z: Vec<S> = (0..points.len()).map(|_| S::sample_std_normal(rng)).collect();
    Ok(factor.mul_lower(&z))
}

#[derive(Debug, Clone)]
pub struct FitConfig<S> {
    /// Random restarts beyond the data-driven initialization.
    pub restarts: usize,
    /// Also optimize the observation noise within `noise_bounds`.
    pub fit_noise: bool,
    pub max_iters: usize,
    /// Bounds for variance and length scales.
    pub scale_bounds: (S, S),
    /// Bounds for the observation noise std.
    pub noise_bounds: (S, S),
}

impl<S: Scalar> Default for FitConfig<S> {
    fn default() -> Self {
        FitConfig {
            restarts: 2,
            fit_noise: false,
            max_iters: 150,
            scale_bounds: (S::from_f64(1e-3), S::from_f64(1e3)),
            noise_bounds: (S::from_f64(1e-4), S::one()),
        }
    }
}

/// A fitted kernel together with the (possibly refit) noise level and the
/// achieved log marginal likelihood.
#[derive(Debug, Clone)]
pub struct FitResult<S> {
    pub spec: KernelSpec<S>,
    pub noise_std: S,
    pub log_marginal: S,
}

/// Fit kernel hyperparameters by maximizing the log marginal likelihood with
/// ARD length scales, via log-space Nelder-Mead with random restarts.
pub fn fit_hyperparameters<S: Scalar, R: Rng + ?Sized>(
    data: &Dataset<S>,
    kind: KernelKind,
    cfg: &FitConfig<S>,
    rng: &mut R,
) -> Result<FitResult<S>> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "hyperparameter fitting needs at least 2 observations, got {}",
            data.len()
        )));
    }
    let dim = data.input_dim().unwrap();
    let n_ls = kind.length_scale_len(dim);
    let n_params = 1 + n_ls + usize::from(cfg.fit_noise);

    let (lo, hi) = cfg.scale_bounds;
    let (nlo, nhi) = cfg.noise_bounds;
    let clamp_params = move |p: &[S], cfg: &FitConfig<S>| -> (KernelSpec<S>, S) {
        let variance = p[0].exp().max(lo).min(hi);
        let ls: Vec<S> = p[1..=n_ls]
            .iter()
            .map(|v| v.exp().max(lo).min(hi))
            .collect();
        let noise = if cfg.fit_noise {
            p[n_ls + 1].exp().max(nlo).min(nhi)
        } else {
            S::zero() // unused
        };
        (
            KernelSpec {
                kind,
                variance,
                length_scales: ls,
            },
            noise,
        )
    };

    let objective = |p: &[S]| -> S {
        let (spec, noise) = clamp_params(p, cfg);
        let lml = if cfg.fit_noise {
            let mut d = data.clone();
            d.set_noise_std(noise);
            log_marginal_likelihood(&d, &spec)
        } else {
            log_marginal_likelihood(data, &spec)
        };
        match lml {
            Ok(v) if v.is_finite() => -v,
            _ => S::from_f64(1e12),
        }
    };

    // Data-driven initialization: output variance and a mid-box length scale.
    let var0 = {
        let y = data.values();
        let n = S::from_usize(y.len());
        let mean = y.iter().copied().sum::<S>() / n;
        let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() / n;
        var.max(S::from_f64(1e-2)).min(hi)
    };
    let mut starts: Vec<Vec<S>> = Vec::new();
    let mut p0 = vec![var0.ln()];
    p0.extend(vec![S::from_f64(0.5f64.ln()); n_ls]);
    if cfg.fit_noise {
        p0.push(data.noise_std().max(nlo).min(nhi).ln());
    }
    starts.push(p0);
    for _ in 1..cfg.restarts.max(1) {
        let mut p: Vec<S> = (0..n_params)
            .map(|_| {
                let u = S::sample_unit(rng);
                lo.ln() + u * (hi.ln() - lo.ln())
            })
            .collect();
        if cfg.fit_noise {
            let u = S::sample_unit(rng);
            p[n_params - 1] = nlo.ln() + u * (nhi.ln() - nlo.ln());
        }
        starts.push(p);
    }

    let nm = NelderMead {
        max_iters: cfg.max_iters,
        ftol: S::from_f64(1e-7),
    };
    let mut best: Option<(Vec<S>, S)> = None;
    for start in &starts {
        let f0 = objective(start);
        let (p, f) = nm.minimize(&objective, start, S::from_f64(0.7));
        let (cand_p, cand_f) = if f <= f0 { (p, f) } else { (start.clone(), f0) };
        if cand_f < S::from_f64(1e12)
            && best.as_ref().map_or(true, |(_, bf)| cand_f < *bf)
        {
            best = Some((cand_p, cand_f));
        }
    }
    let (p, neg_lml) =
        best.ok_or_else(|| Error::FitFailed("every restart failed factorization".into()))?;
    let (spec, noise) = clamp_params(&p, cfg);
    Ok(FitResult {
        noise_std: if cfg.fit_noise { noise } else { data.noise_std() },
        spec,
        log_marginal: -neg_lml,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn se_spec(dim: usize) -> KernelSpec<f64> {
        KernelSpec::isotropic(KernelKind::SquaredExponential, dim, 0.5)
    }

    #[test]
    fn empty_data_gives_prior() {
        let data = Dataset::empty(0.1);
        let model = posterior(&data, &se_spec(2)).unwrap();
        let (m, v) = model.predict(&[0.3, 0.8]).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn single_point_closed_form() {
        // k(x,x)=1, zeta=0.1: mean = 2/1.01, var = 1 - 1/1.01.
        let data = Dataset::new(vec![vec![0.5]], vec![2.0], 0.1).unwrap();
        let model = posterior(&data, &se_spec(1)).unwrap();
        let (m, v) = model.predict(&[0.5]).unwrap();
        assert!((m - 1.9801980198019802).abs() < 1e-12);
        assert!((v - 0.009900990099009901).abs() < 1e-12);
    }

    #[test]
    fn far_query_reverts_to_prior() {
        let data = Dataset::new(vec![vec![0.0], vec![0.1]], vec![1.0, 2.0], 0.05).unwrap();
        let model = posterior(&data, &se_spec(1)).unwrap();
        let (m, v) = model.predict(&[100.0]).unwrap();
        assert!(m.abs() < 1e-10);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn noise_free_interpolates() {
        let data = Dataset::new(
            vec![vec![0.1], vec![0.4], vec![0.9]],
            vec![0.3, -0.2, 1.1],
            0.0,
        )
        .unwrap();
        let model = posterior(&data, &se_spec(1)).unwrap();
        for (x, y) in data.iter() {
            let (m, v) = model.predict(x).unwrap();
            assert!((m - y).abs() < 1e-6, "mean {m} vs observed {y}");
            assert!(v >= 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn duplicated_point_equals_halved_noise_variance() {
        let zeta: f64 = 0.1;
        let dup = Dataset::new(vec![vec![0.5], vec![0.5]], vec![2.0, 2.0], zeta).unwrap();
        let single = Dataset::new(vec![vec![0.5]], vec![2.0], zeta / 2f64.sqrt()).unwrap();
        let m_dup = posterior(&dup, &se_spec(1)).unwrap();
        let m_single = posterior(&single, &se_spec(1)).unwrap();
        for q in [0.5, 0.52, 0.7] {
            let (a, va) = m_dup.predict(&[q]).unwrap();
            let (b, vb) = m_single.predict(&[q]).unwrap();
            assert!((a - b).abs() < 1e-9, "mean at {q}");
            assert!((va - vb).abs() < 1e-9, "var at {q}");
        }
    }

    #[test]
    fn lml_single_point_closed_form() {
        let spec = se_spec(1);
        let zero = Dataset::new(vec![vec![0.5]], vec![0.0], 0.0).unwrap();
        let one = Dataset::new(vec![vec![0.5]], vec![1.0], 0.0).unwrap();
        let l0 = log_marginal_likelihood(&zero, &spec).unwrap();
        let l1 = log_marginal_likelihood(&one, &spec).unwrap();
        assert!((l0 - (-0.9189385332046727)).abs() < 1e-9);
        assert!((l1 - (-1.4189385332046727)).abs() < 1e-9);
    }

    #[test]
    fn lml_permutation_invariant() {
        let spec = se_spec(1);
        let a = Dataset::new(
            vec![vec![0.1], vec![0.6], vec![0.9]],
            vec![1.0, -0.5, 0.25],
            0.1,
        )
        .unwrap();
        let b = Dataset::new(
            vec![vec![0.9], vec![0.1], vec![0.6]],
            vec![0.25, 1.0, -0.5],
            0.1,
        )
        .unwrap();
        let la = log_marginal_likelihood(&a, &spec).unwrap();
        let lb = log_marginal_likelihood(&b, &spec).unwrap();
        assert!((la - lb).abs() < 1e-10);
    }

    #[test]
    fn zero_targets_leave_only_det_and_constant() {
        let spec = se_spec(1);
        let data = Dataset::new(vec![vec![0.2], vec![0.7]], vec![0.0, 0.0], 0.3).unwrap();
        let lml = log_marginal_likelihood(&data, &spec).unwrap();
        let factor_only = {
            let pts = data.points();
            let gram = SymMatrix::from_fn(2, |i, j| {
                let k = kernel_eval_unchecked(&spec, &pts[i], &pts[j]);
                if i == j {
                    k + 0.09
                } else {
                    k
                }
            });
            let f = CholeskyFactor::decompose(&gram).unwrap();
            -0.5 * f.ln_det() - (2.0 / 2.0) * (2.0 * std::f64::consts::PI).ln()
        };
        assert!((lml - factor_only).abs() < 1e-12);
    }

    #[test]
    fn fit_is_deterministic_under_fixed_seed() {
        let mut pts = Vec::new();
        let mut ys = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..12 {
            let x: f64 = f64::sample_unit(&mut rng);
            pts.push(vec![x]);
            ys.push((6.0 * x).sin());
        }
        let data = Dataset::new(pts, ys, 0.05).unwrap();
        let cfg = FitConfig {
            restarts: 1,
            ..FitConfig::default()
        };
        let a = fit_hyperparameters(
            &data,
            KernelKind::SquaredExponential,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        let b = fit_hyperparameters(
            &data,
            KernelKind::SquaredExponential,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        assert_eq!(a.spec, b.spec);
        assert_eq!(a.log_marginal, b.log_marginal);
    }

    #[test]
    fn fit_improves_on_every_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec_true = KernelSpec::isotropic(KernelKind::SquaredExponential, 1, 0.2);
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let f = sample_prior_at(&spec_true, &pts, &mut rng).unwrap();
        let data = Dataset::new(pts, f, 0.05).unwrap();
        let init = KernelSpec::isotropic(KernelKind::SquaredExponential, 1, 0.5);
        let init_lml = log_marginal_likelihood(&data, &init).unwrap();
        let fit = fit_hyperparameters(
            &data,
            KernelKind::SquaredExponential,
            &FitConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert!(fit.log_marginal >= init_lml - 1e-9);
    }

    #[test]
    fn f32_instantiation_predicts_reasonably() {
        let data = Dataset::<f32>::new(vec![vec![0.5f32]], vec![2.0], 0.1).unwrap();
        let spec = KernelSpec::isotropic(KernelKind::SquaredExponential, 1, 0.5f32);
        let model = posterior(&data, &spec).unwrap();
        let (m, v) = model.predict(&[0.5f32]).unwrap();
        assert!((m - 1.980_198f32).abs() < 1e-4);
        assert!((v - 0.009_901f32).abs() < 1e-4);
    }

    #[test]
    fn fit_needs_two_points() {
        let data = Dataset::new(vec![vec![0.0]], vec![1.0], 0.1).unwrap();
        assert!(fit_hyperparameters(
            &data,
            KernelKind::SquaredExponential,
            &FitConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .is_err());
    }
}
