//! Monte Carlo validation of the union-bound coverage guarantee and the
//! consistency of the relaxed set as data accumulates.

use levelset::active::{active_learn, ActiveConfig, ContextSource, SearchConfig};
use levelset::dataset::Dataset;
use levelset::gp::posterior;
use levelset::kernel::{KernelKind, KernelSpec};
use levelset::linalg::{CholeskyFactor, SymMatrix};
use levelset::kernel::kernel_eval;
use levelset::scalar::Scalar;
use levelset::superlevel::{beta_union_bound, PiScheme, SuperLevelSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fraction of trials in which any of up to `t_picks` controls chosen by
/// `phi > beta*` violates the true constraint.
fn union_bound_violation_rate(trials: usize, seed: u64) -> f64 {
    let grid_n = 200usize;
    let grid: Vec<Vec<f64>> = (0..grid_n).map(|i| vec![i as f64 / (grid_n - 1) as f64]).collect();
    let spec = KernelSpec::isotropic(KernelKind::SquaredExponential, 1, 0.15);
    let zeta = 0.1f64;
    let t_picks = 10usize;
    let delta = 0.05f64;
    let beta_star: f64 = beta_union_bound(delta, 1, PiScheme::Uniform { total: t_picks }).unwrap();

    // Factor the grid Gram once; every trial draws one prior function.
    let gram = SymMatrix::from_fn(grid_n, |i, j| kernel_eval(&spec, &grid[i], &grid[j]).unwrap());
    let factor = CholeskyFactor::decompose(&gram).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violating_trials = 0usize;
    for _ in 0..trials {
        let z: Vec<f64> = (0..grid_n).map(|_| f64::sample_std_normal(&mut rng)).collect();
        let g = factor.mul_lower(&z);

        // Condition on 5 noisy observations at random grid sites.
        let mut pts = Vec::with_capacity(5);
        let mut ys = Vec::with_capacity(5);
        for _ in 0..5 {
            let i = rng.random_range(0..grid_n);
            pts.push(grid[i].clone());
            ys.push(g[i] + zeta * f64::sample_std_normal(&mut rng));
        }
        let data = Dataset::new(pts, ys, zeta).unwrap();
        let model = posterior(&data, &spec).unwrap();

        let mut picked = 0usize;
        let mut violated = false;
        for (i, x) in grid.iter().enumerate() {
            if picked == t_picks {
                break;
            }
            let (m, v) = model.predict(x).unwrap();
            let sigma = v.sqrt();
            if sigma <= 0.0 {
                continue;
            }
            if m / sigma > beta_star {
                picked += 1;
                if g[i] <= 0.0 {
                    violated = true;
                }
            }
        }
        if violated {
            violating_trials += 1;
        }
    }
    violating_trials as f64 / trials as f64
}

#[test]
fn union_bound_coverage_holds() {
    let rate = union_bound_violation_rate(300, 42);
    assert!(rate <= 0.07, "violation-trial rate {rate}");
}

#[test]
fn relaxed_set_grows_and_stays_inside_truth() {
    // Smooth 1-D oracle with super-level set (0.3, 0.8).
    let truth = |x: f64| (0.8 - x) * (x - 0.3) * 4.0;
    let quantile = 0.95;
    let budgets = [10usize, 25, 45];
    let seeds = 8u64;

    let mut mean_measures = vec![0.0f64; budgets.len()];
    let mut worst_violation = 0.0f64;
    for seed in 0..seeds {
        let mut cfg = ActiveConfig::new(KernelKind::SquaredExponential, 1, 0.05);
        cfg.refit_every = 8;
        cfg.fit.restarts = 1;
        cfg.fit.max_iters = 50;
        for (bi, &budget) in budgets.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
            let run = active_learn(
                |t: &[f64], _: &[f64]| Ok(truth(t[0]) + 0.0),
                &ContextSource::UniformIid { dim: 0 },
                budget,
                &cfg,
                None,
                &mut rng,
            )
            .unwrap();
            let model = posterior(&run.dataset, &run.fitted.spec).unwrap();
            let set = SuperLevelSet::build(
                model,
                vec![],
                quantile,
                &SearchConfig::default(),
                &mut rng,
            )
            .unwrap();
            let grid_n = 1000;
            let mut members = 0usize;
            let mut violations = 0usize;
            for i in 0..grid_n {
                let x = i as f64 / (grid_n - 1) as f64;
                if set.membership(&[x]) {
                    members += 1;
                    if truth(x) <= 0.0 {
                        violations += 1;
                    }
                }
            }
            mean_measures[bi] += members as f64 / grid_n as f64 / seeds as f64;
            if members > 0 {
                worst_violation = worst_violation.max(violations as f64 / members as f64);
            }
        }
    }
    assert!(
        mean_measures.windows(2).all(|w| w[1] >= w[0] - 0.02),
        "set measure not growing: {mean_measures:?}"
    );
    assert!(
        worst_violation <= (1.0 - quantile) + 0.03,
        "violation rate {worst_violation}"
    );
}
