//! Derivative-free local minimization (Nelder-Mead downhill simplex).
//!
//! Used for the marginal-likelihood maximization in log-hyperparameter
//! space; robust to the non-smooth spots the MLP kernel can produce.

use crate::scalar::Scalar;

pub struct NelderMead<S> {
    pub max_iters: usize,
    pub ftol: S,
}

impl<S: Scalar> Default for NelderMead<S> {
    fn default() -> Self {
        NelderMead {
            max_iters: 200,
            ftol: S::from_f64(1e-8),
        }
    }
}

impl<S: Scalar> NelderMead<S> {
    /// Minimize `f` starting from `x0`. `step` sets the initial simplex
    /// spread per coordinate. Returns the best point and value seen.
    pub fn minimize(&self, mut f: impl FnMut(&[S]) -> S, x0: &[S], step: S) -> (Vec<S>, S) {
        let n = x0.len();
        let mut simplex: Vec<Vec<S>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] += step;
            simplex.push(v);
        }
        let mut values: Vec<S> = simplex.iter().map(|v| f(v)).collect();

        let (alpha, gamma, rho, sigma) = (
            S::one(),
            S::from_f64(2.0),
            S::from_f64(0.5),
            S::from_f64(0.5),
        );

        for _ in 0..self.max_iters {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
            let best = order[0];
            let worst = order[n];
            let second_worst = order[n.saturating_sub(1)];

            if (values[worst] - values[best]).abs()
                <= self.ftol * (S::one() + values[best].abs())
            {
                break;
            }

            // Centroid of all but the worst vertex.
            let mut centroid = vec![S::zero(); n];
            for (i, v) in simplex.iter().enumerate() {
                if i == worst {
                    continue;
                }
                for (c, &x) in centroid.iter_mut().zip(v) {
                    *c += x;
                }
            }
            let inv = S::one() / S::from_usize(n);
            for c in &mut centroid {
                *c *= inv;
            }

            let reflect: Vec<S> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| c + alpha * (c - w))
                .collect();
            let f_reflect = f(&reflect);

            if f_reflect < values[best] {
                let expand: Vec<S> = centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(&c, &r)| c + gamma * (r - c))
                    .collect();
                let f_expand = f(&expand);
                if f_expand < f_reflect {
                    simplex[worst] = expand;
                    values[worst] = f_expand;
                } else {
                    simplex[worst] = reflect;
                    values[worst] = f_reflect;
                }
            } else if f_reflect < values[second_worst] {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            } else {
                let contract: Vec<S> = centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(&c, &w)| c + rho * (w - c))
                    .collect();
                let f_contract = f(&contract);
                if f_contract < values[worst] {
                    simplex[worst] = contract;
                    values[worst] = f_contract;
                } else {
                    // Shrink toward the best vertex.
                    let best_point = simplex[best].clone();
                    for i in 0..=n {
                        if i == best {
                            continue;
                        }
                        for (x, &b) in simplex[i].iter_mut().zip(&best_point) {
                            *x = b + sigma * (*x - b);
                        }
                        values[i] = f(&simplex[i]);
                    }
                }
            }
        }

        let mut best = 0;
        for i in 1..=n {
            if values[i] < values[best] {
                best = i;
            }
        }
        (simplex[best].clone(), values[best])
    }
}
