//! Synthetic scoring oracles that stand in for the robot simulators.
//!
//! A task composes a score-shaping function with an analytic latent
//! success-fraction field over `(theta, alpha)`. The field is 1 at the
//! center of a feasible region whose placement is affine in the context,
//! decays smoothly to 0 outside, and optionally carries additive Gaussian
//! noise. Ground-truth membership is exposed separately for evaluation and
//! is never visible to learners.


use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// Score-shaping functions. The fraction shapes map a success fraction
/// `x in [0,1]` to a score; the push shape scores an outcome point by its
/// distance to a goal.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreShape<S> {
    /// `exp(2 (10x - 9.5)) - 1`; crosses zero at x = 0.95.
    Pour2D,
    /// `x - 0.5`; crosses zero at x = 0.5.
    Scoop2D,
    /// `2 - |x - goal|`; crosses zero at distance 2 from the goal.
    Push { goal: Vec<S> },
    /// Piecewise linear with threshold `tau`: `-1 + x/tau` below,
    /// `(x - tau)/(1 - tau)` above.
    Piecewise { tau: S },
}

impl<S: Scalar> ScoreShape<S> {
    /// The success fraction at which the composed score crosses zero.
    /// For the push shape this is the fraction the synthetic outcome map
    /// sends to distance 2 (see [`SyntheticTask`]); fixed at 0.5.
    pub fn zero_fraction(&self) -> S {
        match self {
            ScoreShape::Pour2D => S::from_f64(0.95),
            ScoreShape::Scoop2D => S::from_f64(0.5),
            ScoreShape::Push { .. } => S::from_f64(0.5),
            ScoreShape::Piecewise { tau } => *tau,
        }
    }
}

/// Input to [`shape_score`]: a success fraction or an outcome point.
#[derive(Debug, Clone, Copy)]
pub enum ShapeInput<'a, S> {
    Fraction(S),
    Point(&'a [S]),
}

/// Evaluate a score shape at a fraction (or outcome point, for push).
pub fn shape_score<S: Scalar>(shape: &ScoreShape<S>, x: ShapeInput<'_, S>) -> Result<S> {
    match (shape, x) {
        (ScoreShape::Pour2D, ShapeInput::Fraction(x)) => {
            check_fraction(x)?;
            Ok((S::from_f64(2.0) * (S::from_f64(10.0) * x - S::from_f64(9.5))).exp() - S::one())
        }
        (ScoreShape::Scoop2D, ShapeInput::Fraction(x)) => {
            check_fraction(x)?;
            Ok(x - S::from_f64(0.5))
        }
        (ScoreShape::Piecewise { tau }, ShapeInput::Fraction(x)) => {
            check_fraction(x)?;
            if x <= *tau {
                Ok(-S::one() + x / *tau)
            } else {
                Ok((x - *tau) / (S::one() - *tau))
            }
        }
        (ScoreShape::Push { goal }, ShapeInput::Point(p)) => {
            check_dim(goal.len(), p.len())?;
            let dist = crate::scalar::sq_dist(goal, p).sqrt();
            Ok(S::from_f64(2.0) - dist)
        }
        (ScoreShape::Push { .. }, ShapeInput::Fraction(_)) => Err(Error::InvalidArgument(
            "push shape scores an outcome point, not a fraction".into(),
        )),
        (_, ShapeInput::Point(_)) => Err(Error::InvalidArgument(
            "fraction shapes score a scalar fraction".into(),
        )),
    }
}

fn check_fraction<S: Scalar>(x: S) -> Result<()> {
    if x >= S::zero() && x <= S::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "fraction input must lie in [0,1], got {x}"
        )))
    }
}

/// Analytic feasible-region families.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleRegion<S> {
    /// Ball whose center moves affinely with the context:
    /// `c_i = 0.5 + shift * (alpha_{i mod d_alpha} - 0.5)`.
    Ellipsoid { radius: S, center_shift: S },
    /// Union of axis-aligned boxes (lo, hi), each with a linear falloff
    /// band of width `margin` outside.
    BoxUnion {
        boxes: Vec<(Vec<S>, Vec<S>)>,
        margin: S,
    },
}

/// A synthetic scoring task over the unit control box.
#[derive(Debug, Clone)]
pub struct SyntheticTask<S> {
    pub d_theta: usize,
    pub d_alpha: usize,
    pub region: FeasibleRegion<S>,
    pub shape: ScoreShape<S>,
    /// Additive Gaussian noise on the latent fraction.
    pub noise_std: S,
    /// Seed for the deterministic noise; the oracle is a pure function of
    /// `(theta, alpha, noise_seed)`.
    pub noise_seed: u64,
}

/// Unit-ball volumes for dimensions 1..=8.
fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        5 => 8.0 * PI * PI / 15.0,
        6 => PI.powi(3) / 6.0,
        7 => 16.0 * PI.powi(3) / 105.0,
        8 => PI.powi(4) / 24.0,
        _ => panic!("unit ball volume tabulated for d <= 8"),
    }
}

impl<S: Scalar> SyntheticTask<S> {
    /// Ellipsoid task sized so the true super-level set occupies
    /// `volume_fraction` of the box. Fails when the region cannot fit
    /// inside the box for every context.
    pub fn ellipsoid(
        d_theta: usize,
        d_alpha: usize,
        shape: ScoreShape<S>,
        volume_fraction: S,
        center_shift: S,
        noise_std: S,
        noise_seed: u64,
    ) -> Result<Self> {
        if !(volume_fraction > S::zero() && volume_fraction < S::one()) {
            return Err(Error::InvalidArgument(
                "volume_fraction must be in (0,1)".into(),
            ));
        }
        let t = shape.zero_fraction().as_f64();
        let vol = volume_fraction.as_f64();
        // The set {fraction > t} is the ball of radius r_t = radius*sqrt(1-t);
        // choose radius so its volume hits the target.
        let r_t = (vol / unit_ball_volume(d_theta)).powf(1.0 / d_theta as f64);
        let radius = r_t / (1.0 - t).sqrt();
        let max_shift = 0.5 * center_shift.as_f64();
        if r_t + max_shift > 0.5 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "region of radius {r_t:.3} with center shift {max_shift:.3} does not fit the box"
            )));
        }
        Ok(SyntheticTask {
            d_theta,
            d_alpha,
            region: FeasibleRegion::Ellipsoid {
                radius: S::from_f64(radius),
                center_shift,
            },
            shape,
            noise_std,
            noise_seed,
        })
    }

    /// Pouring analog: 4 control and 4 context dimensions by default.
    pub fn pour_analog(volume_fraction: S, noise_std: S, noise_seed: u64) -> Result<Self> {
        Self::ellipsoid(
            4,
            4,
            ScoreShape::Pour2D,
            volume_fraction,
            S::from_f64(0.2),
            noise_std,
            noise_seed,
        )
    }

    /// Scooping analog: 7 control and 2 context dimensions.
    pub fn scoop_analog(volume_fraction: S, noise_std: S, noise_seed: u64) -> Result<Self> {
        Self::ellipsoid(
            7,
            2,
            ScoreShape::Scoop2D,
            volume_fraction,
            S::from_f64(0.05),
            noise_std,
            noise_seed,
        )
    }

    /// Pushing analog over two unequal feasible boxes; the downstream
    /// obstacle logic lives in the harness.
    pub fn two_box_push(
        boxes: Vec<(Vec<S>, Vec<S>)>,
        d_alpha: usize,
        noise_std: S,
        noise_seed: u64,
    ) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidArgument("need at least one box".into()));
        }
        let d_theta = boxes[0].0.len();
        for (lo, hi) in &boxes {
            check_dim(d_theta, lo.len())?;
            check_dim(d_theta, hi.len())?;
            if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return Err(Error::InvalidArgument("box needs lo < hi".into()));
            }
        }
        Ok(SyntheticTask {
            d_theta,
            d_alpha,
            region: FeasibleRegion::BoxUnion {
                boxes,
                margin: S::from_f64(0.05),
            },
            shape: ScoreShape::Push {
                goal: vec![S::zero(); 2],
            },
            noise_std,
            noise_seed,
        })
    }

    pub fn zero_fraction(&self) -> S {
        self.shape.zero_fraction()
    }

    fn region_center(&self, alpha: &[S]) -> Vec<S> {
        match &self.region {
            FeasibleRegion::Ellipsoid { center_shift, .. } => (0..self.d_theta)
                .map(|i| {
                    let half = S::from_f64(0.5);
                    if alpha.is_empty() {
                        half
                    } else {
                        half + *center_shift * (alpha[i % alpha.len()] - half)
                    }
                })
                .collect(),
            FeasibleRegion::BoxUnion { boxes, .. } => {
                // Center of the largest box; contexts do not move it.
                let (lo, hi) = boxes
                    .iter()
                    .max_by(|a, b| {
                        box_volume(a).partial_cmp(&box_volume(b)).unwrap()
                    })
                    .unwrap();
                lo.iter()
                    .zip(hi)
                    .map(|(&a, &b)| (a + b) / S::from_f64(2.0))
                    .collect()
            }
        }
    }

    /// Noise-free latent fraction: 1 at the region center, smooth decay
    /// to 0 outside.
    pub fn latent_fraction_noiseless(&self, theta: &[S], alpha: &[S]) -> Result<S> {
        check_dim(self.d_theta, theta.len())?;
        check_dim(self.d_alpha, alpha.len())?;
        Ok(match &self.region {
            FeasibleRegion::Ellipsoid { radius, .. } => {
                let c = self.region_center(alpha);
                let rho2 = crate::scalar::sq_dist(theta, &c) / (*radius * *radius);
                (S::one() - rho2).max(S::zero())
            }
            FeasibleRegion::BoxUnion { boxes, margin } => boxes
                .iter()
                .map(|(lo, hi)| {
                    theta
                        .iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(&x, (&a, &b))| {
                            let out = if x < a { a - x } else if x > b { x - b } else { S::zero() };
                            (S::one() - out / *margin).max(S::zero())
                        })
                        .fold(S::one(), |acc, v| acc.min(v))
                })
                .fold(S::zero(), |acc, v| acc.max(v)),
        })
    }

    /// Latent fraction with deterministic noise from the task seed.
    pub fn latent_fraction(&self, theta: &[S], alpha: &[S]) -> Result<S> {
        let clean = self.latent_fraction_noiseless(theta, alpha)?;
        if self.noise_std == S::zero() {
            return Ok(clean);
        }
        let mut rng = seed::derive_rng(self.noise_seed, hash_query(theta, alpha));
        let noisy = clean + self.noise_std * S::sample_std_normal(&mut rng);
        Ok(noisy.max(S::zero()).min(S::one()))
    }

    fn score_from_fraction(&self, fraction: S) -> Result<S> {
        match &self.shape {
            ScoreShape::Push { goal } => {
                // Synthetic outcome: the object lands on a ray from the
                // goal, at distance 2/(1 - t) * (1 - fraction), so the score
                // crosses zero exactly at fraction = t.
                let t = self.zero_fraction();
                let d_max = S::from_f64(2.0) / (S::one() - t);
                let mut outcome = goal.clone();
                outcome[0] += d_max * (S::one() - fraction);
                shape_score(&self.shape, ShapeInput::Point(&outcome))
            }
            _ => shape_score(&self.shape, ShapeInput::Fraction(fraction)),
        }
    }

    /// The noisy scoring oracle the learner sees.
    pub fn score(&self, theta: &[S], alpha: &[S]) -> Result<S> {
        self.score_from_fraction(self.latent_fraction(theta, alpha)?)
    }

    /// Noise-free score; evaluation only.
    pub fn true_score(&self, theta: &[S], alpha: &[S]) -> Result<S> {
        self.score_from_fraction(self.latent_fraction_noiseless(theta, alpha)?)
    }

    /// Ground-truth membership in the true super-level set; evaluation
    /// only, never shown to learners.
    pub fn true_member(&self, theta: &[S], alpha: &[S]) -> bool {
        self.true_score(theta, alpha)
            .map(|s| s > S::zero())
            .unwrap_or(false)
    }
}

fn box_volume<S: Scalar>((lo, hi): &(Vec<S>, Vec<S>)) -> S {
    lo.iter().zip(hi).map(|(&a, &b)| b - a).fold(S::one(), |p, w| p * w)
}

fn hash_query<S: Scalar>(theta: &[S], alpha: &[S]) -> u64 {
    let mut h = 0xcbf29ce484222325u64; // FNV offset basis
    for v in theta.iter().chain(alpha) {
        let bits = v.as_f64().to_bits();
        h ^= bits;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The scoring oracle as a closure, in the shape the training loop expects.
pub fn task_oracle<S: Scalar>(
    task: &SyntheticTask<S>,
) -> impl Fn(&[S], &[S]) -> std::result::Result<S, String> + '_ {
    move |theta, alpha| task.score(theta, alpha).map_err(|e| e.to_string())
}
