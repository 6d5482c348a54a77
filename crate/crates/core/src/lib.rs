//! GP-based active learning of skill-success constraints and risk-aware,
//! adaptive, diversity-aware sampling from the learned high-probability
//! super-level sets.
//!
//! The pipeline, end to end:
//!
//! 1. [`gp`] fits a Gaussian process to scored executions of a skill.
//! 2. [`active`] drives data collection with the straddle acquisition rule,
//!    which concentrates evaluations near the zero boundary of the score.
//! 3. [`superlevel`] turns the posterior into a high-probability super-level
//!    set: the region where the confidence ratio `mean/std` clears a
//!    threshold calibrated from a union bound or a quantile relaxation.
//! 4. [`adaptive`] and [`diverse`] sample streams of parameters from that
//!    set: a truncated-Gaussian-mixture proposal with importance reweighting,
//!    optionally reordered for diversity through a DPP-style criterion, with
//!    feature-importance kernel updates driven by planner feedback.
//! 5. [`bench`] and [`harness`] provide synthetic scoring oracles, a mock
//!    plan-skeleton planner, and the sampler metrics used to compare
//!    strategies.
//!
//! The numeric core is generic over the scalar type via [`scalar::Scalar`];
//! the `f64` aliases below are what the experiments and CLI use.

pub mod active;
pub mod adaptive;
pub mod bench;
pub mod dataset;
pub mod diverse;
pub mod error;
pub mod gp;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod normal;
pub mod optim;
pub mod scalar;
pub mod seed;
pub mod space;
pub mod superlevel;
pub mod tgmm;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` aliases for the main types; the concrete instantiation used by the
/// experiment harness and CLI.
pub type KernelSpec = kernel::KernelSpec<f64>;
pub type Dataset = dataset::Dataset<f64>;
pub type GpModel = gp::GpModel<f64>;
pub type ParameterSpace = space::ParameterSpace<f64>;
pub type SuperLevelSet = superlevel::SuperLevelSet<f64>;
pub type Tgmm = tgmm::Tgmm<f64>;
pub type DiversityKernel = diverse::DiversityKernel<f64>;

