//! Conditional central limit theorems under stochastic monotonicity.
//!
//! Closed-form Gaussian limits for occupancy counts, degree counts in
//! `G(n,p)` and `G(n,m)`, and uniform spacings; exact samplers for the
//! finite models; a seeded Monte Carlo harness that gates estimates
//! against the limits; exact stochastic-dominance checks; and a
//! characteristic-function bench for the one-sided Cramér–Wold question.

pub mod cli;
pub mod cwold;
pub mod gauss_cond;
pub mod limit_theory;
pub mod mc_engine;
pub mod monotone;
pub mod rng;
pub mod simulators;
pub mod transfer;

pub use gauss_cond::{condition_on_scalar, condition_on_vector, ConditionalGaussian, GaussError, JointGaussian};
pub use limit_theory::{CovModel, LimitError, TheoryCovariance};
pub use mc_engine::{run_experiment, Experiment, McError, Model, RunOptions, VerificationReport};
