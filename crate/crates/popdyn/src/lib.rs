//! Event-driven simulation, stationary analysis, and calibration of a
//! jump-decay popularity model.
//!
//! Each influencer carries a latent popularity `X(t)` that decays
//! exponentially at rate `gamma` and jumps when the influencer posts
//! (state-dependent intensity `lambda0 + lambda1·x^phi`) or when an
//! exogenous event arrives (Poisson rate `mu`). Post jumps scale as
//! `(epsilon + beta·x^theta)·V̂` with a unit-mean multiplier `V̂`.
//!
//! The crate provides:
//! - [`model`]: parameter types, jump-size families, ergodicity check;
//! - [`sim`]: exact event-driven Monte Carlo (thinning-based inter-jump
//!   sampler), leadership metrics, occupation-time histograms;
//! - [`solver`]: stationary level-crossing fixed point and a transient
//!   distribution evolver on log grids;
//! - [`calib`]: popularity reconstruction and distribution fitting
//!   from post logs;
//! - [`scenario`] / [`harness`]: configuration, experiment
//!   orchestration, sweeps, and reporting (also exposed through the
//!   `popdyn` CLI).

pub mod calib;
pub mod harness;
pub mod model;
pub mod scenario;
pub mod sim;
pub mod solver;

// The guide chapters double as doc-tests so their snippets stay
// compilable.
#[doc = include_str!("../../../book/src/model.md")]
mod book_model {}
#[doc = include_str!("../../../book/src/simulation.md")]
mod book_simulation {}
#[doc = include_str!("../../../book/src/stationary.md")]
mod book_stationary {}
#[doc = include_str!("../../../book/src/calibration.md")]
mod book_calibration {}
#[doc = include_str!("../../../book/src/experiments.md")]
mod book_experiments {}
