//! Sharpness-aware Bayesian inference for small dense networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`diffcore`]: dense tensors, a reverse-mode tape and finite-difference oracles.
//! - [`models`]: MLP definitions, flat parameter vectors, Gaussian posteriors and the
//!   stochastic forward passes (weight sampling, local reparameterization, dropout).
//! - [`flatness`]: SAM perturbations with an optional diagonal geometry, the sharpness
//!   metric, discrete Gibbs posteriors and the PAC-Bayes bound evaluator.
//! - [`trainers`]: SGVB, SGVB-LRT, SGLD, SWAG, MC-dropout and deep ensembles, each in a
//!   plain and a sharpness-aware ("flat") variant.
//! - [`eval`]: ensemble prediction, accuracy, NLL, ECE with reliability tables and Hessian
//!   eigenvalue estimates.
//! - [`data`]: synthetic generators, CSV loading and deterministic splits.
//!
//! All arithmetic is `f64` and every random draw comes from a seeded ChaCha stream, so runs
//! are bitwise reproducible.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod diffcore;
pub mod error;
pub mod eval;
pub mod flatness;
pub mod models;
pub mod rng;
pub mod trainers;

pub use error::{Error, Result};
