//! Sparse linear regression by sequential thresholding least squares (STLS),
//! bagging-inclusion-probability (BIP) ensemble selection with optional
//! out-of-bag weighting, residual-bootstrap uncertainty quantification, a
//! spike-and-slab Gibbs reference sampler, closed-form selection-probability
//! bound evaluators, and seeded data generators for synthetic regression and
//! Lotka-Volterra dynamical-system discovery.
//!
//! The crate is `no_std` (with `alloc`): every operation is a pure function
//! of its inputs and a 64-bit seed, so results are reproducible across
//! platforms and thread schedules. IO, file formats and the experiment
//! harness live in the companion `bipstls-cli` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bayes;
pub mod bounds;
pub mod datagen;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod metrics;
pub mod regression;
pub mod rng;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
