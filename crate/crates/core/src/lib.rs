//! Overcomplete denoising-autoencoder multiple imputation for tabular data.
//!
//! This crate is `no_std` (it needs `alloc`) and holds every numerical piece
//! of the toolkit:
//!
//! - [`nn`]: a small dense feed-forward engine (forward, backward, MSE loss,
//!   Nesterov momentum with a time-decayed learning rate, gradient checking).
//! - [`dae`]: the overcomplete autoencoder, input corruption, training with
//!   early stopping and reconstruction.
//! - [`data`]: typed tables with a missingness mask, `[0,1]` encoding and
//!   decoding, placeholder fill and train/test splitting.
//! - [`missingness`]: MCAR/MNAR × uniform/random induction procedures.
//! - [`mi`]: k independently initialised imputation runs and pooling.
//! - [`metrics`]: per-attribute RMSE sums, error ratios and summary tables.
//! - [`baselines`]: mean/mode and chained-equations predictive mean matching.
//! - [`downstream`]: repeated k-fold k-NN evaluation of completed tables.
//!
//! File formats, the CLI and thread-level parallelism live in the
//! `imputekit` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod dae;
pub mod data;
pub mod downstream;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod mi;
pub mod missingness;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
pub use matrix::Matrix;
