//! Minimal dense feed-forward network engine.
//!
//! Inputs are matrix rows; a layer with weights `W` (`out × in`), bias `b`
//! and activation `s` maps a batch `X` to `s(X·Wᵀ + b)`.

mod gradcheck;
mod layer;
mod loss;
mod optim;

pub use gradcheck::{compare_gradients, gradient_check, GradCheckReport};
pub use layer::{Activation, DenseLayer, ForwardCache, LayerGrads, Network};
pub use loss::mse_loss;
pub use optim::{nesterov_step, NesterovConfig, OptimizerState};

use rand::Rng;

use crate::matrix::Matrix;

/// Default half-width of the uniform initialisation interval.
pub fn glorot_range(fan_in: usize, fan_out: usize) -> f64 {
    libm::sqrt(6.0 / (fan_in + fan_out) as f64)
}

/// `out × in` matrix drawn uniformly from `[-range, range]`; the Glorot
/// range is used when `range` is `None`.
pub fn uniform_weights<R: Rng + ?Sized>(
    out_dim: usize,
    in_dim: usize,
    range: Option<f64>,
    rng: &mut R,
) -> Matrix {
    let r = range.unwrap_or_else(|| glorot_range(in_dim, out_dim));
    let mut w = Matrix::zeros(out_dim, in_dim);
    for x in w.as_mut_slice() {
        *x = if r > 0.0 { rng.gen_range(-r..=r) } else { 0.0 };
    }
    w
}
