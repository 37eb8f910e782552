use alloc::vec::Vec;

use super::{mse_loss, LayerGrads, Network};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic − numeric| / max(|analytic|, |numeric|, 1e-12)`.
    pub max_relative_error: f64,
    /// `(layer, flat parameter index)` of the worst entry; biases follow
    /// the weights in the flat index.
    pub worst: (usize, usize),
    pub params_checked: usize,
}

/// Backpropagated gradients of the unmasked MSE vs central differences.
pub fn gradient_check(net: &Network, input: &Matrix, target: &Matrix, eps: f64) -> Result<GradCheckReport> {
    let (pred, cache) = net.forward(input)?;
    let (_, g) = mse_loss(&pred, target, None)?;
    let grads = net.backward(&cache, &g)?;
    compare_gradients(net, input, target, eps, &grads)
}

/// Compares caller-supplied `analytic` gradients against the fourth-order
/// central difference
/// `(f(θ−2ε) − 8f(θ−ε) + 8f(θ+ε) − f(θ+2ε)) / 12ε`.
pub fn compare_gradients(
    net: &Network,
    input: &Matrix,
    target: &Matrix,
    eps: f64,
    analytic: &[LayerGrads],
) -> Result<GradCheckReport> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", "must be positive"));
    }
    if analytic.len() != net.layers().len() {
        return Err(Error::StaleCache("gradient count differs from layer count"));
    }
    let loss = |n: &Network| -> Result<f64> { Ok(mse_loss(&n.predict(input)?, target, None)?.0) };

    let mut probe = net.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (0, 0),
        params_checked: 0,
    };
    for (li, g) in analytic.iter().enumerate() {
        let analytic_flat: Vec<f64> = g.iter().copied().collect();
        let n_weights = net.layers()[li].weights.as_slice().len();
        if analytic_flat.len() != net.layers()[li].param_count() {
            return Err(Error::StaleCache("gradient shape differs from layer"));
        }
        for (pi, &a) in analytic_flat.iter().enumerate() {
            let original = param(&probe, li, pi, n_weights);
            let mut at = |offset: f64| -> Result<f64> {
                set_param(&mut probe, li, pi, n_weights, original + offset);
                loss(&probe)
            };
            let (m2, m1, p1, p2) = (at(-2.0 * eps)?, at(-eps)?, at(eps)?, at(2.0 * eps)?);
            set_param(&mut probe, li, pi, n_weights, original);
            let numeric = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * eps);
            let denom = libm::fabs(a).max(libm::fabs(numeric)).max(1e-12);
            let rel = libm::fabs(a - numeric) / denom;
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = (li, pi);
            }
            report.params_checked += 1;
        }
    }
    Ok(report)
}

fn param(net: &Network, layer: usize, idx: usize, n_weights: usize) -> f64 {
    let l = &net.layers()[layer];
    if idx < n_weights {
        l.weights.as_slice()[idx]
    } else {
        l.bias[idx - n_weights]
    }
}

fn set_param(net: &mut Network, layer: usize, idx: usize, n_weights: usize, v: f64) {
    let l = &mut net.layers_mut()[layer];
    if idx < n_weights {
        l.weights.as_mut_slice()[idx] = v;
    } else {
        l.bias[idx - n_weights] = v;
    }
}
