use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{LayerGrads, Network};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NesterovConfig {
    pub momentum: f64,
    pub learning_rate: f64,
    /// Per-epoch multiplicative learning-rate decay.
    pub decay: f64,
}

impl Default for NesterovConfig {
    fn default() -> Self {
        Self {
            momentum: 0.9,
            learning_rate: 0.01,
            decay: 0.99,
        }
    }
}

impl NesterovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param("momentum", "must lie in [0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive and finite"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::param("decay", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// `η₀ · decayᵉ`.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * libm::pow(self.decay, epoch as f64)
    }
}

/// One lookahead Nesterov update on flat buffers.
///
/// `grads` must be evaluated at `params + momentum · velocity`:
/// `v ← μv − η·g`, `θ ← θ + v`.
pub fn nesterov_step(params: &mut [f64], grads: &[f64], velocity: &mut [f64], momentum: f64, lr: f64) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), velocity.len());
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v - lr * g;
        *p += *v;
    }
}

/// Velocity buffers for a whole network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: NesterovConfig,
    velocity: Vec<LayerGrads>,
}

impl OptimizerState {
    pub fn new(config: NesterovConfig, net: &Network) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            velocity: net.layers().iter().map(LayerGrads::zeros_like).collect(),
        })
    }

    pub fn velocity(&self) -> &[LayerGrads] {
        &self.velocity
    }

    /// The point `θ + μv` at which the next gradient is evaluated.
    pub fn lookahead(&self, net: &Network) -> Network {
        let mu = self.config.momentum;
        let mut ahead = net.clone();
        for (layer, v) in ahead.layers_mut().iter_mut().zip(&self.velocity) {
            for (w, dv) in layer.weights.as_mut_slice().iter_mut().zip(v.weights.as_slice()) {
                *w += mu * dv;
            }
            for (b, dv) in layer.bias.iter_mut().zip(&v.bias) {
                *b += mu * dv;
            }
        }
        ahead
    }

    /// Applies one update with the learning rate for `epoch`. `grads` come
    /// from [`OptimizerState::lookahead`]'s network.
    pub fn step(&mut self, net: &mut Network, grads: &[LayerGrads], epoch: usize) -> Result<()> {
        if grads.len() != self.velocity.len() || net.layers().len() != self.velocity.len() {
            return Err(Error::Shape {
                context: "nesterov_step (gradient tensors vs parameters)",
                left: (grads.len(), 1),
                right: (self.velocity.len(), 1),
            });
        }
        if !grads.iter().all(LayerGrads::is_finite) {
            return Err(Error::Divergence {
                epoch,
                what: "gradient",
            });
        }
        let lr = self.config.learning_rate_at(epoch);
        let mu = self.config.momentum;
        for ((layer, g), v) in net.layers_mut().iter_mut().zip(grads).zip(&mut self.velocity) {
            if g.weights.shape() != layer.weights.shape() || g.bias.len() != layer.bias.len() {
                return Err(Error::Shape {
                    context: "nesterov_step (gradient vs parameter)",
                    left: g.weights.shape(),
                    right: layer.weights.shape(),
                });
            }
            nesterov_step(
                layer.weights.as_mut_slice(),
                g.weights.as_slice(),
                v.weights.as_mut_slice(),
                mu,
                lr,
            );
            nesterov_step(&mut layer.bias, &g.bias, &mut v.bias, mu, lr);
        }
        if !net.is_finite() {
            return Err(Error::Divergence {
                epoch,
                what: "parameter",
            });
        }
        Ok(())
    }
}
