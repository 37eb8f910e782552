use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => libm::tanh(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::Shape {
                context: "DenseLayer::new (bias vs weights)",
                left: (bias.len(), 1),
                right: weights.shape(),
            });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    /// Pre-activation `X·Wᵀ + b`.
    fn affine(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.in_dim() {
            return Err(Error::Shape {
                context: "layer_forward (input vs weights)",
                left: input.shape(),
                right: self.weights.shape(),
            });
        }
        let mut z = input.matmul_transposed(&self.weights)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(z)
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        let act = self.activation;
        let mut z = self.affine(input)?;
        for v in z.as_mut_slice() {
            *v = act.apply(*v);
        }
        Ok(z)
    }
}

/// Per-layer parameter gradients (or any tensor set shaped like the
/// parameters, such as optimizer velocity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LayerGrads {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            weights: Matrix::zeros(layer.out_dim(), layer.in_dim()),
            bias: vec![0.0; layer.out_dim()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.as_slice().iter().chain(self.bias.iter())
    }
}

/// Activations retained by [`Network::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Matrix,
    outputs: Vec<Matrix>,
    fingerprint: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.outputs.last().unwrap_or(&self.input)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Chain {
                    index: i,
                    next: i + 1,
                    out_dim: pair[0].out_dim(),
                    in_dim: pair[1].in_dim(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    /// Unit counts from the input through every layer's output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.layers.len() + 1);
        if let Some(first) = self.layers.first() {
            w.push(first.in_dim());
        }
        w.extend(self.layers.iter().map(DenseLayer::out_dim));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    fn fingerprint(&self) -> u64 {
        // FNV-1a over parameter bits
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for l in &self.layers {
            for x in l.weights.as_slice().iter().chain(&l.bias) {
                h ^= x.to_bits();
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        let mut outputs = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let prev = outputs.last().unwrap_or(input);
            outputs.push(layer.forward(prev)?);
        }
        let cache = ForwardCache {
            input: input.clone(),
            outputs,
            fingerprint: self.fingerprint(),
        };
        Ok((cache.output().clone(), cache))
    }

    /// Backpropagates `loss_grad` (d loss / d output) through the network.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &Matrix) -> Result<Vec<LayerGrads>> {
        if cache.outputs.len() != self.layers.len() {
            return Err(Error::StaleCache("layer count differs"));
        }
        if cache.fingerprint != self.fingerprint() {
            return Err(Error::StaleCache("parameters changed since forward"));
        }
        if loss_grad.shape() != cache.output().shape() {
            return Err(Error::Shape {
                context: "network_backward (loss gradient vs output)",
                left: loss_grad.shape(),
                right: cache.output().shape(),
            });
        }
        let mut grads: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());
        let mut delta = loss_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.outputs[i];
            for (d, &y) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                *d *= layer.activation.derivative_from_output(y);
            }
            let input = if i == 0 { &cache.input } else { &cache.outputs[i - 1] };
            let weights = delta.transposed_matmul(input)?;
            let mut bias = vec![0.0; layer.out_dim()];
            for row in delta.iter_rows() {
                for (b, d) in bias.iter_mut().zip(row) {
                    *b += d;
                }
            }
            grads.push(LayerGrads { weights, bias });
            if i > 0 {
                delta = delta.matmul(&layer.weights)?;
            }
        }
        grads.reverse();
        Ok(grads)
    }
}
