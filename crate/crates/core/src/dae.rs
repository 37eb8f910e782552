//! Overcomplete denoising autoencoder.
//!
//! The encoder widens the input by `theta` units per hidden layer and the
//! decoder mirrors it back, e.g. `[n, n+Θ, n+2Θ, n+3Θ, n+2Θ, n+Θ, n]` for
//! the default depth of three. Hidden layers use tanh; the output layer is
//! linear and reconstructions are clipped to `[0,1]`.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::EncodedMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{mse_loss, uniform_weights, Activation, DenseLayer, NesterovConfig, Network, OptimizerState};
use crate::rng::{self, Stream};

pub const DEFAULT_THETA: usize = 7;
pub const DEFAULT_ENCODER_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaeArchitecture {
    pub input_dim: usize,
    pub theta: usize,
    pub encoder_depth: usize,
}

impl DaeArchitecture {
    pub fn new(input_dim: usize, theta: usize) -> Self {
        Self {
            input_dim,
            theta,
            encoder_depth: DEFAULT_ENCODER_DEPTH,
        }
    }

    /// Unit counts from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let n = self.input_dim;
        let up = (0..=self.encoder_depth).map(|k| n + k * self.theta);
        let down = (0..self.encoder_depth).rev().map(|k| n + k * self.theta);
        up.chain(down).collect()
    }
}

/// Builds an untrained network for `arch`. Weights are uniform on
/// `[-r, r]` (Glorot range unless `init_range` is given), biases zero.
pub fn build(arch: &DaeArchitecture, init_range: Option<f64>, seed: u64) -> Result<Network> {
    if arch.input_dim == 0 {
        return Err(Error::EmptySchema);
    }
    if arch.encoder_depth == 0 {
        return Err(Error::param("encoder_depth", "must be at least 1"));
    }
    let widths = arch.widths();
    let mut rng = rng::stream(seed, Stream::Init);
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i == last { Activation::Identity } else { Activation::Tanh };
            let weights = uniform_weights(w[1], w[0], init_range, &mut rng);
            DenseLayer::new(weights, alloc::vec![0.0; w[1]], act)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

/// Default-depth autoencoder with `n` inputs and `theta` extra units per
/// hidden layer.
pub fn build_dae(n: usize, theta: usize, seed: u64) -> Result<Network> {
    build(&DaeArchitecture::new(n, theta), None, seed)
}

/// Zeroes each entry independently with probability `dropout`.
pub fn corrupt<R: Rng + ?Sized>(input: &Matrix, dropout: f64, rng: &mut R) -> Matrix {
    let mut out = input.clone();
    if dropout <= 0.0 {
        return out;
    }
    for x in out.as_mut_slice() {
        if rng.gen::<f64>() < dropout {
            *x = 0.0;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub input_dropout: f64,
    pub target_mse: f64,
    pub sma_window: usize,
    /// Mini-batch size, capped at the row count.
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: NesterovConfig,
    /// Exclude missing (placeholder) entries from the reconstruction loss.
    pub observed_loss_only: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            input_dropout: 0.5,
            target_mse: 1e-6,
            sma_window: 5,
            batch_size: 32,
            seed: 0,
            optimizer: NesterovConfig::default(),
            observed_loss_only: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.input_dropout) {
            return Err(Error::param("input_dropout", "must lie in [0, 1)"));
        }
        if !(self.target_mse > 0.0) {
            return Err(Error::param("target_mse", "must be positive"));
        }
        if self.sma_window < 2 {
            return Err(Error::param("sma_window", "must be at least 2"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be at least 1"));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    EpochBudget,
    TargetMse,
    SmaStall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub losses: Vec<f64>,
    pub stop_reason: StopReason,
    pub epochs_run: usize,
}

/// `true` once the mean of the last `window` loss improvements is `<= 0`.
/// The mean telescopes to `(loss[e-window] − loss[e]) / window`.
fn sma_stalled(losses: &[f64], window: usize) -> bool {
    let e = losses.len() - 1;
    if e < window {
        return false;
    }
    let improvements: f64 = (e + 1 - window..=e).map(|i| losses[i - 1] - losses[i]).sum();
    improvements / window as f64 <= 0.0
}

/// Trains on placeholder-filled encoded data: every batch is corrupted
/// afresh and the loss is measured against the clean batch.
pub fn train_dae(net: Network, data: &EncodedMatrix, cfg: &TrainConfig) -> Result<(Network, TrainHistory)> {
    let weights = cfg.observed_loss_only.then(|| data.observed_weights());
    train_on_matrix(net, &data.values, weights.as_ref(), cfg)
}

/// [`train_dae`] on a bare matrix, with optional per-entry loss weights.
pub fn train_on_matrix(
    mut net: Network,
    data: &Matrix,
    loss_weights: Option<&Matrix>,
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory)> {
    cfg.validate()?;
    if data.cols() != net.input_dim() {
        return Err(Error::Shape {
            context: "train_dae (data vs network input)",
            left: data.shape(),
            right: (data.rows(), net.input_dim()),
        });
    }
    if data.rows() == 0 {
        return Err(Error::TooSmall {
            what: "training rows",
            needed: 1,
            found: 0,
        });
    }
    if !data.as_slice().iter().all(|x| (0.0..=1.0).contains(x)) {
        return Err(Error::param("data", "encoded values must lie in [0, 1]"));
    }

    let mut rng = rng::stream(cfg.seed, Stream::Train);
    let mut opt = OptimizerState::new(cfg.optimizer, &net)?;
    let batch = cfg.batch_size.min(data.rows());
    let mut order: Vec<usize> = (0..data.rows()).collect();
    let mut losses = Vec::new();
    let mut stop = StopReason::EpochBudget;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut seen) = (0.0, 0.0);
        for idx in order.chunks(batch) {
            let clean = data.select_rows(idx);
            let w = loss_weights.map(|m| m.select_rows(idx));
            if w.as_ref().is_some_and(|m| m.as_slice().iter().all(|&x| x == 0.0)) {
                continue;
            }
            let noisy = corrupt(&clean, cfg.input_dropout, &mut rng);
            let ahead = opt.lookahead(&net);
            let (pred, cache) = ahead.forward(&noisy)?;
            let (loss, grad) = mse_loss(&pred, &clean, w.as_ref())?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, what: "loss" });
            }
            let grads = ahead.backward(&cache, &grad)?;
            opt.step(&mut net, &grads, epoch)?;
            total += loss * idx.len() as f64;
            seen += idx.len() as f64;
        }
        let epoch_loss = if seen > 0.0 { total / seen } else { 0.0 };
        losses.push(epoch_loss);
        if epoch_loss <= cfg.target_mse {
            stop = StopReason::TargetMse;
            break;
        }
        if sma_stalled(&losses, cfg.sma_window) {
            stop = StopReason::SmaStall;
            break;
        }
    }
    let epochs_run = losses.len();
    Ok((
        net,
        TrainHistory {
            losses,
            stop_reason: stop,
            epochs_run,
        },
    ))
}

/// Uncorrupted forward pass clipped to `[0,1]`.
pub fn reconstruct(net: &Network, data: &Matrix) -> Result<Matrix> {
    if data.cols() != net.input_dim() {
        return Err(Error::Shape {
            context: "reconstruct (data vs network input)",
            left: data.shape(),
            right: (data.rows(), net.input_dim()),
        });
    }
    Ok(net.predict(data)?.map(|x| x.clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn widths_follow_theta_ramp() {
        assert_eq!(DaeArchitecture::new(14, 7).widths(), [14, 21, 28, 35, 28, 21, 14]);
        assert_eq!(DaeArchitecture::new(5, 7).widths(), [5, 12, 19, 26, 19, 12, 5]);
        assert_eq!(DaeArchitecture::new(4, 0).widths(), [4; 7]);
        let net = build_dae(14, 7, 1).unwrap();
        assert_eq!(net.widths(), [14, 21, 28, 35, 28, 21, 14]);
        assert_eq!(net.layers().len(), 6);
        let acts: Vec<_> = net.layers().iter().map(|l| l.activation).collect();
        assert_eq!(acts[..5], [Activation::Tanh; 5]);
        assert_eq!(acts[5], Activation::Identity);
        assert_eq!(build_dae(0, 7, 1), Err(Error::EmptySchema));
    }

    #[test]
    fn init_is_uniform_glorot() {
        let net = build_dae(10, 7, 3).unwrap();
        for l in net.layers() {
            let r = crate::nn::glorot_range(l.in_dim(), l.out_dim());
            assert!(l.weights.as_slice().iter().all(|w| w.abs() <= r));
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
        assert_ne!(build_dae(10, 7, 3).unwrap(), build_dae(10, 7, 4).unwrap());
    }

    #[test]
    fn corruption_basics() {
        let m = Matrix::filled(50, 20, 0.7);
        let mut a = rng::stream(5, Stream::Train);
        assert_eq!(corrupt(&m, 0.0, &mut a), m);
        let c1 = corrupt(&m, 0.5, &mut rng::stream(5, Stream::Train));
        let c2 = corrupt(&m, 0.5, &mut rng::stream(5, Stream::Train));
        assert_eq!(c1, c2);
        assert!(c1.as_slice().iter().all(|&x| x == 0.0 || x == 0.7));
    }

    #[test]
    fn single_epoch_budget() {
        let data = Matrix::from_rows(&[[0.1, 0.9], [0.4, 0.3], [0.8, 0.5]]).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            ..Default::default()
        };
        let (_, h) = train_on_matrix(build_dae(2, 3, 0).unwrap(), &data, None, &cfg).unwrap();
        assert_eq!(h.epochs_run, 1);
        assert_eq!(h.losses.len(), 1);
        assert_eq!(h.stop_reason, StopReason::EpochBudget);
    }

    #[test]
    fn training_is_deterministic() {
        let data = Matrix::from_rows(&[[0.1, 0.9, 0.2], [0.4, 0.3, 0.6], [0.8, 0.5, 1.0], [0.0, 0.2, 0.3]])
            .unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 2,
            seed: 11,
            ..Default::default()
        };
        let a = train_on_matrix(build_dae(3, 2, 9).unwrap(), &data, None, &cfg).unwrap();
        let b = train_on_matrix(build_dae(3, 2, 9).unwrap(), &data, None, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_data_converges_and_reconstructs() {
        // enough rows that each epoch takes many optimizer steps
        let row = [0.2, 0.8, 0.5, 0.35];
        let data = Matrix::from_rows(&vec![row; 1000]).unwrap();
        let cfg = TrainConfig {
            input_dropout: 0.3,
            seed: 2,
            ..Default::default()
        };
        let (net, h) = train_on_matrix(build_dae(4, 7, 2).unwrap(), &data, None, &cfg).unwrap();
        assert!(h.epochs_run < 500, "{:?}", h.stop_reason);
        assert!(matches!(h.stop_reason, StopReason::TargetMse | StopReason::SmaStall));
        let out = reconstruct(&net, &data).unwrap();
        for r in 0..out.rows() {
            for (x, t) in out.row(r).iter().zip(row) {
                assert!((x - t).abs() < 0.01, "{x} vs {t}");
            }
        }
        assert_eq!(out, reconstruct(&net, &data).unwrap());
    }

    #[test]
    fn zero_network_reconstructs_zero() {
        let arch = DaeArchitecture::new(3, 2);
        let net = build(&arch, Some(0.0), 0).unwrap();
        let out = reconstruct(&net, &Matrix::filled(2, 3, 0.6)).unwrap();
        assert!(out.as_slice().iter().all(|&x| x == 0.0));
        assert!(reconstruct(&net, &Matrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn sma_rule() {
        assert!(!sma_stalled(&[1.0, 1.0, 1.0], 5));
        assert!(!sma_stalled(&[6.0, 5.0, 4.0, 3.0, 2.0, 1.0], 5));
        assert!(sma_stalled(&[1.0, 2.0, 0.5, 0.6, 0.9, 1.0], 5));
        assert!(sma_stalled(&[1.0; 6], 5));
    }

    #[test]
    fn rejects_out_of_range_data_and_bad_config() {
        let net = build_dae(2, 1, 0).unwrap();
        let bad = Matrix::from_rows(&[[1.5, 0.0]]).unwrap();
        assert!(train_on_matrix(net.clone(), &bad, None, &TrainConfig::default()).is_err());
        let ok = Matrix::from_rows(&[[0.5, 0.0]]).unwrap();
        for cfg in [
            TrainConfig { input_dropout: 1.0, ..Default::default() },
            TrainConfig { sma_window: 1, ..Default::default() },
            TrainConfig { target_mse: 0.0, ..Default::default() },
        ] {
            assert!(train_on_matrix(net.clone(), &ok, None, &cfg).is_err());
        }
    }
}
