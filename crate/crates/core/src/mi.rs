//! Multiple imputation with k independently initialised autoencoders.
//!
//! Per run `i` (seed `master_seed + i`): split the placeholder-filled
//! encoded table 70/30, train a fresh network on the training rows with
//! stochastic corruption, reconstruct every row and overwrite only the
//! missing entries. Observed cells are copied from the input unchanged.
//!
//! [`MiPlan`] exposes single runs so callers can dispatch them in
//! parallel; [`multiple_impute`] runs them in order.

use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dae::{self, DaeArchitecture, TrainConfig, TrainHistory};
use crate::data::{self, Dataset, EncodedMatrix};
use crate::error::{Error, Result};
use crate::metrics::{self, ScoreReport, ScoreScope};
use crate::nn::Network;

pub use crate::metrics::{pool, Pooled};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiConfig {
    pub k: usize,
    pub theta: usize,
    pub encoder_depth: usize,
    /// Training settings; `train.seed` is replaced by each run's seed.
    pub train: TrainConfig,
    pub split_ratio: f64,
    pub master_seed: u64,
    /// Half-width of the uniform weight initialisation (Glorot if unset).
    pub init_range: Option<f64>,
}

impl Default for MiConfig {
    fn default() -> Self {
        Self {
            k: 5,
            theta: dae::DEFAULT_THETA,
            encoder_depth: dae::DEFAULT_ENCODER_DEPTH,
            train: TrainConfig::default(),
            split_ratio: 0.7,
            master_seed: 0,
            init_range: None,
        }
    }
}

impl MiConfig {
    pub fn run_seed(&self, run: usize) -> u64 {
        self.master_seed.wrapping_add(run as u64)
    }
}

/// What one run did, enough to reproduce and audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// Training trace; `None` for methods without a trained model.
    pub history: Option<TrainHistory>,
    /// Rows held out of training (the run's test partition), when the
    /// method splits the data.
    pub test_rows: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub completion: Dataset,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiResult {
    pub completions: Vec<Dataset>,
    pub runs: Vec<RunRecord>,
}

impl MiResult {
    pub fn from_runs(outputs: Vec<RunOutput>) -> Self {
        let (completions, runs) = outputs.into_iter().map(|o| (o.completion, o.record)).unzip();
        Self { completions, runs }
    }

    pub fn histories(&self) -> impl Iterator<Item = &TrainHistory> {
        self.runs.iter().filter_map(|r| r.history.as_ref())
    }

    /// Scores every completion against `truth`. With
    /// [`ScoreScope::TestMissing`] each run is scored only on cells in its
    /// own test partition.
    pub fn score(&self, truth: &Dataset, scoring_mask: &[bool], scope: ScoreScope) -> Result<Vec<ScoreReport>> {
        self.completions
            .iter()
            .zip(&self.runs)
            .map(|(c, run)| {
                let mask = match (scope, &run.test_rows) {
                    (ScoreScope::TestMissing, Some(rows)) => restrict_to_rows(scoring_mask, truth.n_cols(), rows),
                    _ => scoring_mask.to_vec(),
                };
                metrics::score_completion(c, truth, &mask, scope)
            })
            .collect()
    }
}

/// Keeps only mask entries in `rows`.
pub fn restrict_to_rows(mask: &[bool], n_cols: usize, rows: &[usize]) -> Vec<bool> {
    let mut out = alloc::vec![false; mask.len()];
    for &r in rows {
        let span = r * n_cols..(r + 1) * n_cols;
        out[span.clone()].copy_from_slice(&mask[span]);
    }
    out
}

/// Shared, read-only state for the k runs.
#[derive(Debug, Clone)]
pub struct MiPlan<'a> {
    input: &'a Dataset,
    filled: EncodedMatrix,
    config: MiConfig,
}

impl<'a> MiPlan<'a> {
    pub fn new(input: &'a Dataset, config: MiConfig) -> Result<Self> {
        if config.k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        config.train.validate()?;
        if input.missing_count() == 0 {
            return Err(Error::NothingToImpute);
        }
        let filled = data::placeholder_fill(&data::encode(input)?);
        Ok(Self { input, filled, config })
    }

    pub fn config(&self) -> &MiConfig {
        &self.config
    }

    pub fn encoded(&self) -> &EncodedMatrix {
        &self.filled
    }

    pub fn architecture(&self) -> DaeArchitecture {
        DaeArchitecture {
            input_dim: self.filled.width(),
            theta: self.config.theta,
            encoder_depth: self.config.encoder_depth,
        }
    }

    /// The untrained network run `run` starts from.
    pub fn initial_network(&self, run: usize) -> Result<Network> {
        dae::build(&self.architecture(), self.config.init_range, self.config.run_seed(run))
    }

    pub fn run(&self, run: usize) -> Result<RunOutput> {
        self.run_inner(run).map_err(|e| Error::Run {
            run,
            source: Box::new(e),
        })
    }

    fn run_inner(&self, run: usize) -> Result<RunOutput> {
        let seed = self.config.run_seed(run);
        let split = data::split_indices(self.filled.rows(), self.config.split_ratio, seed)?;
        let train_cfg = TrainConfig {
            seed,
            ..self.config.train
        };
        let net = self.initial_network(run)?;
        let (net, history) = dae::train_dae(net, &self.filled.select_rows(&split.train), &train_cfg)?;
        let recon = dae::reconstruct(&net, &self.filled.values)?;

        let mut merged = self.filled.values.clone();
        for (i, (m, r)) in merged.as_mut_slice().iter_mut().zip(recon.as_slice()).enumerate() {
            if self.filled.mask[i] {
                *m = *r;
            }
        }
        let decoded = self.filled.encoding.decode(&merged)?;
        let mut completion = self.input.clone();
        for r in 0..completion.n_rows() {
            for c in 0..completion.n_cols() {
                if completion.is_missing(r, c) {
                    completion.set(r, c, decoded.get(r, c));
                }
            }
        }
        Ok(RunOutput {
            completion,
            record: RunRecord {
                run,
                seed,
                history: Some(history),
                test_rows: Some(split.test),
            },
        })
    }
}

/// Runs all k imputations sequentially.
pub fn multiple_impute(ds: &Dataset, config: &MiConfig) -> Result<MiResult> {
    let plan = MiPlan::new(ds, *config)?;
    let outputs = (0..config.k).map(|i| plan.run(i)).collect::<Result<Vec<_>>>()?;
    Ok(MiResult::from_runs(outputs))
}
