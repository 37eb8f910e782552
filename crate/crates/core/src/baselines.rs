//! Reference imputers.
//!
//! - [`mean_mode_impute`]: column mean / modal label, deterministic.
//! - [`chained_pmm_impute`]: a simplified chained-equations imputer
//!   ("cepmm"). Each sweep regresses every incomplete column on all other
//!   encoded columns by least squares and fills its missing cells by
//!   predictive mean matching: the observed row whose prediction is among
//!   the `donors` closest donates its actual observed value. Coefficients
//!   are point estimates; variation across runs comes only from donor
//!   draws. It is not a port of any external MICE implementation.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;
use crate::mi::{MiResult, RunOutput, RunRecord};
use crate::rng::{self, Stream};

/// Single completion with column means (continuous, ordinal) and modal
/// labels (categorical). Observed cells are copied unchanged.
pub fn mean_mode_impute(ds: &Dataset) -> Result<Dataset> {
    let filled = data::placeholder_fill(&data::encode(ds)?);
    let decoded = filled.encoding.decode(&filled.values)?;
    Ok(merge_missing(ds, |r, c| decoded.get(r, c)))
}

fn merge_missing(ds: &Dataset, fill: impl Fn(usize, usize) -> Option<data::Value>) -> Dataset {
    let mut out = ds.clone();
    for r in 0..ds.n_rows() {
        for c in 0..ds.n_cols() {
            if ds.is_missing(r, c) {
                out.set(r, c, fill(r, c));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepOrder {
    /// Columns in schema order.
    Schema,
    /// A fresh random column order every sweep.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainedConfig {
    pub iterations: usize,
    pub donors: usize,
    pub k: usize,
    pub seed: u64,
    pub order: SweepOrder,
}

impl Default for ChainedConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            donors: 5,
            k: 5,
            seed: 0,
            order: SweepOrder::Schema,
        }
    }
}

impl ChainedConfig {
    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }
}

/// Validated input for the chained imputer; runs are independent.
#[derive(Debug, Clone)]
pub struct ChainedPlan<'a> {
    input: &'a Dataset,
    config: ChainedConfig,
    start: data::EncodedMatrix,
}

impl<'a> ChainedPlan<'a> {
    pub fn new(input: &'a Dataset, config: ChainedConfig) -> Result<Self> {
        if config.iterations == 0 {
            return Err(Error::param("iterations", "must be at least 1"));
        }
        if config.donors == 0 {
            return Err(Error::param("donors", "must be at least 1"));
        }
        if config.k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        if input.n_cols() < 2 {
            return Err(Error::TooSmall {
                what: "columns for chained regression",
                needed: 2,
                found: input.n_cols(),
            });
        }
        let needed = (config.donors + 1).max(2);
        for c in 0..input.n_cols() {
            let observed = (0..input.n_rows()).filter(|&r| !input.is_missing(r, c)).count();
            if observed < input.n_rows() && observed < needed {
                return Err(Error::TooSmall {
                    what: "observed values in an incomplete column",
                    needed,
                    found: observed,
                });
            }
        }
        let start = data::placeholder_fill(&data::encode(input)?);
        Ok(Self { input, config, start })
    }

    pub fn config(&self) -> &ChainedConfig {
        &self.config
    }

    pub fn run(&self, run: usize) -> Result<RunOutput> {
        let seed = self.config.run_seed(run);
        let mut rng = rng::stream(seed, Stream::Donor);
        let ds = self.input;
        let (n, m) = (ds.n_rows(), ds.n_cols());
        let codecs = self.start.encoding.columns();
        let width = self.start.width();
        let mut cur = self.start.values.clone();
        let mut donor_of: Vec<Option<usize>> = vec![None; n * m];

        let incomplete: Vec<usize> = (0..m).filter(|&c| (0..n).any(|r| ds.is_missing(r, c))).collect();
        let mut order = incomplete.clone();
        for _ in 0..self.config.iterations {
            if self.config.order == SweepOrder::Random {
                order.shuffle(&mut rng);
            }
            for &c in &order {
                let span = codecs[c].span();
                let observed: Vec<usize> = (0..n).filter(|&r| !ds.is_missing(r, c)).collect();
                let missing: Vec<usize> = (0..n).filter(|&r| ds.is_missing(r, c)).collect();

                // intercept + every encoded column outside this attribute
                let predictors: Vec<usize> = (0..width).filter(|j| !span.contains(j)).collect();
                let design_row = |r: usize| {
                    let row = cur.row(r);
                    core::iter::once(1.0).chain(predictors.iter().map(move |&j| row[j]))
                };
                let p = predictors.len() + 1;
                let mut x_all = Matrix::zeros(n, p);
                for r in 0..n {
                    for (dst, v) in x_all.row_mut(r).iter_mut().zip(design_row(r)) {
                        *dst = v;
                    }
                }
                let x_obs = x_all.select_rows(&observed);
                let mut y_obs = Matrix::zeros(observed.len(), span.len());
                for (i, &r) in observed.iter().enumerate() {
                    y_obs.row_mut(i).copy_from_slice(&cur.row(r)[span.clone()]);
                }
                let fit = linalg::least_squares(&x_obs, &y_obs);
                let pred = x_all.matmul(&fit.coef)?;

                let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(observed.len());
                for &r in &missing {
                    ranked.clear();
                    let target = pred.row(r);
                    ranked.extend(observed.iter().map(|&o| {
                        let d: f64 = pred.row(o).iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
                        (d, o)
                    }));
                    let k = self.config.donors.min(ranked.len());
                    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                    if k < ranked.len() {
                        ranked.select_nth_unstable_by(k - 1, by_distance);
                    }
                    ranked[..k].sort_by(by_distance);
                    let donor = ranked[rng.gen_range(0..k)].1;
                    let donated: Vec<f64> = cur.row(donor)[span.clone()].to_vec();
                    cur.row_mut(r)[span.clone()].copy_from_slice(&donated);
                    donor_of[r * m + c] = Some(donor);
                }
            }
        }

        let completion = merge_missing(ds, |r, c| donor_of[r * m + c].and_then(|d| ds.get(d, c)));
        Ok(RunOutput {
            completion,
            record: RunRecord {
                run,
                seed,
                history: None,
                test_rows: None,
            },
        })
    }
}

/// Runs `cfg.k` chained-equations PMM imputations sequentially.
pub fn chained_pmm_impute(ds: &Dataset, cfg: &ChainedConfig) -> Result<MiResult> {
    let plan = ChainedPlan::new(ds, *cfg)?;
    let runs = (0..cfg.k).map(|i| plan.run(i)).collect::<Result<Vec<_>>>()?;
    Ok(MiResult::from_runs(runs))
}
