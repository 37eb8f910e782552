//! Downstream check of completed tables: repeated k-fold cross-validation
//! of a k-nearest-neighbour predictor for one target column.
//!
//! Distances are Euclidean over the encoded non-target columns. Neighbour
//! ties go to the lower row index; a tied vote goes to the label whose
//! first voter is nearest. Regression RMSE is in the target's original
//! units.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{self, ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub target: String,
    /// Inferred from the target's kind when unset.
    pub task: Option<Task>,
    pub folds: usize,
    pub repeats: usize,
    pub neighbors: usize,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            task: None,
            folds: 5,
            repeats: 5,
            neighbors: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub task: Task,
    /// Mean accuracy (classification) or mean RMSE (regression) over all
    /// repeats × folds.
    pub score: f64,
    pub fold_scores: Vec<f64>,
    pub models_fitted: usize,
    pub predictions: usize,
    /// Classification target with a single observed class.
    pub degenerate_target: bool,
}

pub fn cross_validate(completed: &Dataset, cfg: &EvalConfig) -> Result<CvReport> {
    if cfg.folds < 2 {
        return Err(Error::param("folds", "must be at least 2"));
    }
    if cfg.repeats == 0 || cfg.neighbors == 0 {
        return Err(Error::param("repeats/neighbors", "must be at least 1"));
    }
    if completed.missing_count() > 0 {
        return Err(Error::param("completed", "dataset still has missing cells"));
    }
    let target = completed.column_index(&cfg.target)?;
    let n = completed.n_rows();
    if n < cfg.folds {
        return Err(Error::TooSmall {
            what: "rows for the requested folds",
            needed: cfg.folds,
            found: n,
        });
    }
    let task = cfg.task.unwrap_or(match completed.schema()[target].kind {
        ColumnKind::Continuous => Task::Regression,
        _ => Task::Classification,
    });

    let enc = data::encode(completed)?;
    let span = enc.encoding.columns()[target].span();
    let features: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            enc.values
                .row(r)
                .iter()
                .enumerate()
                .filter(|(j, _)| !span.contains(j))
                .map(|(_, &v)| v)
                .collect()
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|r| completed.get(r, target).expect("complete").as_f64())
        .collect();
    let degenerate_target = task == Task::Classification && y.iter().all(|&v| v.to_bits() == y[0].to_bits());

    let mut rng = rng::stream(cfg.seed, Stream::Folds);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut report = CvReport {
        task,
        score: 0.0,
        fold_scores: Vec::with_capacity(cfg.repeats * cfg.folds),
        models_fitted: 0,
        predictions: 0,
        degenerate_target,
    };
    let mut held_out = alloc::vec![false; n];
    for _ in 0..cfg.repeats {
        perm.shuffle(&mut rng);
        for f in 0..cfg.folds {
            let test = &perm[f * n / cfg.folds..(f + 1) * n / cfg.folds];
            held_out.iter_mut().for_each(|h| *h = false);
            test.iter().for_each(|&r| held_out[r] = true);
            let train: Vec<usize> = (0..n).filter(|&r| !held_out[r]).collect();
            report.models_fitted += 1;

            let (mut correct, mut sq) = (0usize, 0.0);
            for &r in test {
                let pred = knn_predict(&features, &y, &train, &features[r], cfg.neighbors, task);
                report.predictions += 1;
                match task {
                    Task::Classification => correct += usize::from(pred.to_bits() == y[r].to_bits()),
                    Task::Regression => sq += (pred - y[r]) * (pred - y[r]),
                }
            }
            let score = match task {
                Task::Classification => correct as f64 / test.len() as f64,
                Task::Regression => libm::sqrt(sq / test.len() as f64),
            };
            report.fold_scores.push(score);
        }
    }
    report.score = report.fold_scores.iter().sum::<f64>() / report.fold_scores.len() as f64;
    Ok(report)
}

fn knn_predict(features: &[Vec<f64>], y: &[f64], train: &[usize], query: &[f64], k: usize, task: Task) -> f64 {
    let mut ranked: Vec<(f64, usize)> = train
        .iter()
        .map(|&i| {
            let d: f64 = features[i].iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, i)
        })
        .collect();
    let k = k.min(ranked.len());
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, order);
    }
    let nearest = &mut ranked[..k];
    nearest.sort_by(order);
    match task {
        Task::Regression => nearest.iter().map(|&(_, i)| y[i]).sum::<f64>() / k as f64,
        Task::Classification => {
            // (label, votes) in order of first appearance
            let mut votes: Vec<(f64, usize)> = Vec::new();
            for &(_, i) in nearest.iter() {
                match votes.iter_mut().find(|(l, _)| l.to_bits() == y[i].to_bits()) {
                    Some(v) => v.1 += 1,
                    None => votes.push((y[i], 1)),
                }
            }
            let mut best = votes[0];
            for &v in &votes[1..] {
                if v.1 > best.1 {
                    best = v;
                }
            }
            best.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: String,
    /// Mean of the per-completion cross-validation scores.
    pub score: f64,
    pub per_completion: Vec<f64>,
}

/// Cross-validates every completion of every method and averages per
/// method. A `truth` table, when given, is reported as method `"truth"`.
pub fn compare_methods(
    methods: &[(&str, &[Dataset])],
    truth: Option<&Dataset>,
    cfg: &EvalConfig,
) -> Result<Vec<MethodScore>> {
    let truth_entry = truth.map(core::slice::from_ref);
    let mut out = Vec::new();
    for (name, completions) in methods
        .iter()
        .copied()
        .chain(truth_entry.map(|t| ("truth", t)))
    {
        let per_completion = completions
            .iter()
            .map(|c| cross_validate(c, cfg).map(|r| r.score))
            .collect::<Result<Vec<_>>>()?;
        if per_completion.is_empty() {
            return Err(Error::Empty("compare_methods"));
        }
        out.push(MethodScore {
            method: name.into(),
            score: per_completion.iter().sum::<f64>() / per_completion.len() as f64,
            per_completion,
        });
    }
    Ok(out)
}
