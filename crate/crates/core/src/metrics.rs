//! Imputation scoring.
//!
//! Errors are measured in encoded (scaled) space. Each original attribute
//! contributes the root mean squared error over its scored cells; a
//! categorical one-hot block counts as one attribute whose RMSE runs over
//! all of its encoded entries. The attribute RMSEs are summed.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Encoding};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::missingness::{Mechanism, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreScope {
    AllMissing,
    TestMissing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub rmse_sum: f64,
    pub per_attribute_rmse: Vec<f64>,
    /// Number of original cells scored.
    pub cells_scored: usize,
    pub restricted_to: ScoreScope,
}

/// Sum of per-attribute RMSEs between `imputed` and `truth` over the cells
/// flagged in `scoring_mask` (row-major, rows × original attributes).
pub fn rmse_sum(
    imputed: &Matrix,
    truth: &Matrix,
    encoding: &Encoding,
    scoring_mask: &[bool],
    scope: ScoreScope,
) -> Result<ScoreReport> {
    if imputed.shape() != truth.shape() {
        return Err(Error::Shape {
            context: "rmse_sum (imputed vs truth)",
            left: imputed.shape(),
            right: truth.shape(),
        });
    }
    if truth.cols() != encoding.width() {
        return Err(Error::Shape {
            context: "rmse_sum (values vs encoding)",
            left: truth.shape(),
            right: (truth.rows(), encoding.width()),
        });
    }
    let m = encoding.columns().len();
    if scoring_mask.len() != truth.rows() * m {
        return Err(Error::Shape {
            context: "rmse_sum (scoring mask)",
            left: (truth.rows(), m),
            right: (scoring_mask.len(), 1),
        });
    }
    let mut per_attribute_rmse = vec![0.0; m];
    let mut cells_scored = 0;
    for (c, codec) in encoding.columns().iter().enumerate() {
        let (mut sq, mut entries) = (0.0, 0usize);
        for r in (0..truth.rows()).filter(|&r| scoring_mask[r * m + c]) {
            for j in codec.span() {
                let d = imputed[(r, j)] - truth[(r, j)];
                sq += d * d;
            }
            entries += codec.width;
            cells_scored += 1;
        }
        if entries > 0 {
            per_attribute_rmse[c] = libm::sqrt(sq / entries as f64);
        }
    }
    if cells_scored == 0 {
        return Err(Error::NoCellsToScore);
    }
    Ok(ScoreReport {
        rmse_sum: per_attribute_rmse.iter().sum(),
        per_attribute_rmse,
        cells_scored,
        restricted_to: scope,
    })
}

/// Scores a completed table against the complete truth, both encoded with
/// statistics fitted on the truth.
pub fn score_completion(
    completed: &Dataset,
    truth: &Dataset,
    scoring_mask: &[bool],
    scope: ScoreScope,
) -> Result<ScoreReport> {
    let encoding = Encoding::fit(truth)?;
    let t = encoding.encode(truth)?;
    let i = encoding.encode(completed)?;
    rmse_sum(&i.values, &t.values, &encoding, scoring_mask, scope)
}

/// Mean with extremes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pooled {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl core::fmt::Display for Pooled {
    /// `mean(min,max)` with one decimal.
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{:.1}({:.1},{:.1})", self.mean, self.min, self.max)
    }
}

pub fn pool(values: &[f64]) -> Result<Pooled> {
    if values.is_empty() {
        return Err(Error::Empty("pool"));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Pooled { mean, min, max })
}

/// `mean(e_dae) / mean(e_other)`; below one favours the first method.
pub fn error_ratio(e_dae: &[f64], e_other: &[f64]) -> Result<f64> {
    let a = pool(e_dae)?.mean;
    let b = pool(e_other)?.mean;
    if b == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(a / b)
}

/// Per-imputation scores for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub mechanism: Mechanism,
    pub pattern: Pattern,
    pub t: f64,
    pub method: String,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub mechanism: Mechanism,
    pub pattern: Pattern,
    pub t: f64,
    pub method: String,
    pub k: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

fn key_order(a: &ResultRow, b: &ResultRow) -> core::cmp::Ordering {
    a.dataset
        .cmp(&b.dataset)
        .then(a.mechanism.cmp(&b.mechanism))
        .then(a.pattern.cmp(&b.pattern))
        .then(a.t.total_cmp(&b.t))
        .then(a.method.cmp(&b.method))
}

/// One pooled row per grid cell, ordered by
/// `(dataset, mechanism, pattern, t, method)`. Rows without scores are
/// dropped.
pub fn summarize(results: &[ResultRow]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&ResultRow> = results.iter().collect();
    sorted.sort_by(|a, b| key_order(a, b));
    sorted
        .into_iter()
        .filter_map(|r| {
            let p = pool(&r.scores).ok()?;
            Some(SummaryRow {
                dataset: r.dataset.clone(),
                mechanism: r.mechanism,
                pattern: r.pattern,
                t: r.t,
                method: r.method.clone(),
                k: r.scores.len(),
                mean: p.mean,
                min: p.min,
                max: p.max,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub dataset: String,
    pub mechanism: Mechanism,
    pub pattern: Pattern,
    pub t: f64,
    pub method: String,
    pub against: String,
    pub error_ratio: f64,
}

/// Error ratio of `method` against every other method, for each
/// `(dataset, mechanism, pattern, t)` where both have scores.
pub fn error_ratios(results: &[ResultRow], method: &str) -> Vec<RatioRow> {
    let mut sorted: Vec<&ResultRow> = results.iter().collect();
    sorted.sort_by(|a, b| key_order(a, b));
    let same_cell = |a: &ResultRow, b: &ResultRow| {
        a.dataset == b.dataset && a.mechanism == b.mechanism && a.pattern == b.pattern && a.t == b.t
    };
    let mut out = Vec::new();
    for mine in sorted.iter().filter(|r| r.method == method) {
        for other in sorted.iter().filter(|r| r.method != method && same_cell(r, mine)) {
            if let Ok(ratio) = error_ratio(&mine.scores, &other.scores) {
                out.push(RatioRow {
                    dataset: mine.dataset.clone(),
                    mechanism: mine.mechanism,
                    pattern: mine.pattern,
                    t: mine.t,
                    method: mine.method.clone(),
                    against: other.method.clone(),
                    error_ratio: ratio,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode, ColumnSchema, Value};
    use alloc::string::ToString;
    use approx::assert_abs_diff_eq;

    fn two_col_encoding(rows: usize) -> Encoding {
        let ds = Dataset::new(
            alloc::vec![ColumnSchema::continuous("a"), ColumnSchema::continuous("b")],
            (0..rows)
                .map(|r| alloc::vec![Some(Value::Num(r as f64)), Some(Value::Num(r as f64))])
                .collect(),
        )
        .unwrap();
        encode(&ds).unwrap().encoding
    }

    #[test]
    fn identical_is_zero() {
        let enc = two_col_encoding(2);
        let t = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let r = rmse_sum(&t, &t, &enc, &[true, true, false, true], ScoreScope::AllMissing).unwrap();
        assert_eq!(r.rmse_sum, 0.0);
        assert_eq!(r.cells_scored, 3);
    }

    #[test]
    fn one_attribute_two_cells() {
        let enc = two_col_encoding(2);
        let truth = Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let imp = Matrix::from_rows(&[[0.8, 0.5], [0.1, 0.5]]).unwrap();
        let r = rmse_sum(&imp, &truth, &enc, &[true, false, true, false], ScoreScope::AllMissing).unwrap();
        assert_abs_diff_eq!(r.rmse_sum, libm::sqrt((0.09 + 0.16) / 2.0), epsilon = 1e-12);
        assert_abs_diff_eq!(r.rmse_sum, 0.353_553_390_593_273_8, epsilon = 1e-12);
        assert_eq!(r.per_attribute_rmse[1], 0.0);
    }

    #[test]
    fn sum_not_pooled() {
        let enc = two_col_encoding(2);
        let truth = Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let imp = Matrix::from_rows(&[[0.6, 0.5], [0.5, 0.7]]).unwrap();
        let r = rmse_sum(&imp, &truth, &enc, &[true, false, false, true], ScoreScope::TestMissing).unwrap();
        assert_abs_diff_eq!(r.rmse_sum, 0.3, epsilon = 1e-12);
        assert_eq!(r.restricted_to, ScoreScope::TestMissing);
    }

    #[test]
    fn categorical_block_is_one_attribute() {
        let ds = Dataset::new(
            alloc::vec![ColumnSchema::categorical("c", ["a", "b"])],
            alloc::vec![alloc::vec![Some(Value::Level(0))], alloc::vec![Some(Value::Level(1))]],
        )
        .unwrap();
        let enc = encode(&ds).unwrap();
        let mut imp = enc.values.clone();
        imp[(0, 0)] = 0.0;
        imp[(0, 1)] = 1.0;
        let r = rmse_sum(&imp, &enc.values, &enc.encoding, &[true, false], ScoreScope::AllMissing).unwrap();
        assert_eq!(r.per_attribute_rmse.len(), 1);
        assert_abs_diff_eq!(r.rmse_sum, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_mask_errors() {
        let enc = two_col_encoding(1);
        let t = Matrix::zeros(1, 2);
        assert_eq!(
            rmse_sum(&t, &t, &enc, &[false, false], ScoreScope::AllMissing),
            Err(Error::NoCellsToScore)
        );
    }

    #[test]
    fn pooling() {
        let p = pool(&[2.9, 2.9, 3.0, 2.9, 2.9]).unwrap();
        assert_abs_diff_eq!(p.mean, 2.92, epsilon = 1e-12);
        assert_eq!((p.min, p.max), (2.9, 3.0));
        assert_eq!(p.to_string(), "2.9(2.9,3.0)");
        let one = pool(&[1.25]).unwrap();
        assert_eq!((one.mean, one.min, one.max), (1.25, 1.25, 1.25));
        assert_eq!(pool(&[1.0, 2.0, 3.0]).unwrap(), Pooled { mean: 2.0, min: 1.0, max: 3.0 });
        assert_eq!(pool(&[]), Err(Error::Empty("pool")));
    }

    #[test]
    fn ratios() {
        assert_eq!(error_ratio(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(error_ratio(&[2.92], &[3.68]).unwrap(), 0.793_478_260_869_565_2, epsilon = 1e-12);
        assert_eq!(error_ratio(&[0.0, 0.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(error_ratio(&[1.0], &[0.0, 0.0]), Err(Error::UndefinedRatio));
    }

    fn row(method: &str, t: f64, scores: &[f64]) -> ResultRow {
        ResultRow {
            dataset: "bh".to_string(),
            mechanism: Mechanism::Mcar,
            pattern: Pattern::Uniform,
            t,
            method: method.to_string(),
            scores: scores.to_vec(),
        }
    }

    #[test]
    fn summary_order_and_ratios() {
        let rows = [
            row("meanmode", 0.4, &[4.0]),
            row("dae", 0.4, &[2.0, 3.0]),
            row("dae", 0.2, &[1.0, 2.0, 3.0]),
            row("meanmode", 0.2, &[2.0]),
        ];
        let s = summarize(&rows);
        let keys: alloc::vec::Vec<_> = s.iter().map(|r| (r.t, r.method.as_str())).collect();
        assert_eq!(keys, [(0.2, "dae"), (0.2, "meanmode"), (0.4, "dae"), (0.4, "meanmode")]);
        assert_eq!(s[0].mean, pool(&[1.0, 2.0, 3.0]).unwrap().mean);
        let single = summarize(&[row("dae", 0.2, &[1.5])]);
        assert_eq!((single[0].mean, single[0].min, single[0].max), (1.5, 1.5, 1.5));
        let er = error_ratios(&rows, "dae");
        assert_eq!(er.len(), 2);
        assert_eq!(er[0].error_ratio, 1.0);
        assert_eq!(er[1].error_ratio, 2.5 / 4.0);
    }
}
