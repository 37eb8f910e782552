//! Missingness induction on complete tables.
//!
//! A uniform vector `v ∈ (0,1]^N` selects rows with `vᵢ ≤ t`. MNAR
//! additionally requires `x₁ᵢ ≤ m₁ or x₂ᵢ ≥ m₂` for two sampled driver
//! attributes with (lower) medians `m₁`, `m₂`. The uniform pattern masks
//! every attribute of a selected row; the random pattern masks a fixed,
//! randomly sampled `⌊m/2⌋` of them.
//!
//! Draw order from the seed's induction stream: `v`, then the driver pair
//! (MNAR), then the attribute subset (random pattern).

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Dataset, Value};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Mcar,
    Mnar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Uniform,
    Random,
}

impl core::str::FromStr for Mechanism {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcar" => Ok(Mechanism::Mcar),
            "mnar" => Ok(Mechanism::Mnar),
            _ => Err(Error::param("mechanism", "expected mcar or mnar")),
        }
    }
}

impl core::str::FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Pattern::Uniform),
            "random" => Ok(Pattern::Random),
            _ => Err(Error::param("pattern", "expected uniform or random")),
        }
    }
}

impl core::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Mechanism::Mcar => "mcar",
            Mechanism::Mnar => "mnar",
        })
    }
}

impl core::fmt::Display for Pattern {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Pattern::Uniform => "uniform",
            Pattern::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSpec {
    pub mechanism: Mechanism,
    pub pattern: Pattern,
    /// Row-selection threshold on `v`.
    pub t: f64,
    pub seed: u64,
}

impl MissingnessSpec {
    pub fn new(mechanism: Mechanism, pattern: Pattern, t: f64, seed: u64) -> Self {
        Self {
            mechanism,
            pattern,
            t,
            seed,
        }
    }
}

/// MNAR driver attributes and their medians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drivers {
    pub x1: usize,
    pub x2: usize,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedDataset {
    pub spec: MissingnessSpec,
    pub observed: Dataset,
    pub truth: Dataset,
    /// Row-major, `true` = masked by this induction.
    pub induced_mask: Vec<bool>,
    pub achieved_proportion: f64,
    pub drivers: Option<Drivers>,
    /// Attributes eligible for masking, ascending.
    pub attributes: Vec<usize>,
    /// Per row: did the MNAR driver predicate hold (always `true` for MCAR).
    pub row_condition: Vec<bool>,
    /// Per row: was the row selected (`vᵢ ≤ t` and the predicate).
    pub selected_rows: Vec<bool>,
}

fn lower_median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[(xs.len() - 1) / 2]
}

fn numeric(ds: &Dataset, r: usize, c: usize) -> f64 {
    ds.get(r, c).map_or(f64::NAN, Value::as_f64)
}

pub fn induce(ds: &Dataset, spec: &MissingnessSpec) -> Result<InducedDataset> {
    if !(0.0..=1.0).contains(&spec.t) {
        return Err(Error::param("t", "must lie in [0, 1]"));
    }
    if ds.missing_count() > 0 {
        return Err(Error::NotComplete);
    }
    let (n, m) = (ds.n_rows(), ds.n_cols());
    if spec.mechanism == Mechanism::Mnar {
        if m < 2 {
            return Err(Error::TooSmall {
                what: "columns for MNAR driver attributes",
                needed: 2,
                found: m,
            });
        }
        if n < 4 {
            return Err(Error::TooSmall {
                what: "rows for MNAR medians",
                needed: 4,
                found: n,
            });
        }
    }

    let mut rng = rng::stream(spec.seed, Stream::Induce);
    // (0, 1] so that t = 0 selects nothing and t = 1 selects everything
    let v: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();

    let drivers = match spec.mechanism {
        Mechanism::Mcar => None,
        Mechanism::Mnar => {
            let continuous: Vec<usize> = (0..m)
                .filter(|&c| ds.schema()[c].kind == ColumnKind::Continuous)
                .collect();
            let pool: Vec<usize> = if continuous.len() >= 2 { continuous } else { (0..m).collect() };
            let pick = rand::seq::index::sample(&mut rng, pool.len(), 2);
            let (x1, x2) = (pool[pick.index(0)], pool[pick.index(1)]);
            let median = |c| lower_median((0..n).map(|r| numeric(ds, r, c)).collect());
            Some(Drivers {
                x1,
                x2,
                m1: median(x1),
                m2: median(x2),
            })
        }
    };

    let attributes: Vec<usize> = match spec.pattern {
        Pattern::Uniform => (0..m).collect(),
        Pattern::Random => {
            let mut a = rand::seq::index::sample(&mut rng, m, m / 2).into_vec();
            a.sort_unstable();
            a
        }
    };

    let row_condition: Vec<bool> = (0..n)
        .map(|r| match drivers {
            None => true,
            Some(d) => numeric(ds, r, d.x1) <= d.m1 || numeric(ds, r, d.x2) >= d.m2,
        })
        .collect();
    let selected_rows: Vec<bool> = (0..n).map(|r| v[r] <= spec.t && row_condition[r]).collect();

    let mut induced_mask = vec![false; n * m];
    for r in (0..n).filter(|&r| selected_rows[r]) {
        for &c in &attributes {
            induced_mask[r * m + c] = true;
        }
    }
    let masked = induced_mask.iter().filter(|&&b| b).count();
    let cells = (n * m).max(1);
    Ok(InducedDataset {
        spec: *spec,
        observed: ds.with_mask(&induced_mask)?,
        truth: ds.clone(),
        induced_mask,
        achieved_proportion: masked as f64 / cells as f64,
        drivers,
        attributes,
        row_condition,
        selected_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessReport {
    pub overall: f64,
    pub per_column: Vec<f64>,
    /// Fraction of rows satisfying the driver predicate.
    pub row_condition_hit_rate: f64,
    pub rows_masked: usize,
    pub cells_masked: usize,
}

pub fn achieved_stats(ind: &InducedDataset) -> MissingnessReport {
    let n = ind.truth.n_rows();
    let m = ind.truth.n_cols();
    let cells_masked = ind.induced_mask.iter().filter(|&&b| b).count();
    let per_column = (0..m)
        .map(|c| {
            let k = (0..n).filter(|&r| ind.induced_mask[r * m + c]).count();
            if n == 0 { 0.0 } else { k as f64 / n as f64 }
        })
        .collect();
    let rows_masked = (0..n)
        .filter(|&r| ind.induced_mask[r * m..(r + 1) * m].iter().any(|&b| b))
        .count();
    let hits = ind.row_condition.iter().filter(|&&b| b).count();
    MissingnessReport {
        overall: if n * m == 0 { 0.0 } else { cells_masked as f64 / (n * m) as f64 },
        per_column,
        row_condition_hit_rate: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
        rows_masked,
        cells_masked,
    }
}
