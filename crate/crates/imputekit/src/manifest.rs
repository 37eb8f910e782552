//! Run manifests and induction provenance.

use std::path::Path;

use anyhow::Result;
use chrono::{DateTime, Utc};
use imputekit_core::dae::StopReason;
use imputekit_core::data::ColumnSchema;
use imputekit_core::mi::RunRecord;
use imputekit_core::missingness::{Drivers, InducedDataset, MissingnessReport, MissingnessSpec};
use serde::{Deserialize, Serialize};

use crate::fsutil;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: fsutil::sha256_file(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub stop_reason: Option<StopReason>,
    pub epochs_run: Option<usize>,
    pub final_loss: Option<f64>,
    pub test_rows: Option<Vec<usize>>,
}

impl From<&RunRecord> for RunSummary {
    fn from(r: &RunRecord) -> Self {
        Self {
            run: r.run,
            seed: r.seed,
            stop_reason: r.history.as_ref().map(|h| h.stop_reason),
            epochs_run: r.history.as_ref().map(|h| h.epochs_run),
            final_loss: r.history.as_ref().and_then(|h| h.losses.last().copied()),
            test_rows: r.test_rows.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    /// Fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub runs: Vec<RunSummary>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value, master_seed: u64, started_at: DateTime<Utc>) -> Self {
        Self {
            tool_version: TOOL_VERSION.into(),
            subcommand: subcommand.into(),
            config,
            master_seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_at,
            finished_at: started_at,
            runs: Vec::new(),
        }
    }
}

/// Everything about an induction needed to score against it later. Holds
/// no timestamps, so reruns produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub input: InputDigest,
    pub spec: MissingnessSpec,
    pub schema: Vec<ColumnSchema>,
    pub n_rows: usize,
    /// Row-major over `n_rows × schema.len()`; `true` = masked.
    pub induced_mask: Vec<bool>,
    pub drivers: Option<Drivers>,
    pub attributes: Vec<usize>,
    pub stats: MissingnessReport,
}

impl Provenance {
    pub fn new(input: InputDigest, ind: &InducedDataset, stats: MissingnessReport) -> Self {
        Self {
            tool_version: TOOL_VERSION.into(),
            input,
            spec: ind.spec,
            schema: ind.truth.schema().to_vec(),
            n_rows: ind.truth.n_rows(),
            induced_mask: ind.induced_mask.clone(),
            drivers: ind.drivers,
            attributes: ind.attributes.clone(),
            stats,
        }
    }
}
