//! Benchmark sweeps over datasets × mechanisms × patterns × proportions ×
//! methods.
//!
//! Layout under the output directory:
//!
//! ```text
//! cells/<dataset>/<mech>-<pattern>-t<t>/<method>/manifest.json
//!                                               /scores.json
//!                                               /downstream.json
//! summary.json  summary.csv  ratios.csv  downstream.csv
//! ```
//!
//! A cell whose `manifest.json` exists is not recomputed; its scores are
//! read back. A failing cell is recorded and the sweep moves on.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::Utc;
use imputekit_core::baselines::ChainedConfig;
use imputekit_core::data::Dataset;
use imputekit_core::downstream::{self, EvalConfig, Task};
use imputekit_core::metrics::{self, ResultRow, ScoreScope, SummaryRow};
use imputekit_core::mi::{restrict_to_rows, MiConfig};
use imputekit_core::missingness::{self, Mechanism, MissingnessSpec, Pattern};
use serde::{Deserialize, Serialize};

use crate::commands::{model_label, Scope};
use crate::fsutil;
use crate::io;
use crate::manifest::{InputDigest, RunManifest, RunSummary};
use crate::methods::{self, Method, Settings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub schema: Option<PathBuf>,
    /// Column for the downstream check; none skips it.
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub task: Option<Task>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DownstreamSettings {
    pub folds: usize,
    pub repeats: usize,
    pub neighbors: usize,
}

impl Default for DownstreamSettings {
    fn default() -> Self {
        Self {
            folds: 5,
            repeats: 5,
            neighbors: 5,
        }
    }
}

fn default_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub datasets: Vec<DatasetEntry>,
    pub mechanisms: Vec<Mechanism>,
    pub patterns: Vec<Pattern>,
    pub proportions: Vec<f64>,
    pub methods: Vec<Method>,
    #[serde(default = "default_k")]
    pub k: usize,
    /// DAE settings; `k` and `master_seed` are overridden.
    #[serde(default)]
    pub dae: MiConfig,
    /// Chained-equation settings; `k` and `seed` are overridden.
    #[serde(default)]
    pub cepmm: ChainedConfig,
    #[serde(default = "default_scope")]
    pub scope: Scope,
    #[serde(default)]
    pub downstream: DownstreamSettings,
}

fn default_scope() -> Scope {
    Scope::All
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = fsutil::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut cfg.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
            if let Some(s) = d.schema.as_mut().filter(|s| s.is_relative()) {
                *s = base.join(&*s);
            }
        }
        Ok(cfg)
    }

    pub fn settings(&self, method: Method, seed: u64) -> Settings {
        Settings {
            method,
            mi: MiConfig {
                k: self.k,
                master_seed: seed,
                ..self.dae
            },
            chained: self.cepmm,
        }
        .resolved()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamRow {
    pub dataset: String,
    pub mechanism: Option<Mechanism>,
    pub pattern: Option<Pattern>,
    pub t: Option<f64>,
    pub method: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub downstream_model: String,
    pub results: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub ratios: Vec<metrics::RatioRow>,
    pub downstream: Vec<DownstreamRow>,
    pub failures: Vec<CellFailure>,
    /// Cells recomputed in this invocation (others were resumed).
    pub computed: Vec<String>,
}

fn cell_id(dataset: &str, spec: &MissingnessSpec, method: Method) -> String {
    format!("{dataset}/{}-{}-t{}/{method}", spec.mechanism, spec.pattern, spec.t)
}

struct CellOutcome {
    row: ResultRow,
    downstream: Option<DownstreamRow>,
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    entry: &DatasetEntry,
    ds: &Dataset,
    cfg: &BenchConfig,
    spec: &MissingnessSpec,
    method: Method,
    seed: u64,
    dir: &Path,
    workers: usize,
) -> Result<CellOutcome> {
    let started = Utc::now();
    let ind = missingness::induce(ds, spec)?;
    let settings = cfg.settings(method, seed);
    let result = methods::impute(&ind.observed, &settings, workers)?;
    let mut scores = Vec::with_capacity(result.completions.len());
    for (c, run) in result.completions.iter().zip(&result.runs) {
        let (mask, scope) = match (cfg.scope, &run.test_rows) {
            (Scope::Test, Some(rows)) => (restrict_to_rows(&ind.induced_mask, ds.n_cols(), rows), ScoreScope::TestMissing),
            _ => (ind.induced_mask.clone(), ScoreScope::AllMissing),
        };
        scores.push(metrics::score_completion(c, ds, &mask, scope)?.rmse_sum);
    }
    let row = ResultRow {
        dataset: entry.name.clone(),
        mechanism: spec.mechanism,
        pattern: spec.pattern,
        t: spec.t,
        method: method.to_string(),
        scores,
    };
    let downstream = match &entry.target {
        Some(target) => {
            let ecfg = eval_config(entry, target, cfg, seed);
            let s = downstream::compare_methods(&[(method.name(), &result.completions)], None, &ecfg)?;
            Some(DownstreamRow {
                dataset: entry.name.clone(),
                mechanism: Some(spec.mechanism),
                pattern: Some(spec.pattern),
                t: Some(spec.t),
                method: method.to_string(),
                score: s[0].score,
            })
        }
        None => None,
    };

    fsutil::write_json(&dir.join("scores.json"), &row)?;
    if let Some(d) = &downstream {
        fsutil::write_json(&dir.join("downstream.json"), d)?;
    }
    let mut manifest = RunManifest::new(
        "bench",
        serde_json::json!({ "dataset": entry, "spec": spec, "settings": settings, "scope": cfg.scope }),
        seed,
        started,
    );
    manifest.inputs.push(InputDigest::of(&entry.path)?);
    manifest.runs = result.runs.iter().map(RunSummary::from).collect();
    manifest.outputs = vec!["scores.json".into()];
    if downstream.is_some() {
        manifest.outputs.push("downstream.json".into());
    }
    manifest.finished_at = Utc::now();
    // written last: its presence marks the cell complete
    fsutil::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(CellOutcome { row, downstream })
}

fn eval_config(entry: &DatasetEntry, target: &str, cfg: &BenchConfig, seed: u64) -> EvalConfig {
    EvalConfig {
        task: entry.task,
        folds: cfg.downstream.folds,
        repeats: cfg.downstream.repeats,
        neighbors: cfg.downstream.neighbors,
        seed,
        ..EvalConfig::new(target)
    }
}

fn resume_cell(dir: &Path) -> Result<CellOutcome> {
    let row = fsutil::read_json(&dir.join("scores.json"))?;
    let ds_path = dir.join("downstream.json");
    let downstream = if ds_path.exists() { Some(fsutil::read_json(&ds_path)?) } else { None };
    Ok(CellOutcome { row, downstream })
}

pub fn run(cfg: &BenchConfig, seed: u64, out: &Path, workers: usize) -> Result<BenchReport> {
    let mut report = BenchReport {
        seed,
        downstream_model: model_label(cfg.downstream.neighbors),
        results: Vec::new(),
        summary: Vec::new(),
        ratios: Vec::new(),
        downstream: Vec::new(),
        failures: Vec::new(),
        computed: Vec::new(),
    };
    for entry in &cfg.datasets {
        let schema = io::read_schema_opt(entry.schema.as_deref())?;
        let ds = match io::read_csv(&entry.path, schema) {
            Ok(ds) => ds,
            Err(e) => {
                report.failures.push(CellFailure {
                    cell: entry.name.clone(),
                    error: format!("{e:#}"),
                });
                continue;
            }
        };
        if let Some(target) = &entry.target {
            match downstream::cross_validate(&ds, &eval_config(entry, target, cfg, seed)) {
                Ok(r) => report.downstream.push(DownstreamRow {
                    dataset: entry.name.clone(),
                    mechanism: None,
                    pattern: None,
                    t: None,
                    method: "truth".into(),
                    score: r.score,
                }),
                Err(e) => report.failures.push(CellFailure {
                    cell: format!("{}/truth", entry.name),
                    error: e.to_string(),
                }),
            }
        }
        for &mechanism in &cfg.mechanisms {
            for &pattern in &cfg.patterns {
                for &t in &cfg.proportions {
                    let spec = MissingnessSpec::new(mechanism, pattern, t, seed);
                    for &method in &cfg.methods {
                        let id = cell_id(&entry.name, &spec, method);
                        let dir = out.join("cells").join(&id);
                        let outcome = if dir.join("manifest.json").exists() {
                            log::info!("resuming {id}");
                            resume_cell(&dir).with_context(|| format!("resuming {id}"))
                        } else {
                            log::info!("running {id}");
                            report.computed.push(id.clone());
                            run_cell(entry, &ds, cfg, &spec, method, seed, &dir, workers)
                        };
                        match outcome {
                            Ok(o) => {
                                report.results.push(o.row);
                                report.downstream.extend(o.downstream);
                            }
                            Err(e) => {
                                log::warn!("{id} failed: {e:#}");
                                report.failures.push(CellFailure {
                                    cell: id,
                                    error: format!("{e:#}"),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    report.summary = metrics::summarize(&report.results);
    report.ratios = metrics::error_ratios(&report.results, Method::Dae.name());
    write_reports(&report, cfg, out)?;
    Ok(report)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn write_reports(report: &BenchReport, cfg: &BenchConfig, out: &Path) -> Result<()> {
    fsutil::write_json(&out.join("summary.json"), report)?;

    let others: Vec<Method> = cfg.methods.iter().copied().filter(|&m| m != Method::Dae).collect();
    let ratio_of = |s: &SummaryRow, other: Method| {
        report
            .ratios
            .iter()
            .find(|r| {
                r.dataset == s.dataset
                    && r.mechanism == s.mechanism
                    && r.pattern == s.pattern
                    && r.t == s.t
                    && r.method == s.method
                    && r.against == other.name()
            })
            .map(|r| r.error_ratio.to_string())
            .unwrap_or_default()
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["dataset", "mechanism", "pattern", "t", "method", "k", "mean", "min", "max", "pooled"]
        .map(String::from)
        .to_vec();
    header.extend(others.iter().map(|m| format!("er_vs_{m}")));
    w.write_record(&header)?;
    for s in &report.summary {
        let mut row = vec![
            s.dataset.clone(),
            s.mechanism.to_string(),
            s.pattern.to_string(),
            s.t.to_string(),
            s.method.clone(),
            s.k.to_string(),
            s.mean.to_string(),
            s.min.to_string(),
            s.max.to_string(),
            metrics::Pooled { mean: s.mean, min: s.min, max: s.max }.to_string(),
        ];
        row.extend(others.iter().map(|&m| ratio_of(s, m)));
        w.write_record(&row)?;
    }
    fsutil::atomic_write(&out.join("summary.csv"), &finish(w)?)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "mechanism", "pattern", "t", "method", "against", "error_ratio"])?;
    for r in &report.ratios {
        w.write_record([
            r.dataset.clone(),
            r.mechanism.to_string(),
            r.pattern.to_string(),
            r.t.to_string(),
            r.method.clone(),
            r.against.clone(),
            r.error_ratio.to_string(),
        ])?;
    }
    fsutil::atomic_write(&out.join("ratios.csv"), &finish(w)?)?;

    if !report.downstream.is_empty() {
        let mut rows: BTreeMap<(String, String, String, String, String), f64> = BTreeMap::new();
        let opt = |o: Option<String>| o.unwrap_or_else(|| "-".into());
        for d in &report.downstream {
            rows.insert(
                (
                    d.dataset.clone(),
                    opt(d.mechanism.map(|m| m.to_string())),
                    opt(d.pattern.map(|p| p.to_string())),
                    opt(d.t.map(|t| t.to_string())),
                    d.method.clone(),
                ),
                d.score,
            );
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", "mechanism", "pattern", "t", "method", "score"])?;
        for ((a, b, c, d, e), s) in rows {
            w.write_record([a, b, c, d, e, s.to_string()])?;
        }
        fsutil::atomic_write(&out.join("downstream.csv"), &finish(w)?)?;
    }
    Ok(())
}
