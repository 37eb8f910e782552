//! Subcommand implementations. Each takes parsed arguments and returns the
//! paths it wrote.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use chrono::Utc;
use clap::{Args, ValueEnum};
use imputekit_core::dae::TrainConfig;
use imputekit_core::data::Dataset;
use imputekit_core::downstream::{self, EvalConfig, Task};
use imputekit_core::metrics::{self, Pooled, ScoreReport, ScoreScope};
use imputekit_core::mi::restrict_to_rows;
use imputekit_core::missingness::{self, Mechanism, MissingnessSpec, Pattern};
use imputekit_core::nn::NesterovConfig;
use serde::{Deserialize, Serialize};

use crate::fsutil::{self, default_prefix, with_suffix};
use crate::io;
use crate::manifest::{InputDigest, Provenance, RunManifest, RunSummary};
use crate::methods::{self, Method, Settings};
use crate::parallel;

#[derive(Debug, Args)]
pub struct InduceArgs {
    /// Complete input CSV.
    pub input: PathBuf,
    #[arg(long = "mech", default_value = "mcar")]
    pub mechanism: Mechanism,
    #[arg(long, default_value = "uniform")]
    pub pattern: Pattern,
    /// Row-selection threshold.
    #[arg(long, default_value_t = 0.2)]
    pub t: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Column schema JSON (inferred from the CSV when absent).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output path prefix; defaults to the input path without extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct InduceOutputs {
    pub masked: PathBuf,
    pub truth: PathBuf,
    pub provenance: PathBuf,
}

pub fn induce(args: &InduceArgs) -> Result<InduceOutputs> {
    let ds = io::read_csv(&args.input, io::read_schema_opt(args.schema.as_deref())?)?;
    let spec = MissingnessSpec::new(args.mechanism, args.pattern, args.t, args.seed);
    let ind = missingness::induce(&ds, &spec)?;
    let stats = missingness::achieved_stats(&ind);
    let prefix = args.out.clone().unwrap_or_else(|| default_prefix(&args.input, None));
    let out = InduceOutputs {
        masked: with_suffix(&prefix, ".masked.csv"),
        truth: with_suffix(&prefix, ".truth.csv"),
        provenance: with_suffix(&prefix, ".provenance.json"),
    };
    let prov = Provenance::new(InputDigest::of(&args.input)?, &ind, stats);
    io::write_csv(&out.masked, &ind.observed)?;
    io::write_csv(&out.truth, &ind.truth)?;
    fsutil::write_json(&out.provenance, &prov)?;
    log::info!(
        "masked {} of {} cells ({:.4})",
        prov.stats.cells_masked,
        ds.n_rows() * ds.n_cols(),
        prov.stats.overall
    );
    Ok(out)
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    /// CSV with missing cells.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "dae")]
    pub method: Method,
    /// Number of imputed datasets.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Width increment between successive encoder layers.
    #[arg(long, default_value_t = 7)]
    pub theta: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    /// Input corruption probability.
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    /// Fraction of rows used to train each run.
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub target_mse: f64,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// Leave placeholder entries out of the reconstruction loss.
    #[arg(long)]
    pub observed_loss_only: bool,
    /// Chained-equation sweeps.
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Predictive-mean-matching donor pool size.
    #[arg(long, default_value_t = 5)]
    pub donors: usize,
    /// Take every setting from an earlier impute manifest instead of flags.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    /// Column schema JSON (a provenance file also works).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output path prefix; defaults to the input path without extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = parallel::WORKERS_ENV)]
    pub workers: Option<usize>,
}

impl ImputeArgs {
    pub fn settings(&self) -> Result<Settings> {
        if let Some(path) = &self.from_manifest {
            let m: RunManifest = fsutil::read_json(path)?;
            let s = m.config.get("settings").context("manifest has no settings")?;
            return Ok(serde_json::from_value::<Settings>(s.clone())?.resolved());
        }
        let mut s = Settings::new(self.method, self.k, self.seed);
        s.mi.theta = self.theta;
        s.mi.split_ratio = self.split;
        s.mi.train = TrainConfig {
            epochs: self.epochs,
            input_dropout: self.dropout,
            target_mse: self.target_mse,
            batch_size: self.batch_size,
            optimizer: NesterovConfig {
                momentum: self.momentum,
                learning_rate: self.learning_rate,
                ..NesterovConfig::default()
            },
            observed_loss_only: self.observed_loss_only,
            ..TrainConfig::default()
        };
        s.chained.iterations = self.iterations;
        s.chained.donors = self.donors;
        Ok(s.resolved())
    }
}

pub struct ImputeOutputs {
    pub completions: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn completion_path(prefix: &Path, run: usize) -> PathBuf {
    with_suffix(prefix, &format!(".imp{}.csv", run + 1))
}

pub fn impute(args: &ImputeArgs) -> Result<ImputeOutputs> {
    let started = Utc::now();
    let settings = args.settings()?;
    let ds = io::read_csv(&args.input, io::read_schema_opt(args.schema.as_deref())?)?;
    let workers = args.workers.unwrap_or_else(parallel::default_workers);
    let result = methods::impute(&ds, &settings, workers)?;

    let prefix = args.out.clone().unwrap_or_else(|| default_prefix(&args.input, None));
    let out = ImputeOutputs {
        completions: (0..settings.k()).map(|i| completion_path(&prefix, i)).collect(),
        manifest: with_suffix(&prefix, ".manifest.json"),
    };
    let mut manifest = RunManifest::new(
        "impute",
        serde_json::json!({ "settings": settings, "schema": ds.schema() }),
        settings.mi.master_seed,
        started,
    );
    manifest.inputs.push(InputDigest::of(&args.input)?);
    if let Some(s) = &args.schema {
        manifest.inputs.push(InputDigest::of(s)?);
    }
    manifest.runs = result.runs.iter().map(RunSummary::from).collect();

    let mut write = || -> Result<()> {
        for (path, completion) in out.completions.iter().zip(&result.completions) {
            io::write_csv(path, completion)?;
            let back = io::read_csv(path, Some(ds.schema().to_vec()))?;
            ensure!(back == *completion, "{} did not read back identically", path.display());
        }
        manifest.outputs = out.completions.iter().map(|p| p.display().to_string()).collect();
        manifest.finished_at = Utc::now();
        fsutil::write_json(&out.manifest, &manifest)
    };
    if let Err(e) = write() {
        let mut all = out.completions.clone();
        all.push(out.manifest.clone());
        fsutil::remove_all(&all);
        return Err(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Every masked cell.
    All,
    /// Masked cells in each run's held-out rows (needs the impute manifest).
    Test,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Completed CSVs, one per imputation.
    #[arg(required = true)]
    pub completions: Vec<PathBuf>,
    #[arg(long)]
    pub truth: PathBuf,
    /// Provenance JSON written by `induce` (supplies mask and schema).
    #[arg(long)]
    pub provenance: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub scope: Scope,
    /// Impute manifest; required for `--scope test`, names the method.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Method label for the report.
    #[arg(long)]
    pub method: Option<String>,
    /// Another method's score report; adds the error ratio against it.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Output prefix for `<prefix>.json` and `<prefix>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub against: String,
    pub against_mean: f64,
    /// Our mean over theirs; below one means ours is lower.
    pub error_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFile {
    pub method: String,
    pub scope: Scope,
    pub attributes: Vec<String>,
    pub truth: InputDigest,
    pub provenance: InputDigest,
    pub completions: Vec<InputDigest>,
    pub runs: Vec<ScoreReport>,
    pub rmse_sums: Vec<f64>,
    pub pooled: Pooled,
    /// `mean(min,max)` with one decimal.
    pub pooled_display: String,
    pub comparison: Option<Comparison>,
}

pub fn score(args: &ScoreArgs) -> Result<ScoreFile> {
    let prov: Provenance = fsutil::read_json(&args.provenance)?;
    let truth = io::read_csv(&args.truth, Some(prov.schema.clone()))?;
    ensure!(
        truth.n_rows() == prov.n_rows && prov.induced_mask.len() == truth.n_rows() * truth.n_cols(),
        "truth has {}×{} cells but the provenance mask covers {} rows / {} cells",
        truth.n_rows(),
        truth.n_cols(),
        prov.n_rows,
        prov.induced_mask.len()
    );
    ensure!(truth.missing_count() == 0, "truth table has missing cells");
    let manifest: Option<RunManifest> = args.manifest.as_deref().map(fsutil::read_json).transpose()?;
    if args.scope == Scope::Test && manifest.is_none() {
        bail!("--scope test needs --manifest");
    }
    let method = args
        .method
        .clone()
        .or_else(|| {
            let m = manifest.as_ref()?.config.get("settings")?.get("method")?;
            m.as_str().map(str::to_owned)
        })
        .unwrap_or_else(|| "unknown".into());

    let mut runs = Vec::new();
    for (i, path) in args.completions.iter().enumerate() {
        let completed = io::read_csv(path, Some(prov.schema.clone()))?;
        ensure!(
            completed.n_rows() == truth.n_rows(),
            "{} has {} rows, truth has {}",
            path.display(),
            completed.n_rows(),
            truth.n_rows()
        );
        let (mask, scope) = match args.scope {
            Scope::All => (prov.induced_mask.clone(), ScoreScope::AllMissing),
            Scope::Test => {
                let m = manifest.as_ref().expect("checked above");
                let rows = m
                    .runs
                    .get(i)
                    .and_then(|r| r.test_rows.as_ref())
                    .with_context(|| format!("manifest has no test rows for run {}", i + 1))?;
                (restrict_to_rows(&prov.induced_mask, truth.n_cols(), rows), ScoreScope::TestMissing)
            }
        };
        runs.push(metrics::score_completion(&completed, &truth, &mask, scope)?);
    }
    let rmse_sums: Vec<f64> = runs.iter().map(|r| r.rmse_sum).collect();
    let pooled = metrics::pool(&rmse_sums)?;
    let comparison = match &args.compare {
        Some(path) => {
            let other: ScoreFile = fsutil::read_json(path)?;
            Some(Comparison {
                against: other.method.clone(),
                against_mean: other.pooled.mean,
                error_ratio: metrics::error_ratio(&rmse_sums, &other.rmse_sums)?,
            })
        }
        None => None,
    };
    let report = ScoreFile {
        method,
        scope: args.scope,
        attributes: prov.schema.iter().map(|c| c.name.clone()).collect(),
        truth: InputDigest::of(&args.truth)?,
        provenance: InputDigest::of(&args.provenance)?,
        completions: args.completions.iter().map(|p| InputDigest::of(p)).collect::<Result<_>>()?,
        rmse_sums,
        pooled_display: pooled.to_string(),
        pooled,
        runs,
        comparison,
    };
    fsutil::write_json(&with_suffix(&args.out, ".json"), &report)?;
    fsutil::atomic_write(&with_suffix(&args.out, ".csv"), &score_csv(&report)?)?;
    Ok(report)
}

fn score_csv(report: &ScoreFile) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["run".to_owned(), "rmse_sum".into(), "cells_scored".into()];
    header.extend(report.attributes.iter().cloned());
    w.write_record(&header)?;
    for (i, r) in report.runs.iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), r.rmse_sum.to_string(), r.cells_scored.to_string()];
        row.extend(r.per_attribute_rmse.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    let mut pooled = vec!["pooled".to_owned(), report.pooled_display.clone(), String::new()];
    pooled.extend(report.attributes.iter().map(|_| String::new()));
    w.write_record(&pooled)?;
    if let Some(c) = &report.comparison {
        let mut row = vec![format!("error_ratio_vs_{}", c.against), c.error_ratio.to_string(), String::new()];
        row.extend(report.attributes.iter().map(|_| String::new()));
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Classification,
    Regression,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Classification => Task::Classification,
            TaskArg::Regression => Task::Regression,
        }
    }
}

#[derive(Debug, Args)]
pub struct DownstreamArgs {
    /// Completed CSVs of one method.
    #[arg(required = true)]
    pub completions: Vec<PathBuf>,
    /// Column to predict.
    #[arg(long)]
    pub target: String,
    /// Inferred from the target column's kind when absent.
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Neighbours of the k-NN predictor.
    #[arg(long, default_value_t = 5)]
    pub neighbors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "imputed")]
    pub method: String,
    /// Complete reference table, reported as method `truth`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output prefix for `<prefix>.json` and `<prefix>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamFile {
    /// The predictor used, stated explicitly since it differs from a
    /// random forest.
    pub model: String,
    pub config: EvalConfig,
    pub inputs: Vec<InputDigest>,
    pub scores: Vec<downstream::MethodScore>,
    pub degenerate_target: bool,
}

pub fn model_label(neighbors: usize) -> String {
    format!("k-nearest neighbours (k={neighbors}, Euclidean on encoded features)")
}

pub fn evaluate_downstream(args: &DownstreamArgs) -> Result<DownstreamFile> {
    let schema = io::read_schema_opt(args.schema.as_deref())?;
    let load = |p: &Path| io::read_csv(p, schema.clone());
    let completions: Vec<Dataset> = args.completions.iter().map(|p| load(p)).collect::<Result<_>>()?;
    let truth = args.truth.as_deref().map(load).transpose()?;
    let cfg = EvalConfig {
        task: args.task.map(Task::from),
        folds: args.folds,
        repeats: args.repeats,
        neighbors: args.neighbors,
        seed: args.seed,
        ..EvalConfig::new(args.target.clone())
    };
    let degenerate_target = completions
        .iter()
        .chain(&truth)
        .map(|d| downstream::cross_validate(d, &cfg).map(|r| r.degenerate_target))
        .collect::<imputekit_core::Result<Vec<_>>>()?
        .into_iter()
        .any(|d| d);
    if degenerate_target {
        log::warn!("target `{}` has a single class; accuracy is trivially 1", args.target);
    }
    let scores = downstream::compare_methods(&[(args.method.as_str(), &completions)], truth.as_ref(), &cfg)?;
    let mut inputs: Vec<InputDigest> = args.completions.iter().map(|p| InputDigest::of(p)).collect::<Result<_>>()?;
    if let Some(t) = &args.truth {
        inputs.push(InputDigest::of(t)?);
    }
    let report = DownstreamFile {
        model: model_label(args.neighbors),
        config: cfg,
        inputs,
        scores,
        degenerate_target,
    };
    fsutil::write_json(&with_suffix(&args.out, ".json"), &report)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "score", "completions"])?;
    for s in &report.scores {
        w.write_record([s.method.clone(), s.score.to_string(), s.per_completion.len().to_string()])?;
    }
    fsutil::atomic_write(&with_suffix(&args.out, ".csv"), &w.into_inner().map_err(|e| e.into_error())?)?;
    Ok(report)
}
