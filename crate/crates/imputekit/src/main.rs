use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use imputekit::{bench, commands, parallel};

#[derive(Parser)]
#[command(name = "imputekit", version, about = "Denoising-autoencoder multiple imputation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mask a complete CSV; writes masked, truth and provenance files.
    Induce(commands::InduceArgs),
    /// Produce k completed CSVs and a manifest.
    Impute(commands::ImputeArgs),
    /// Score completions against the truth.
    Score(commands::ScoreArgs),
    /// Cross-validate a k-NN predictor on completed tables.
    EvaluateDownstream(commands::DownstreamArgs),
    /// Run a configured experiment grid.
    Bench {
        /// Grid configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Master seed (mandatory).
        #[arg(long)]
        seed: u64,
        #[arg(long, env = parallel::WORKERS_ENV)]
        workers: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Induce(a) => {
            let o = commands::induce(&a)?;
            println!("{}\n{}\n{}", o.masked.display(), o.truth.display(), o.provenance.display());
        }
        Command::Impute(a) => {
            let o = commands::impute(&a)?;
            for p in &o.completions {
                println!("{}", p.display());
            }
            println!("{}", o.manifest.display());
        }
        Command::Score(a) => {
            let r = commands::score(&a)?;
            println!("{} rmse_sum {}", r.method, r.pooled_display);
            if let Some(c) = &r.comparison {
                println!("error ratio vs {}: {:.4}", c.against, c.error_ratio);
            }
        }
        Command::EvaluateDownstream(a) => {
            let r = commands::evaluate_downstream(&a)?;
            for s in &r.scores {
                println!("{} {:.4}", s.method, s.score);
            }
        }
        Command::Bench { config, out, seed, workers } => {
            let cfg = bench::BenchConfig::load(&config)?;
            let workers = workers.unwrap_or_else(parallel::default_workers);
            let r = bench::run(&cfg, seed, &out, workers)?;
            for s in &r.summary {
                println!(
                    "{} {}-{} t={} {}: {}",
                    s.dataset,
                    s.mechanism,
                    s.pattern,
                    s.t,
                    s.method,
                    imputekit_core::metrics::Pooled { mean: s.mean, min: s.min, max: s.max }
                );
            }
            for f in &r.failures {
                eprintln!("failed {}: {}", f.cell, f.error);
            }
            return Ok(r.failures.is_empty());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
