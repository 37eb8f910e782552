//! The imputation methods behind a single name.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use imputekit_core::baselines::{self, ChainedConfig, ChainedPlan};
use imputekit_core::data::Dataset;
use imputekit_core::mi::{MiConfig, MiPlan, MiResult, RunOutput, RunRecord};
use serde::{Deserialize, Serialize};

use crate::parallel::run_indexed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Overcomplete denoising autoencoder.
    Dae,
    /// Column mean / modal label; every completion is identical.
    Meanmode,
    /// Chained equations with predictive mean matching.
    Cepmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dae => "dae",
            Method::Meanmode => "meanmode",
            Method::Cepmm => "cepmm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dae" => Method::Dae,
            "meanmode" => Method::Meanmode,
            "cepmm" => Method::Cepmm,
            _ => bail!("unknown method `{s}` (expected dae, meanmode or cepmm)"),
        })
    }
}

/// Everything needed to reproduce an imputation. `k` and the master seed
/// live in `mi` and are mirrored into `chained` by [`Settings::resolved`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub method: Method,
    pub mi: MiConfig,
    pub chained: ChainedConfig,
}

impl Settings {
    pub fn new(method: Method, k: usize, seed: u64) -> Self {
        Self {
            method,
            mi: MiConfig {
                k,
                master_seed: seed,
                ..MiConfig::default()
            },
            chained: ChainedConfig::default(),
        }
        .resolved()
    }

    pub fn resolved(mut self) -> Self {
        self.chained.k = self.mi.k;
        self.chained.seed = self.mi.master_seed;
        self
    }

    pub fn k(&self) -> usize {
        self.mi.k
    }
}

/// Runs the k imputations of `settings.method` on up to `workers` threads.
/// The output is identical for every worker count.
pub fn impute(ds: &Dataset, settings: &Settings, workers: usize) -> Result<MiResult> {
    let s = settings.resolved();
    let outputs = match s.method {
        Method::Dae => {
            let plan = MiPlan::new(ds, s.mi)?;
            run_indexed(s.k(), workers, |i| plan.run(i))?
        }
        Method::Cepmm => {
            let plan = ChainedPlan::new(ds, s.chained)?;
            run_indexed(s.k(), workers, |i| plan.run(i))?
        }
        Method::Meanmode => {
            if s.k() == 0 {
                bail!("k must be at least 1");
            }
            let completion = baselines::mean_mode_impute(ds)?;
            (0..s.k())
                .map(|run| RunOutput {
                    completion: completion.clone(),
                    record: RunRecord {
                        run,
                        seed: s.mi.run_seed(run),
                        history: None,
                        test_rows: None,
                    },
                })
                .collect()
        }
    };
    Ok(MiResult::from_runs(outputs))
}
