//! `analyze`: borrowing analysis of a user-supplied two-cohort CSV.

use std::path::PathBuf;

use psborrow_core::borrow::a0_grid;
use psborrow_core::ps::fit_weighted_logistic_with;
use psborrow_core::{
    balance_table, ipw_odds_weights, run_bb, summarize, BbRun, BorrowDraw, Estimator, IrlsOptions,
    OutcomeKind, PosteriorSummary, PsPolicy, SamplerOptions,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::csv_io::{parse_dataset_csv, ColumnRoles};
use crate::error::{CliError, Result};
use crate::manifest::{config_hash, sha256_file, Manifest, OutputDir};
use crate::with_threads;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub input: PathBuf,
    pub outcome: OutcomeKind,
    pub columns: ColumnRoles,
    pub boots: usize,
    pub seed: u64,
    pub level: f64,
    pub grid_step: f64,
    pub policy: PsPolicy,
    pub odds_cap: Option<f64>,
    pub out_dir: PathBuf,
    /// Worker threads; never changes results.
    pub threads: Option<usize>,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.boots < 1 {
            return Err(CliError::Config("--boots must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CliError::Config(format!(
                "--level must be in (0, 1), got {}",
                self.level
            )));
        }
        a0_grid(self.grid_step)?;
        if let Some(cap) = self.odds_cap {
            if !(cap > 0.0) {
                return Err(CliError::Config(format!(
                    "--odds-cap must be positive, got {cap}"
                )));
            }
        }
        Ok(())
    }

    fn sampler(&self) -> SamplerOptions {
        SamplerOptions {
            grid_step: self.grid_step,
            policy: self.policy,
            odds_cap: self.odds_cap,
            irls: IrlsOptions::default(),
        }
    }

    /// The fields that determine the results (not paths or thread counts).
    fn result_key(&self) -> serde_json::Value {
        json!({
            "outcome": self.outcome,
            "columns": self.columns,
            "boots": self.boots,
            "seed": self.seed,
            "level": self.level,
            "grid_step": self.grid_step,
            "policy": self.policy,
            "odds_cap": self.odds_cap,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub estimator: Estimator,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub draws: usize,
    /// `median(sd)` as reported in trial summaries.
    pub report: String,
}

impl From<&PosteriorSummary> for SummaryRow {
    fn from(s: &PosteriorSummary) -> Self {
        SummaryRow {
            estimator: s.estimator,
            mean: s.mean,
            median: s.median,
            sd: s.sd,
            lower: s.lower,
            upper: s.upper,
            level: s.level,
            draws: s.draws,
            report: format!("{:.2}({:.3})", s.median, s.sd),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceEntry {
    pub covariate: String,
    pub estimate: f64,
    pub raw_diff: f64,
    pub weighted_diff: f64,
}

#[derive(Debug, Serialize)]
struct DrawRow {
    replicate: usize,
    value: f64,
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub summaries: Vec<PosteriorSummary>,
    pub balance: Vec<BalanceEntry>,
    pub run: BbRun,
    pub manifest: PathBuf,
}

impl AnalysisReport {
    pub fn summary(&self, estimator: Estimator) -> &PosteriorSummary {
        self.summaries
            .iter()
            .find(|s| s.estimator == estimator)
            .expect("all estimators summarized")
    }
}

/// Runs the bootstrap analysis and writes `summary.csv`, `summary.json`,
/// `draws_<estimator>.csv`, `replicates.csv`, `balance.csv` and `manifest.json`.
pub fn cmd_analyze(config: &AnalysisConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let loaded = parse_dataset_csv(&config.input, &config.columns, config.outcome)?;
    let data = &loaded.dataset;
    let opts = config.sampler();

    let run = with_threads(config.threads, || {
        run_bb(data, config.outcome, config.boots, config.seed, &opts)
    })??;
    let summaries = summarize(&run.draws, config.level)?;

    // Balance uses the single unit-weight maximum-likelihood fit.
    let ones = vec![1.0; data.n()];
    let fit = fit_weighted_logistic_with(data, &ones, &opts.irls)?;
    if !fit.converged {
        return Err(CliError::Core(psborrow_core::Error::NonConvergence {
            replicate: 0,
            reason: "unit-weight propensity fit used for the balance table".into(),
        }));
    }
    let odds = ipw_odds_weights(&fit, data, &ones, config.odds_cap)?;
    let balance: Vec<BalanceEntry> = balance_table(data, &odds)
        .into_iter()
        .map(|row| BalanceEntry {
            covariate: loaded.covariates[row.covariate].clone(),
            estimate: fit.gamma[row.covariate + 1],
            raw_diff: row.raw_diff,
            weighted_diff: row.weighted_diff,
        })
        .collect();

    let mut out = OutputDir::create(&config.out_dir)?;
    let rows: Vec<SummaryRow> = summaries.iter().map(SummaryRow::from).collect();
    out.write_csv("summary.csv", &rows)?;
    out.write_json(
        "summary.json",
        &json!({ "summaries": rows, "requested": run.requested, "dropped": run.dropped }),
    )?;
    for est in Estimator::ALL {
        out.write_csv(
            &format!("draws_{est}.csv"),
            run.draws.iter().map(|d: &BorrowDraw| DrawRow {
                replicate: d.replicate,
                value: d.mu(est),
            }),
        )?;
    }
    out.write_csv("replicates.csv", &run.draws)?;
    out.write_csv("balance.csv", &balance)?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "analyze",
        seed: config.seed,
        boots: config.boots,
        config_hash: config_hash(&config.result_key())?,
        config: serde_json::to_value(config)?,
        input_sha256: Some(sha256_file(&config.input)?),
        outputs: Vec::new(),
        details: json!({
            "n_internal": data.n_internal(),
            "n_historical": data.n_historical(),
            "covariates": loaded.covariates,
            "dropped_replicates": run.dropped,
        }),
    };
    let manifest = out.finish(manifest)?;
    Ok(AnalysisReport {
        summaries,
        balance,
        run,
        manifest,
    })
}
