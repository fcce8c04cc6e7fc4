//! `simulate`: operating characteristics over a grid of (p, b) cells.

use std::path::PathBuf;

use psborrow_core::borrow::a0_grid;
use psborrow_core::{
    run_simulation, Estimator, IrlsOptions, MetricsRow, OutcomeKind, PsPolicy, SamplerOptions,
    SimConfig, SimulationOutput,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::manifest::{config_hash, Manifest, OutputDir};
use crate::with_threads;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub outcome: OutcomeKind,
    pub ps: Vec<usize>,
    pub bs: Vec<f64>,
    pub beta: f64,
    pub n0: usize,
    pub nh: usize,
    pub nsim: usize,
    pub boots: usize,
    pub seed: u64,
    pub grid_step: f64,
    pub policy: PsPolicy,
    pub odds_cap: Option<f64>,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

impl SimulateConfig {
    /// Every cell uses the same seed, so cells differing only in `b` share
    /// their underlying normal draws.
    pub fn cells(&self) -> Vec<SimConfig> {
        let sampler = SamplerOptions {
            grid_step: self.grid_step,
            policy: self.policy,
            odds_cap: self.odds_cap,
            irls: IrlsOptions::default(),
        };
        self.ps
            .iter()
            .flat_map(|&p| {
                self.bs.iter().map(move |&b| SimConfig {
                    p,
                    b,
                    beta: self.beta,
                    n0: self.n0,
                    nh: self.nh,
                    outcome: self.outcome,
                    nsim: self.nsim,
                    boots: self.boots,
                    seed: self.seed,
                    sampler,
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ps.is_empty() || self.bs.is_empty() {
            return Err(CliError::Config("the (p, b) grid is empty".into()));
        }
        a0_grid(self.grid_step)?;
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }

    fn result_key(&self) -> serde_json::Value {
        json!({
            "outcome": self.outcome,
            "ps": self.ps,
            "bs": self.bs,
            "beta": self.beta,
            "n0": self.n0,
            "nh": self.nh,
            "nsim": self.nsim,
            "boots": self.boots,
            "seed": self.seed,
            "grid_step": self.grid_step,
            "policy": self.policy,
            "odds_cap": self.odds_cap,
        })
    }
}

#[derive(Debug, Serialize)]
struct PooledDrawRow {
    p: usize,
    b: f64,
    sim: usize,
    replicate: usize,
    value: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub outputs: Vec<SimulationOutput>,
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<(usize, String)>,
    pub manifest: PathBuf,
}

/// Runs every cell, writes `metrics.csv`, `draws_<estimator>.csv` and
/// `manifest.json`. A failing cell is recorded and the remaining cells still
/// run; the call then returns [`CliError::CellFailures`].
pub fn cmd_simulate(config: &SimulateConfig) -> Result<SimulateReport> {
    config.validate()?;
    let cells = config.cells();
    let results: Vec<_> = with_threads(config.threads, || {
        cells.iter().map(run_simulation).collect::<Vec<_>>()
    })?;

    let mut outputs = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outputs.push(o),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    let rows: Vec<MetricsRow> = outputs
        .iter()
        .flat_map(|o| o.rows.iter().cloned())
        .collect();

    let mut out = OutputDir::create(&config.out_dir)?;
    out.write_csv("metrics.csv", &rows)?;
    for est in Estimator::ALL {
        let pooled = outputs.iter().flat_map(|o| {
            o.runs.iter().enumerate().flat_map(move |(sim, run)| {
                run.draws.iter().map(move |d| PooledDrawRow {
                    p: o.config.p,
                    b: o.config.b,
                    sim,
                    replicate: d.replicate,
                    value: d.mu(est),
                })
            })
        });
        out.write_csv(&format!("draws_{est}.csv"), pooled)?;
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        seed: config.seed,
        boots: config.boots,
        config_hash: config_hash(&config.result_key())?,
        config: serde_json::to_value(config)?,
        input_sha256: None,
        outputs: Vec::new(),
        details: json!({
            "cells": cells.iter().map(|c| json!({"p": c.p, "b": c.b})).collect::<Vec<_>>(),
            "failures": failures.iter().map(|(i, e)| json!({"cell": i, "p": cells[*i].p, "b": cells[*i].b, "error": e})).collect::<Vec<_>>(),
        }),
    };
    let manifest = out.finish(manifest)?;
    if !failures.is_empty() {
        return Err(CliError::CellFailures {
            failed: failures.len(),
            total: cells.len(),
        });
    }
    Ok(SimulateReport {
        outputs,
        rows,
        failures,
        manifest,
    })
}
