//! Synthetic trials with covariate-driven population shift, and the
//! operating characteristics of the four estimators on them.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, OutcomeKind};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream, DATA_STREAM};
use crate::sampler::{run_bb, BbRun, Estimator, SamplerOptions};
use crate::stats::{mean, sample_variance};

/// One simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub p: usize,
    /// Historical covariates are centred at `-b` in every coordinate.
    pub b: f64,
    /// Common outcome coefficient for every covariate.
    pub beta: f64,
    pub n0: usize,
    pub nh: usize,
    pub outcome: OutcomeKind,
    pub nsim: usize,
    pub boots: usize,
    pub seed: u64,
    pub sampler: SamplerOptions,
}

impl SimConfig {
    /// Defaults: 100 subjects per arm, `beta = 0.3`, 1000 simulations of 100 replicates.
    pub fn new(p: usize, b: f64, outcome: OutcomeKind) -> Self {
        SimConfig {
            p,
            b,
            beta: 0.3,
            n0: 100,
            nh: 100,
            outcome,
            nsim: 1000,
            boots: 100,
            seed: 20_210_601,
            sampler: SamplerOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(Error::Config("p must be at least 1".into()));
        }
        if self.n0 < 10 || self.nh < 10 {
            return Err(Error::Config(format!(
                "arm sizes must be at least 10, got n0 = {}, nh = {}",
                self.n0, self.nh
            )));
        }
        if self.nsim < 1 || self.boots < 1 {
            return Err(Error::Config("nsim and boots must be at least 1".into()));
        }
        if !self.b.is_finite() || !self.beta.is_finite() {
            return Err(Error::Config("b and beta must be finite".into()));
        }
        Ok(())
    }

    /// Population control mean of the internal arm.
    ///
    /// For binary outcomes `E[logistic(βᵀX)] = 1/2` because `βᵀX` is
    /// symmetric about zero when `X ~ N(0, I)`.
    pub fn true_mean(&self) -> f64 {
        match self.outcome {
            OutcomeKind::Normal => 0.0,
            OutcomeKind::Binomial => 0.5,
        }
    }
}

/// Draws one trial: `n0` internal controls followed by `nh` historical controls.
pub fn generate_dataset<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<Dataset> {
    let n = cfg.n0 + cfg.nh;
    let mut x = Vec::with_capacity(n * cfg.p);
    let mut y = Vec::with_capacity(n);
    let mut historical = Vec::with_capacity(n);
    for i in 0..n {
        let hist = i >= cfg.n0;
        let shift = if hist { -cfg.b } else { 0.0 };
        let mut lin = 0.0;
        for _ in 0..cfg.p {
            let z: f64 = rng.sample(StandardNormal);
            let v = z + shift;
            lin += cfg.beta * v;
            x.push(v);
        }
        let outcome = match cfg.outcome {
            OutcomeKind::Normal => lin + rng.sample::<f64, _>(StandardNormal),
            OutcomeKind::Binomial => {
                let prob = 1.0 / (1.0 + (-lin).exp());
                f64::from(u8::from(rng.random::<f64>() < prob))
            }
        };
        y.push(outcome);
        historical.push(hist);
    }
    Dataset::new(y, x, cfg.p, historical)
}

/// Operating characteristics of one estimator in one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub p: usize,
    pub b: f64,
    pub method: Estimator,
    pub bias: f64,
    /// Variance of all posterior draws pooled across simulations.
    pub variance: f64,
    pub mse: f64,
    pub variance_ratio: f64,
    /// Variance across simulations of the per-simulation posterior means.
    pub estimate_variance: f64,
    pub draws: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub config: SimConfig,
    pub runs: Vec<BbRun>,
    pub rows: Vec<MetricsRow>,
}

impl SimulationOutput {
    /// All draws of `estimator`, simulation-major.
    pub fn pooled(&self, estimator: Estimator) -> Vec<f64> {
        self.runs.iter().flat_map(|r| r.values(estimator)).collect()
    }

    pub fn row(&self, estimator: Estimator) -> &MetricsRow {
        self.rows
            .iter()
            .find(|r| r.method == estimator)
            .expect("every estimator has a metrics row")
    }
}

/// Runs `cfg.nsim` simulated trials, each analysed with `cfg.boots` replicates.
///
/// Bias is the mean posterior draw minus the true mean; variance is taken over
/// the pooled draws; MSE is `bias² + variance`.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let runs: Vec<BbRun> = (0..cfg.nsim)
        .into_par_iter()
        .map(|j| {
            let sim_seed = derive_seed(cfg.seed, j as u64);
            let data = generate_dataset(cfg, &mut substream(sim_seed, DATA_STREAM))?;
            run_bb(&data, cfg.outcome, cfg.boots, sim_seed, &cfg.sampler)
        })
        .collect::<Result<_>>()?;

    let dropped: usize = runs.iter().map(|r| r.dropped.len()).sum();
    let truth = cfg.true_mean();
    let mut rows: Vec<MetricsRow> = Estimator::ALL
        .iter()
        .map(|&est| {
            let pooled: Vec<f64> = runs.iter().flat_map(|r| r.values(est)).collect();
            if pooled.len() < 2 {
                return Err(Error::DegenerateSample(format!(
                    "only {} draws survived for {est}",
                    pooled.len()
                )));
            }
            let per_sim: Vec<f64> = runs
                .iter()
                .filter(|r| !r.draws.is_empty())
                .map(|r| mean(&r.values(est)))
                .collect();
            let bias = mean(&pooled) - truth;
            let variance = sample_variance(&pooled);
            Ok(MetricsRow {
                p: cfg.p,
                b: cfg.b,
                method: est,
                bias,
                variance,
                mse: bias * bias + variance,
                variance_ratio: f64::NAN,
                estimate_variance: sample_variance(&per_sim),
                draws: pooled.len(),
                dropped,
            })
        })
        .collect::<Result<_>>()?;
    let reference = rows[0].variance;
    for row in &mut rows {
        row.variance_ratio = if row.method == Estimator::NoBorrowing {
            1.0
        } else {
            row.variance / reference
        };
    }
    Ok(SimulationOutput {
        config: cfg.clone(),
        runs,
        rows,
    })
}
