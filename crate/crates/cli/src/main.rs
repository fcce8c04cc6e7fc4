use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use psborrow_cli::fixture::{self, FIXTURE_SEED};
use psborrow_cli::{
    cmd_analyze, cmd_simulate, write_dataset_csv, AnalysisConfig, CliError, ColumnRoles,
    SimulateConfig,
};
use psborrow_core::{Estimator, OutcomeKind, PsPolicy};

#[derive(Parser)]
#[command(
    name = "psborrow",
    version,
    about = "Propensity-score adjusted Bayesian dynamic borrowing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior of the control mean for a two-cohort CSV.
    Analyze(AnalyzeArgs),
    /// Bias / variance / MSE of the four estimators on simulated trials.
    Simulate(SimulateArgs),
    /// Write the bundled synthetic two-cohort dataset.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = FIXTURE_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "normal")]
    outcome: OutcomeKind,
    #[arg(long, default_value_t = 1000)]
    boots: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.02)]
    grid_step: f64,
    #[arg(long, default_value = "fail")]
    ps_policy: PsPolicy,
    #[arg(long)]
    odds_cap: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "y")]
    outcome_col: String,
    #[arg(long, default_value = "historical")]
    historical_col: String,
    /// Comma-separated covariate columns; default is every other column.
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long = "p", value_delimiter = ',', default_value = "5")]
    ps: Vec<usize>,
    #[arg(long = "b", value_delimiter = ',', default_value = "0,0.15,0.3,0.6")]
    bs: Vec<f64>,
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
    #[arg(long, default_value_t = 100)]
    n0: usize,
    #[arg(long, default_value_t = 100)]
    nh: usize,
    #[arg(long, default_value_t = 1000)]
    nsim: usize,
    #[command(flatten)]
    common: Common,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(a) => {
            let config = AnalysisConfig {
                input: a.input,
                outcome: a.common.outcome,
                columns: ColumnRoles {
                    outcome: a.outcome_col,
                    historical: a.historical_col,
                    covariates: a.covariates,
                },
                boots: a.common.boots,
                seed: a.common.seed,
                level: a.level,
                grid_step: a.common.grid_step,
                policy: a.common.ps_policy,
                odds_cap: a.common.odds_cap,
                out_dir: a.common.out,
                threads: a.common.threads,
            };
            let report = cmd_analyze(&config)?;
            for s in &report.summaries {
                println!(
                    "{:<15} median {:.4}  sd {:.4}  [{:.4}, {:.4}]",
                    s.estimator.name(),
                    s.median,
                    s.sd,
                    s.lower,
                    s.upper
                );
            }
            if !report.run.dropped.is_empty() {
                println!("dropped replicates: {}", report.run.dropped.len());
            }
        }
        Command::Simulate(s) => {
            let config = SimulateConfig {
                outcome: s.common.outcome,
                ps: s.ps,
                bs: s.bs,
                beta: s.beta,
                n0: s.n0,
                nh: s.nh,
                nsim: s.nsim,
                boots: s.common.boots,
                seed: s.common.seed,
                grid_step: s.common.grid_step,
                policy: s.common.ps_policy,
                odds_cap: s.common.odds_cap,
                out_dir: s.common.out,
                threads: s.common.threads,
            };
            let report = cmd_simulate(&config)?;
            println!(
                "{:>3} {:>5} {:<15} {:>8} {:>8} {:>8} {:>9}",
                "p", "b", "method", "bias", "var", "mse", "var ratio"
            );
            for r in &report.rows {
                println!(
                    "{:>3} {:>5} {:<15} {:>8.3} {:>8.3} {:>8.3} {:>9.3}",
                    r.p,
                    r.b,
                    Estimator::name(r.method),
                    r.bias,
                    r.variance,
                    r.mse,
                    r.variance_ratio
                );
            }
        }
        Command::Fixture { out, seed } => {
            let data = fixture::synthetic_aml(seed)?;
            write_dataset_csv(&out, &data, &fixture::roles())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::FAILURE
        }
    }
}
