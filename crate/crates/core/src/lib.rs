//! Propensity-score adjusted Bayesian dynamic borrowing of historical controls.
//!
//! Historical control subjects are reweighted by inverse-probability odds
//! from a propensity model, combined with the internal control arm through a
//! power prior whose discount `a₀` is set by empirical Bayes, and the whole
//! chain is repeated under Bayesian-bootstrap weights to produce approximate
//! posterior draws of the control mean.

pub mod borrow;
pub mod data;
pub mod error;
pub mod ps;
pub mod rng;
pub mod sampler;
pub mod sim;
pub mod stats;

pub use borrow::{
    a0_log_marginal_binomial, eb_a0_binomial, eb_a0_normal, posterior_binomial, posterior_normal,
    BinomialSummaries, NormalSummaries, PosteriorParams,
};
pub use data::{Dataset, OutcomeKind};
pub use error::{Error, Result};
pub use ps::{
    balance_table, fit_weighted_logistic, fit_weighted_logistic_with, ipw_odds_weights, BalanceRow,
    IrlsOptions, PsFit,
};
pub use sampler::{
    bb_replicate, run_bb, summarize, BbRun, BorrowDraw, Estimator, PosteriorSummary, PsPolicy,
    SamplerOptions,
};
pub use sim::{generate_dataset, run_simulation, MetricsRow, SimConfig, SimulationOutput};
pub use stats::{draw_bb_weights, log_beta, weighted_mean, weighted_variance, BBWeights};
