//! Bayesian-bootstrap replicates of the borrowing posterior.
//!
//! Each replicate draws one set of bootstrap weights `ξ`, refits the
//! propensity model under `ξ`, and evaluates four estimators of the
//! control mean from the same weights:
//!
//! * `no_borrowing`: the `ξ`-weighted internal mean;
//! * `full_borrowing`: both arms pooled with `a₀ = 1`;
//! * `dynamic`: EB power prior on the plain `ξ`-weighted historical mean;
//! * `dynamic_ipw`: EB power prior on the odds-weighted historical mean.
//!
//! A replicate reports the posterior *mean* given its weights, not a draw from
//! the conditional posterior, so the spread of replicate values reflects
//! bootstrap uncertainty only.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::borrow::{
    eb_a0_binomial, eb_a0_normal, posterior_binomial, posterior_normal, BinomialSummaries,
    NormalSummaries,
};
use crate::data::{Dataset, OutcomeKind};
use crate::error::{Error, Result};
use crate::ps::{fit_weighted_logistic_lenient, ipw_odds_weights, IrlsOptions, PsFit};
use crate::rng::substream;
use crate::stats::{
    draw_bb_weights, mean, quantile_sorted, sample_variance, weighted_mean, weighted_variance,
    BBWeights,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    NoBorrowing,
    FullBorrowing,
    Dynamic,
    DynamicIpw,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::NoBorrowing,
        Estimator::FullBorrowing,
        Estimator::Dynamic,
        Estimator::DynamicIpw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::NoBorrowing => "no_borrowing",
            Estimator::FullBorrowing => "full_borrowing",
            Estimator::Dynamic => "dynamic",
            Estimator::DynamicIpw => "dynamic_ipw",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What to do with a replicate whose propensity fit fails or does not converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsPolicy {
    #[default]
    Fail,
    DropReplicate,
    /// Keep the last iterate; its propensities are already clamped to the floor.
    FloorClamp,
}

impl fmt::Display for PsPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsPolicy::Fail => "fail",
            PsPolicy::DropReplicate => "drop-replicate",
            PsPolicy::FloorClamp => "floor-clamp",
        })
    }
}

impl FromStr for PsPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fail" => Ok(PsPolicy::Fail),
            "drop-replicate" => Ok(PsPolicy::DropReplicate),
            "floor-clamp" => Ok(PsPolicy::FloorClamp),
            other => Err(Error::Config(format!(
                "unknown propensity policy '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerOptions {
    /// Spacing of the binomial `a₀` grid.
    pub grid_step: f64,
    pub policy: PsPolicy,
    pub odds_cap: Option<f64>,
    #[serde(skip)]
    pub irls: IrlsOptions,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            grid_step: 0.02,
            policy: PsPolicy::Fail,
            odds_cap: None,
            irls: IrlsOptions::default(),
        }
    }
}

/// Output of one bootstrap replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorrowDraw {
    pub replicate: usize,
    pub no_borrowing: f64,
    pub full_borrowing: f64,
    pub dynamic: f64,
    pub dynamic_ipw: f64,
    pub a0_dynamic: f64,
    pub a0_dynamic_ipw: f64,
    pub ps_converged: bool,
    /// `ξ`-weighted internal mean.
    pub y0_hat: f64,
    /// `ξ`-weighted historical mean, unadjusted.
    pub yh_hat: f64,
    /// Odds-weighted historical mean.
    pub yh_ipw: f64,
    /// Weighted variances of the three means above (variance of the mean scale).
    pub s0_sq: f64,
    pub sh_sq: f64,
    pub sh_ipw_sq: f64,
}

impl BorrowDraw {
    pub fn mu(&self, estimator: Estimator) -> f64 {
        match estimator {
            Estimator::NoBorrowing => self.no_borrowing,
            Estimator::FullBorrowing => self.full_borrowing,
            Estimator::Dynamic => self.dynamic,
            Estimator::DynamicIpw => self.dynamic_ipw,
        }
    }
}

/// Intermediate quantities of a replicate, kept for auditing.
#[derive(Debug, Clone)]
pub struct ReplicateTrace {
    pub xi: BBWeights,
    pub fit: PsFit,
    pub odds_weights: Vec<f64>,
}

/// Evaluates all four estimators for fixed bootstrap weights and propensity fit.
pub fn borrow_from_weights(
    data: &Dataset,
    kind: OutcomeKind,
    xi: &[f64],
    fit: &PsFit,
    opts: &SamplerOptions,
    replicate: usize,
) -> Result<(BorrowDraw, Vec<f64>)> {
    let odds = ipw_odds_weights(fit, data, xi, opts.odds_cap)?;
    let (y_int, y_hist) = data.split(data.y());
    let (xi_int, xi_hist) = data.split(xi);
    let (_, odds_hist) = data.split(&odds);
    let n0 = data.n_internal();
    let nh = data.n_historical();

    let y0_hat = weighted_mean(&y_int, &xi_int)?;
    let yh_hat = weighted_mean(&y_hist, &xi_hist)?;
    let yh_ipw = weighted_mean(&y_hist, &odds_hist)?;
    let s0_sq = weighted_variance(&y_int, &xi_int)? / n0 as f64;
    let sh_sq = weighted_variance(&y_hist, &xi_hist)? / nh as f64;
    let sh_ipw_sq = weighted_variance(&y_hist, &odds_hist)? / nh as f64;

    let (full, dynamic, dynamic_ipw, a0_dynamic, a0_dynamic_ipw) = match kind {
        OutcomeKind::Normal => {
            let full = weighted_mean(data.y(), xi)?;
            let plain = NormalSummaries::new(y0_hat, yh_hat, s0_sq, sh_sq)?;
            let adjusted = NormalSummaries::new(y0_hat, yh_ipw, s0_sq, sh_ipw_sq)?;
            let a0 = eb_a0_normal(&plain);
            let a0_ipw = eb_a0_normal(&adjusted);
            (
                full,
                posterior_normal(&plain, a0)?.mu_hat,
                posterior_normal(&adjusted, a0_ipw)?.mu_hat,
                a0,
                a0_ipw,
            )
        }
        OutcomeKind::Binomial => {
            let y0_eff = n0 as f64 * y0_hat;
            let plain = BinomialSummaries::new(nh as f64 * yh_hat, nh, y0_eff, n0)?;
            let adjusted = BinomialSummaries::new(nh as f64 * yh_ipw, nh, y0_eff, n0)?;
            let a0 = eb_a0_binomial(&plain, opts.grid_step)?;
            let a0_ipw = eb_a0_binomial(&adjusted, opts.grid_step)?;
            (
                posterior_binomial(&plain, 1.0)?.mu_hat,
                posterior_binomial(&plain, a0)?.mu_hat,
                posterior_binomial(&adjusted, a0_ipw)?.mu_hat,
                a0,
                a0_ipw,
            )
        }
    };

    let draw = BorrowDraw {
        replicate,
        no_borrowing: y0_hat,
        full_borrowing: full,
        dynamic,
        dynamic_ipw,
        a0_dynamic,
        a0_dynamic_ipw,
        ps_converged: fit.converged,
        y0_hat,
        yh_hat,
        yh_ipw,
        s0_sq,
        sh_sq,
        sh_ipw_sq,
    };
    Ok((draw, odds))
}

/// One bootstrap replicate, returning its intermediate quantities as well.
/// `Ok(None)` means the replicate was dropped under [`PsPolicy::DropReplicate`].
pub fn bb_replicate_traced<R: Rng + ?Sized>(
    data: &Dataset,
    kind: OutcomeKind,
    rng: &mut R,
    replicate: usize,
    opts: &SamplerOptions,
) -> Result<Option<(BorrowDraw, ReplicateTrace)>> {
    let xi = draw_bb_weights(data.n(), rng)?;
    let (fit, failure) = fit_weighted_logistic_lenient(data, xi.as_slice(), &opts.irls)?;
    if failure.is_some() || !fit.converged {
        let reason = match failure {
            Some(err) => err.to_string(),
            None => format!("no convergence after {} iterations", fit.iterations),
        };
        match opts.policy {
            PsPolicy::Fail => return Err(Error::NonConvergence { replicate, reason }),
            PsPolicy::DropReplicate => return Ok(None),
            PsPolicy::FloorClamp => {}
        }
    }
    let (draw, odds_weights) =
        borrow_from_weights(data, kind, xi.as_slice(), &fit, opts, replicate)?;
    Ok(Some((
        draw,
        ReplicateTrace {
            xi,
            fit,
            odds_weights,
        },
    )))
}

pub fn bb_replicate<R: Rng + ?Sized>(
    data: &Dataset,
    kind: OutcomeKind,
    rng: &mut R,
    replicate: usize,
    opts: &SamplerOptions,
) -> Result<Option<BorrowDraw>> {
    Ok(bb_replicate_traced(data, kind, rng, replicate, opts)?.map(|(d, _)| d))
}

/// Draws of a full bootstrap run, ordered by replicate index.
#[derive(Debug, Clone, PartialEq)]
pub struct BbRun {
    pub requested: usize,
    pub draws: Vec<BorrowDraw>,
    /// Replicates removed under [`PsPolicy::DropReplicate`].
    pub dropped: Vec<usize>,
}

impl BbRun {
    pub fn values(&self, estimator: Estimator) -> Vec<f64> {
        self.draws.iter().map(|d| d.mu(estimator)).collect()
    }
}

/// Runs `boots` replicates; replicate `i` uses substream `i` of `seed`.
///
/// Replicates run on the current rayon pool; the output does not depend on
/// its size.
pub fn run_bb(
    data: &Dataset,
    kind: OutcomeKind,
    boots: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<BbRun> {
    if boots == 0 {
        return Err(Error::InvalidSize(
            "number of bootstrap replicates must be at least 1".into(),
        ));
    }
    data.check_outcome(kind)?;
    let results: Vec<Option<BorrowDraw>> = (0..boots)
        .into_par_iter()
        .map(|i| bb_replicate(data, kind, &mut substream(seed, i as u64), i, opts))
        .collect::<Result<_>>()?;
    let mut draws = Vec::with_capacity(boots);
    let mut dropped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Some(d) => draws.push(d),
            None => dropped.push(i),
        }
    }
    Ok(BbRun {
        requested: boots,
        draws,
        dropped,
    })
}

/// Empirical posterior summary of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub estimator: Estimator,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub draws: usize,
}

pub fn summarize_values(
    estimator: Estimator,
    values: &[f64],
    level: f64,
) -> Result<PosteriorSummary> {
    if values.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "posterior summary needs at least 2 draws, got {}",
            values.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "credible level must be in (0, 1), got {level}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(PosteriorSummary {
        estimator,
        mean: mean(values),
        median: quantile_sorted(&sorted, 0.5),
        sd: sample_variance(values).sqrt(),
        lower: quantile_sorted(&sorted, tail),
        upper: quantile_sorted(&sorted, 1.0 - tail),
        level,
        draws: values.len(),
    })
}

/// Summaries for all four estimators, in [`Estimator::ALL`] order.
pub fn summarize(draws: &[BorrowDraw], level: f64) -> Result<Vec<PosteriorSummary>> {
    Estimator::ALL
        .iter()
        .map(|&est| {
            let values: Vec<f64> = draws.iter().map(|d| d.mu(est)).collect();
            summarize_values(est, &values, level)
        })
        .collect()
}
