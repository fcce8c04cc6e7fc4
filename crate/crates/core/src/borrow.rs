//! Power-prior borrowing with an empirical-Bayes discount `a₀`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::log_beta;

/// Internal and historical means with the variances of those means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalSummaries {
    pub y0_bar: f64,
    pub yh_bar: f64,
    pub s0_sq: f64,
    pub sh_sq: f64,
}

impl NormalSummaries {
    pub fn new(y0_bar: f64, yh_bar: f64, s0_sq: f64, sh_sq: f64) -> Result<Self> {
        let s = NormalSummaries {
            y0_bar,
            yh_bar,
            s0_sq,
            sh_sq,
        };
        if ![y0_bar, yh_bar, s0_sq, sh_sq].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("non-finite normal summaries {s:?}")));
        }
        if !(s0_sq > 0.0 && sh_sq > 0.0) {
            return Err(Error::Domain(format!(
                "variances of the means must be positive, got s0_sq = {s0_sq}, sh_sq = {sh_sq}"
            )));
        }
        Ok(s)
    }
}

/// Effective (possibly fractional) success counts for both control arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialSummaries {
    pub yh_eff: f64,
    pub nh: usize,
    pub y0_eff: f64,
    pub n0: usize,
}

impl BinomialSummaries {
    pub fn new(yh_eff: f64, nh: usize, y0_eff: f64, n0: usize) -> Result<Self> {
        if nh == 0 || n0 == 0 {
            return Err(Error::Domain("binomial arms must be non-empty".into()));
        }
        // Weighted counts can overshoot the bounds by rounding only.
        let tol = 1e-9;
        if !(yh_eff >= -tol && yh_eff <= nh as f64 + tol)
            || !(y0_eff >= -tol && y0_eff <= n0 as f64 + tol)
        {
            return Err(Error::Domain(format!(
                "effective counts out of range: {yh_eff}/{nh} historical, {y0_eff}/{n0} internal"
            )));
        }
        Ok(BinomialSummaries {
            yh_eff: yh_eff.clamp(0.0, nh as f64),
            nh,
            y0_eff: y0_eff.clamp(0.0, n0 as f64),
            n0,
        })
    }
}

/// Posterior of the control mean for a given discount.
///
/// Normal posteriors fill `sig_sq_hat`; binomial posteriors fill the beta
/// parameters. The unused fields are `NaN`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorParams {
    pub a0: f64,
    pub mu_hat: f64,
    pub sig_sq_hat: f64,
    pub beta_a: f64,
    pub beta_b: f64,
}

fn check_a0(a0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a0) {
        return Err(Error::Domain(format!("a0 must lie in [0, 1], got {a0}")));
    }
    Ok(())
}

/// Closed-form EB discount `sh² / (max[(ȳh - ȳ0)², sh² + s0²] - s0²)`.
///
/// Returns exactly 1 whenever the squared difference does not exceed the
/// summed variances.
pub fn eb_a0_normal(s: &NormalSummaries) -> f64 {
    let diff_sq = (s.yh_bar - s.y0_bar).powi(2);
    if diff_sq <= s.sh_sq + s.s0_sq {
        1.0
    } else {
        (s.sh_sq / (diff_sq - s.s0_sq)).min(1.0)
    }
}

/// Normal posterior of the control mean with the historical likelihood raised to `a0`.
pub fn posterior_normal(s: &NormalSummaries, a0: f64) -> Result<PosteriorParams> {
    check_a0(a0)?;
    if a0 == 0.0 {
        // Exactly the internal-only posterior; the general formula loses an ulp.
        return Ok(PosteriorParams {
            a0,
            mu_hat: s.y0_bar,
            sig_sq_hat: s.s0_sq,
            beta_a: f64::NAN,
            beta_b: f64::NAN,
        });
    }
    let sig_sq_hat = 1.0 / (a0 / s.sh_sq + 1.0 / s.s0_sq);
    let mu_hat = sig_sq_hat * (a0 * s.yh_bar / s.sh_sq + s.y0_bar / s.s0_sq);
    Ok(PosteriorParams {
        a0,
        mu_hat,
        sig_sq_hat,
        beta_a: f64::NAN,
        beta_b: f64::NAN,
    })
}

/// Log marginal likelihood of `a0` under a Beta(1, 1) initial prior, up to a constant.
pub fn a0_log_marginal_binomial(a0: f64, s: &BinomialSummaries) -> Result<f64> {
    check_a0(a0)?;
    let nh = s.nh as f64;
    let n0 = s.n0 as f64;
    let hs = a0 * s.yh_eff;
    let hf = a0 * (nh - s.yh_eff);
    Ok(log_beta(hs + s.y0_eff + 1.0, hf + n0 - s.y0_eff + 1.0)? - log_beta(hs + 1.0, hf + 1.0)?)
}

/// Grid points `0, step, 2·step, …, 1`.
pub fn a0_grid(grid_step: f64) -> Result<Vec<f64>> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::Config(format!(
            "grid step must be in (0, 0.5], got {grid_step}"
        )));
    }
    let m = (1.0 / grid_step).round();
    if ((1.0 / grid_step) - m).abs() > 1e-9 * m {
        return Err(Error::Config(format!(
            "1 / grid step must be an integer, got {}",
            1.0 / grid_step
        )));
    }
    let m = m as usize;
    Ok((0..=m).map(|k| k as f64 / m as f64).collect())
}

/// Grid-search maximizer of [`a0_log_marginal_binomial`]; exact ties go to the
/// largest `a0`.
pub fn eb_a0_binomial(s: &BinomialSummaries, grid_step: f64) -> Result<f64> {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for a0 in a0_grid(grid_step)? {
        let ll = a0_log_marginal_binomial(a0, s)?;
        if ll >= best.0 {
            best = (ll, a0);
        }
    }
    Ok(best.1)
}

/// Beta posterior under a Beta(1, 1) prior; `mu_hat` is the posterior mean.
pub fn posterior_binomial(s: &BinomialSummaries, a0: f64) -> Result<PosteriorParams> {
    check_a0(a0)?;
    let beta_a = a0 * s.yh_eff + s.y0_eff + 1.0;
    let beta_b = a0 * (s.nh as f64 - s.yh_eff) + s.n0 as f64 - s.y0_eff + 1.0;
    Ok(PosteriorParams {
        a0,
        mu_hat: beta_a / (a0 * s.nh as f64 + s.n0 as f64 + 2.0),
        sig_sq_hat: f64::NAN,
        beta_a,
        beta_b,
    })
}
