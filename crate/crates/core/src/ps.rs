//! Weighted logistic propensity model and inverse-probability odds weights.
//!
//! The propensity `eᵢ = P(Hᵢ = 1 | Xᵢ)` is the probability of belonging to the
//! historical cohort. Historical subjects are reweighted by the odds
//! `(1 - eᵢ) / eᵢ`, which moves their covariate distribution onto that of the
//! internal controls.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stats::BBWeights;

/// Fitted propensities are clamped to `[PROPENSITY_FLOOR, 1 - PROPENSITY_FLOOR]`.
pub const PROPENSITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub max_iter: usize,
    /// Score tolerance, relative to the total observation weight.
    pub score_tol: f64,
    pub step_tol: f64,
    /// Any coefficient exceeding this in magnitude is treated as separation.
    pub separation_bound: f64,
    pub max_halvings: usize,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions {
            max_iter: 50,
            score_tol: 1e-8,
            step_tol: 1e-8,
            separation_bound: 30.0,
            max_halvings: 30,
        }
    }
}

/// Fitted propensity model. `gamma[0]` is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct PsFit {
    pub gamma: Vec<f64>,
    pub e: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let z = eta.exp();
        z / (1.0 + z)
    }
}

// ln(1 + e^x) without overflow
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn linear_predictor(data: &Dataset, gamma: &[f64], i: usize) -> f64 {
    gamma[0]
        + data
            .row(i)
            .iter()
            .zip(&gamma[1..])
            .map(|(x, g)| x * g)
            .sum::<f64>()
}

fn log_likelihood(data: &Dataset, weights: &[f64], gamma: &[f64]) -> f64 {
    (0..data.n())
        .map(|i| {
            let eta = linear_predictor(data, gamma, i);
            let nll = if data.is_historical(i) {
                softplus(-eta)
            } else {
                softplus(eta)
            };
            -weights[i] * nll
        })
        .sum()
}

/// Score vector `Σ wᵢ (Hᵢ - eᵢ)(1, Xᵢ)` at `gamma`, without clamping.
pub fn weighted_score(data: &Dataset, weights: &[f64], gamma: &[f64]) -> Vec<f64> {
    let q = data.p() + 1;
    let mut score = vec![0.0; q];
    for i in 0..data.n() {
        let e = logistic(linear_predictor(data, gamma, i));
        let r = weights[i] * (f64::from(u8::from(data.is_historical(i))) - e);
        score[0] += r;
        for (s, x) in score[1..].iter_mut().zip(data.row(i)) {
            *s += r * x;
        }
    }
    score
}

fn fitted(data: &Dataset, gamma: &[f64]) -> Vec<f64> {
    (0..data.n())
        .map(|i| {
            logistic(linear_predictor(data, gamma, i))
                .clamp(PROPENSITY_FLOOR, 1.0 - PROPENSITY_FLOOR)
        })
        .collect()
}

fn coefficient_name(j: usize) -> String {
    if j == 0 {
        "intercept".to_string()
    } else {
        format!("covariate {}", j - 1)
    }
}

struct IrlsRun {
    gamma: Vec<f64>,
    iterations: usize,
    converged: bool,
    failure: Option<Error>,
}

fn irls(data: &Dataset, weights: &[f64], opts: &IrlsOptions) -> IrlsRun {
    let n = data.n();
    let q = data.p() + 1;
    let total: f64 = weights.iter().sum();

    // Columns that are identically zero on the weighted sample carry no
    // information; their coefficients stay at zero.
    let active: Vec<usize> = std::iter::once(0)
        .chain((1..q).filter(|&j| (0..n).any(|i| weights[i] > 0.0 && data.row(i)[j - 1] != 0.0)))
        .collect();
    let k = active.len();

    let hist_weight: f64 = (0..n)
        .filter(|&i| data.is_historical(i))
        .map(|i| weights[i])
        .sum();
    let rate = (hist_weight / total).clamp(PROPENSITY_FLOOR, 1.0 - PROPENSITY_FLOOR);
    let mut gamma = vec![0.0; q];
    gamma[0] = (rate / (1.0 - rate)).ln();

    let mut loglik = log_likelihood(data, weights, &gamma);
    let mut z = vec![0.0; k];
    for iter in 1..=opts.max_iter {
        let mut score = vec![0.0; k];
        let mut info = vec![0.0; k * k];
        for i in 0..n {
            let e = logistic(linear_predictor(data, &gamma, i));
            let h = f64::from(u8::from(data.is_historical(i)));
            let row = data.row(i);
            for (zj, &j) in z.iter_mut().zip(&active) {
                *zj = if j == 0 { 1.0 } else { row[j - 1] };
            }
            let r = weights[i] * (h - e);
            let v = weights[i] * e * (1.0 - e);
            for a in 0..k {
                score[a] += r * z[a];
                let vz = v * z[a];
                for b in a..k {
                    info[a * k + b] += vz * z[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                info[a * k + b] = info[b * k + a];
            }
        }

        let max_diag = (0..k).map(|a| info[a * k + a]).fold(0.0, f64::max);
        let chol = DMatrix::from_row_slice(k, k, &info).cholesky();
        let chol = match chol {
            Some(c) if (0..k).all(|a| c.l_dirty()[(a, a)].powi(2) > 1e-13 * max_diag) => c,
            _ => {
                return IrlsRun {
                    gamma,
                    iterations: iter,
                    converged: false,
                    failure: Some(Error::Collinearity),
                }
            }
        };
        let step = chol.solve(&DVector::from_column_slice(&score));
        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let max_step = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));

        let mut t = 1.0;
        let mut candidate = gamma.clone();
        let mut cand_ll;
        let mut halvings = 0;
        loop {
            for (a, &j) in active.iter().enumerate() {
                candidate[j] = gamma[j] + t * step[a];
            }
            cand_ll = log_likelihood(data, weights, &candidate);
            if cand_ll >= loglik - 1e-12 * loglik.abs() || halvings >= opts.max_halvings {
                break;
            }
            t *= 0.5;
            halvings += 1;
        }
        gamma = candidate;
        loglik = cand_ll;

        if max_score < opts.score_tol * total && max_step < opts.step_tol {
            return IrlsRun {
                gamma,
                iterations: iter,
                converged: true,
                failure: None,
            };
        }
        let (j, mag) = gamma
            .iter()
            .enumerate()
            .map(|(j, g)| (j, g.abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag > opts.separation_bound {
            return IrlsRun {
                gamma,
                iterations: iter,
                converged: false,
                failure: Some(Error::Separation {
                    direction: coefficient_name(j),
                    magnitude: mag,
                }),
            };
        }
    }
    IrlsRun {
        gamma,
        iterations: opts.max_iter,
        converged: false,
        failure: None,
    }
}

fn check_weight_len(data: &Dataset, weights: &[f64]) -> Result<()> {
    if weights.len() != data.n() {
        return Err(Error::Shape {
            what: "observation weights",
            expected: data.n(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::DegenerateWeights(
            "observation weights must be nonnegative with positive sum".into(),
        ));
    }
    Ok(())
}

/// Maximizes `Σ ξᵢ [Hᵢ ln eᵢ + (1 - Hᵢ) ln(1 - eᵢ)]` by IRLS with step halving.
///
/// Hitting the iteration limit is not an error: the fit is returned with
/// `converged == false` and the caller decides what to do with it.
pub fn fit_weighted_logistic(data: &Dataset, obs_weights: &BBWeights) -> Result<PsFit> {
    fit_weighted_logistic_with(data, obs_weights.as_slice(), &IrlsOptions::default())
}

pub fn fit_weighted_logistic_with(
    data: &Dataset,
    weights: &[f64],
    opts: &IrlsOptions,
) -> Result<PsFit> {
    let (fit, failure) = fit_weighted_logistic_lenient(data, weights, opts)?;
    match failure {
        Some(err) => Err(err),
        None => Ok(fit),
    }
}

/// Like [`fit_weighted_logistic_with`] but returns the last iterate alongside
/// any separation or collinearity failure instead of discarding it.
pub fn fit_weighted_logistic_lenient(
    data: &Dataset,
    weights: &[f64],
    opts: &IrlsOptions,
) -> Result<(PsFit, Option<Error>)> {
    check_weight_len(data, weights)?;
    let run = irls(data, weights, opts);
    let e = fitted(data, &run.gamma);
    Ok((
        PsFit {
            gamma: run.gamma,
            e,
            converged: run.converged,
            iterations: run.iterations,
        },
        run.failure,
    ))
}

/// Odds weights `ξᵢ (1 - eᵢ) / eᵢ` for historical subjects, scaled to mean one
/// over the historical arm. Internal subjects get weight zero.
///
/// `odds_cap` truncates the odds `(1 - e) / e` before multiplying by `ξ`.
pub fn ipw_odds_weights(
    fit: &PsFit,
    data: &Dataset,
    obs_weights: &[f64],
    odds_cap: Option<f64>,
) -> Result<Vec<f64>> {
    if fit.e.len() != data.n() {
        return Err(Error::Shape {
            what: "fitted propensities",
            expected: data.n(),
            got: fit.e.len(),
        });
    }
    check_weight_len(data, obs_weights)?;
    let mut out = vec![0.0; data.n()];
    let mut sum = 0.0;
    for i in 0..data.n() {
        if data.is_historical(i) {
            let e = fit.e[i].clamp(PROPENSITY_FLOOR, 1.0 - PROPENSITY_FLOOR);
            let mut odds = (1.0 - e) / e;
            if let Some(cap) = odds_cap {
                odds = odds.min(cap);
            }
            out[i] = obs_weights[i] * odds;
            sum += out[i];
        }
    }
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::DegenerateWeights(
            "all historical odds weights are zero".into(),
        ));
    }
    let scale = data.n_historical() as f64 / sum;
    for w in out.iter_mut() {
        *w *= scale;
    }
    Ok(out)
}

/// Raw and odds-weighted covariate mean differences (historical minus internal).
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceRow {
    pub covariate: usize,
    pub raw_diff: f64,
    pub weighted_diff: f64,
}

/// Covariate balance before and after weighting historical subjects by
/// `hist_weights` (as returned by [`ipw_odds_weights`]).
pub fn balance_table(data: &Dataset, hist_weights: &[f64]) -> Vec<BalanceRow> {
    (0..data.p())
        .map(|j| {
            let mut int_sum = 0.0;
            let mut hist_sum = 0.0;
            let mut hist_wsum = 0.0;
            let mut hist_w = 0.0;
            for i in 0..data.n() {
                let x = data.row(i)[j];
                if data.is_historical(i) {
                    hist_sum += x;
                    hist_wsum += hist_weights[i] * x;
                    hist_w += hist_weights[i];
                } else {
                    int_sum += x;
                }
            }
            let int_mean = int_sum / data.n_internal() as f64;
            BalanceRow {
                covariate: j,
                raw_diff: hist_sum / data.n_historical() as f64 - int_mean,
                weighted_diff: hist_wsum / hist_w - int_mean,
            }
        })
        .collect()
}
