//! Weighted summaries, special functions and Bayesian-bootstrap weights.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// One Bayesian-bootstrap weight realization over `n` subjects.
///
/// Entries are strictly positive and scaled to mean one, i.e. `n` times a
/// uniform Dirichlet draw. Every estimator downstream is invariant to the
/// overall scale of the weights, so sum-to-one and mean-one conventions give
/// identical results.
#[derive(Debug, Clone, PartialEq)]
pub struct BBWeights(Vec<f64>);

impl BBWeights {
    /// Unit weights, which make every weighted estimator its unweighted form.
    pub fn uniform(n: usize) -> Self {
        BBWeights(vec![1.0; n])
    }

    /// Wraps caller-supplied weights; all entries must be finite and positive.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSize(
                "bootstrap weights must be non-empty".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::DegenerateWeights(format!(
                "bootstrap weight {bad} is not strictly positive"
            )));
        }
        Ok(BBWeights(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Draws `n` standard exponentials and divides them by their sample mean.
///
/// Consumes exactly `n` exponential variates from `rng`.
pub fn draw_bb_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<BBWeights> {
    if n == 0 {
        return Err(Error::InvalidSize(
            "cannot draw bootstrap weights for n = 0".into(),
        ));
    }
    let mut xi: Vec<f64> = (0..n)
        .map(|_| {
            let e: f64 = rng.sample(Exp1);
            e.max(f64::MIN_POSITIVE)
        })
        .collect();
    let mean = xi.iter().sum::<f64>() / n as f64;
    for w in &mut xi {
        *w /= mean;
    }
    Ok(BBWeights(xi))
}

fn check_weights(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::Shape {
            what: "weights vs values",
            expected: values.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::DegenerateWeights(format!(
            "weight {w} is negative or non-finite"
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights("all weights are zero".into()));
    }
    Ok(total)
}

/// `Σ wᵢyᵢ / Σ wᵢ`.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Result<f64> {
    let total = check_weights(values, weights)?;
    let num: f64 = values.iter().zip(weights).map(|(y, w)| w * y).sum();
    Ok(num / total)
}

/// Weighted sample variance with weights renormalized to sum to the number of
/// observations `m`, divided by `m - 1`.
///
/// With mean-one weights this is the `normwt = FALSE` unbiased estimator of
/// Hmisc's `wtd.var`; for other weight scales it applies the renormalization
/// explicitly, so the result never depends on the scale of `weights`.
pub fn weighted_variance(values: &[f64], weights: &[f64]) -> Result<f64> {
    let total = check_weights(values, weights)?;
    let positive = weights.iter().filter(|w| **w > 0.0).count();
    if positive < 2 {
        return Err(Error::DegenerateSample(format!(
            "weighted variance needs at least 2 positively weighted observations, got {positive}"
        )));
    }
    let m = values.len() as f64;
    let mean = values.iter().zip(weights).map(|(y, w)| w * y).sum::<f64>() / total;
    let scale = m / total;
    let ss: f64 = values
        .iter()
        .zip(weights)
        .map(|(y, w)| w * scale * (y - mean) * (y - mean))
        .sum();
    Ok(ss / (m - 1.0))
}

/// Remainder of Stirling's series, `ln Γ(x) - [(x - ½) ln x - x + ln √(2π)]`,
/// for `x ≥ 10`. Seven terms bring the truncation error below 1e-17.
fn stirling_correction(x: f64) -> f64 {
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let x2 = 1.0 / (x * x);
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * x2 + c;
    }
    acc / x
}

/// Natural log of the gamma function for `x > 0`.
///
/// Arguments below 10 are shifted up with `Γ(x) = Γ(x + k) / (x (x+1) ⋯ (x+k-1))`
/// and the asymptotic series is applied at `x + k ≥ 10`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < 10.0 {
        prod *= shifted;
        shifted += 1.0;
    }
    let base =
        (shifted - 0.5) * shifted.ln() - shifted + LN_SQRT_2PI + stirling_correction(shifted);
    Ok(base - prod.ln())
}

/// `ln B(a, b) = ln Γ(a) + ln Γ(b) - ln Γ(a + b)` for real `a, b > 0`.
///
/// When either argument is large the Stirling terms are cancelled
/// analytically instead of differencing three large log-gammas.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "log_beta requires a, b > 0, got ({a}, {b})"
        )));
    }
    let (p, q) = if a <= b { (a, b) } else { (b, a) };
    let sum = p + q;
    if p >= 10.0 {
        let corr = stirling_correction(p) + stirling_correction(q) - stirling_correction(sum);
        Ok(
            -0.5 * q.ln()
                + LN_SQRT_2PI
                + corr
                + (p - 0.5) * (p / sum).ln()
                + q * (-p / sum).ln_1p(),
        )
    } else if q >= 10.0 {
        let corr = stirling_correction(q) - stirling_correction(sum);
        Ok(ln_gamma(p)? + corr + p - p * sum.ln() + (q - 0.5) * (-p / sum).ln_1p())
    } else {
        Ok(ln_gamma(p)? + ln_gamma(q)? - ln_gamma(sum)?)
    }
}

/// Type-7 (linear interpolation) empirical quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}
