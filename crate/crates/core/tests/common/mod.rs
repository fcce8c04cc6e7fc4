//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here calls into the estimator code paths being checked; the
//! crate is used only for `Dataset` accessors and for random streams.
#![allow(dead_code)]

use psborrow_core::rng::substream;
use psborrow_core::Dataset;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dataset with `n` subjects, historical membership drawn from a logistic
/// model in `p` standard-normal covariates.
pub fn logistic_dataset(seed: u64, n: usize, p: usize, coef: f64) -> Dataset {
    let mut rng = substream(seed, 11);
    loop {
        let mut x = Vec::with_capacity(n * p);
        let mut h = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let mut lin = -0.2;
            for j in 0..p {
                let v: f64 = rng.sample(StandardNormal);
                lin += coef * v / (j as f64 + 1.0);
                x.push(v);
            }
            h.push(rng.random::<f64>() < 1.0 / (1.0 + (-lin).exp()));
            y.push(lin + rng.sample::<f64, _>(StandardNormal));
        }
        if let Ok(d) = Dataset::new(y, x, p, h) {
            return d;
        }
    }
}

/// Gradient ascent on the weighted mean log-likelihood with step 1e-2, at most
/// 10⁶ iterations (stops early once the gradient is below 1e-14).
pub fn gd_logistic(data: &Dataset, weights: &[f64]) -> Vec<f64> {
    let q = data.p() + 1;
    let total: f64 = weights.iter().sum();
    let mut gamma = vec![0.0; q];
    let mut grad = vec![0.0; q];
    for _ in 0..1_000_000 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..data.n() {
            let row = data.row(i);
            let mut eta = gamma[0];
            for j in 0..data.p() {
                eta += gamma[j + 1] * row[j];
            }
            let e = 1.0 / (1.0 + (-eta).exp());
            let r = weights[i] * (if data.is_historical(i) { 1.0 } else { 0.0 } - e) / total;
            grad[0] += r;
            for j in 0..data.p() {
                grad[j + 1] += r * row[j];
            }
        }
        let mut max = 0.0f64;
        for j in 0..q {
            gamma[j] += 1e-2 * grad[j];
            max = max.max(grad[j].abs());
        }
        if max < 1e-14 {
            break;
        }
    }
    gamma
}

/// `wtd.var(x, w)` with `normwt = FALSE`, the unbiased frequency-weight form.
pub fn wtd_var(x: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let xbar: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    x.iter()
        .zip(w)
        .map(|(a, b)| b * (a - xbar).powi(2))
        .sum::<f64>()
        / (sw - 1.0)
}

fn mean_of_products(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

fn renormalize(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x / m).collect()
}

/// Straight-line transcription of one replicate of the reference R code,
/// given shared bootstrap weights `xi` and fitted propensities `ps`.
/// Returns (no, full, dynamic, dynamic_ipw, a0, a0_ipw).
pub struct Transcribed {
    pub muc: f64,
    pub muf: f64,
    pub mu0: f64,
    pub mups: f64,
    pub a0: f64,
    pub aps: f64,
    pub muh: f64,
    pub muh_ipw: f64,
}

fn arms(data: &Dataset, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut c = Vec::new();
    let mut h = Vec::new();
    for i in 0..data.n() {
        if data.is_historical(i) {
            h.push(v[i]);
        } else {
            c.push(v[i]);
        }
    }
    (c, h)
}

pub fn transcribe_normal(data: &Dataset, xi: &[f64], ps: &[f64]) -> Transcribed {
    let (yc, yh) = arms(data, data.y());
    let (wi, vi) = arms(data, xi);
    let (_, ps_h) = arms(data, ps);
    let nc = yc.len() as f64;
    let nh = yh.len() as f64;
    let wi = renormalize(&wi);
    let vi = renormalize(&vi);
    let muc = mean_of_products(&yc, &wi);
    let muh = mean_of_products(&yh, &vi);
    let muf = (yc
        .iter()
        .zip(arms(data, xi).0.iter())
        .map(|(y, w)| y * w)
        .sum::<f64>()
        + yh.iter()
            .zip(arms(data, xi).1.iter())
            .map(|(y, w)| y * w)
            .sum::<f64>())
        / xi.iter().sum::<f64>();
    let sigc = wtd_var(&yc, &wi) / nc;
    let sigh = wtd_var(&yh, &vi) / nh;
    let a0 = sigh / (((muc - muh).powi(2)).max(sigc + sigh) - sigc);
    let sig0 = 1.0 / (1.0 / sigc + a0 / sigh);
    let mu0 = (muc / sigc + a0 * muh / sigh) * sig0;

    let odd: Vec<f64> = ps_h
        .iter()
        .zip(&vi)
        .map(|(p, v)| (1.0 - p) / p * v)
        .collect();
    let odd = renormalize(&odd);
    let muh_ipw = mean_of_products(&yh, &odd);
    let sigh = wtd_var(&yh, &odd) / nh;
    let aps = sigh / (((muc - muh_ipw).powi(2)).max(sigc + sigh) - sigc);
    let sig0 = 1.0 / (1.0 / sigc + aps / sigh);
    let mups = (muc / sigc + aps * muh_ipw / sigh) * sig0;
    Transcribed {
        muc,
        muf,
        mu0,
        mups,
        a0,
        aps,
        muh,
        muh_ipw,
    }
}

pub fn transcribe_binomial(data: &Dataset, xi: &[f64], ps: &[f64]) -> Transcribed {
    use statrs::function::beta::ln_beta;
    let (yc, yh) = arms(data, data.y());
    let (wi, vi) = arms(data, xi);
    let (_, ps_h) = arms(data, ps);
    let nc = yc.len() as f64;
    let nh = yh.len() as f64;
    let wi = renormalize(&wi);
    let vi = renormalize(&vi);
    let muc: f64 = yc.iter().zip(&wi).map(|(a, b)| a * b).sum();
    let muh: f64 = yh.iter().zip(&vi).map(|(a, b)| a * b).sum();
    let muf = (muh + muc + 1.0) / (nc + nh + 2.0);
    let va0: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
    let argmax = |muh: f64| {
        let ll: Vec<f64> = va0
            .iter()
            .map(|a| {
                ln_beta(a * muh + muc + 1.0, a * (nh - muh) + nc - muc + 1.0)
                    - ln_beta(a * muh + 1.0, a * (nh - muh) + 1.0)
            })
            .collect();
        let best = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        va0.iter()
            .zip(&ll)
            .filter(|(_, l)| **l == best)
            .map(|(a, _)| *a)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let a0 = argmax(muh);
    let mu0 = (a0 * muh + muc + 1.0) / (nc + a0 * nh + 2.0);
    let odd: Vec<f64> = ps_h
        .iter()
        .zip(&vi)
        .map(|(p, v)| (1.0 - p) / p * v)
        .collect();
    let odd = renormalize(&odd);
    let muh_ipw: f64 = yh.iter().zip(&odd).map(|(a, b)| a * b).sum();
    let aps = argmax(muh_ipw);
    let mups = (aps * muh_ipw + muc + 1.0) / (nc + aps * nh + 2.0);
    Transcribed {
        muc: muc / nc,
        muf,
        mu0,
        mups,
        a0,
        aps,
        muh: muh / nh,
        muh_ipw: muh_ipw / nh,
    }
}
