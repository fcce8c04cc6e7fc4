//! Synthetic two-cohort leukemia-style dataset used as the bundled example.
//!
//! 59 internal and 234 historical controls with a binary remission outcome
//! (`cr2`) and eight baseline covariates. The historical cohort has markedly
//! higher `log_WBC`, slightly more high-risk and non-white patients, and a
//! small residual outcome deficit that no covariate explains.

use psborrow_core::rng::substream;
use psborrow_core::{Dataset, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::csv_io::ColumnRoles;

pub const FIXTURE_SEED: u64 = 3_105_031;
pub const N_INTERNAL: usize = 59;
pub const N_HISTORICAL: usize = 234;

pub const COVARIATES: [&str; 8] = [
    "log_age",
    "log_WBC",
    "log_BM",
    "log_MRD",
    "CNS",
    "race",
    "low_risk",
    "high_risk",
];

pub fn roles() -> ColumnRoles {
    ColumnRoles {
        outcome: "cr2".into(),
        historical: "historical".into(),
        covariates: COVARIATES.iter().map(|s| s.to_string()).collect(),
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn gauss<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal").sample(rng)
}

pub fn synthetic_aml(seed: u64) -> Result<Dataset> {
    let mut rng = substream(seed, 0);
    let n = N_INTERNAL + N_HISTORICAL;
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * COVARIATES.len());
    let mut historical = Vec::with_capacity(n);
    for i in 0..n {
        let hist = i >= N_INTERNAL;
        let h = f64::from(u8::from(hist));
        let log_age = round3(gauss(&mut rng, 2.2 + 0.05 * h, 0.8));
        let log_wbc = round3(gauss(&mut rng, 3.0 + 0.55 * h, 1.2));
        let log_bm = round3(gauss(&mut rng, 4.1 + 0.05 * h, 0.3).min(4.605));
        let log_mrd = round3(gauss(&mut rng, -2.5 - 0.04 * h, 1.5));
        let cns = f64::from(u8::from(rng.random::<f64>() < 0.10 - 0.04 * h));
        let race = f64::from(u8::from(rng.random::<f64>() < 0.10 + 0.04 * h));
        let u: f64 = rng.random();
        let (low, high) = if u < 0.38 {
            (1.0, 0.0)
        } else if u < 0.38 + 0.15 + 0.05 * h {
            (0.0, 1.0)
        } else {
            (0.0, 0.0)
        };
        let logit = 3.2 - 0.7 * (log_wbc - 3.0) - 0.8 * high + 0.4 * low - 0.3 * h;
        let cr = f64::from(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-logit).exp())));
        y.push(cr);
        x.extend_from_slice(&[log_age, log_wbc, log_bm, log_mrd, cns, race, low, high]);
        historical.push(hist);
    }
    Dataset::new(y, x, COVARIATES.len(), historical)
}
