use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome family of the control-arm endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Normal,
    Binomial,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeKind::Normal => "normal",
            OutcomeKind::Binomial => "binomial",
        })
    }
}

impl FromStr for OutcomeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(OutcomeKind::Normal),
            "binomial" => Ok(OutcomeKind::Binomial),
            other => Err(Error::Config(format!("unknown outcome kind '{other}'"))),
        }
    }
}

/// Pooled internal and historical control subjects.
///
/// Covariates are stored row-major; row `i` belongs to subject `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    p: usize,
    historical: Vec<bool>,
    n_internal: usize,
    n_historical: usize,
}

impl Dataset {
    /// Validates and builds a dataset from outcomes, row-major covariates with
    /// `p` columns, and historical-control indicators.
    pub fn new(y: Vec<f64>, x: Vec<f64>, p: usize, historical: Vec<bool>) -> Result<Self> {
        let n = y.len();
        if historical.len() != n {
            return Err(Error::Shape {
                what: "historical indicator length",
                expected: n,
                got: historical.len(),
            });
        }
        if x.len() != n * p {
            return Err(Error::Shape {
                what: "covariate entries (n * p)",
                expected: n * p,
                got: x.len(),
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "outcome of subject {i} is not finite"
            )));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "covariate {} of subject {} is not finite",
                k % p.max(1),
                k / p.max(1)
            )));
        }
        let n_historical = historical.iter().filter(|h| **h).count();
        let n_internal = n - n_historical;
        if n_internal < 2 || n_historical < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 internal and 2 historical controls, got {n_internal} and {n_historical}"
            )));
        }
        Ok(Dataset {
            y,
            x,
            p,
            historical,
            n_internal,
            n_historical,
        })
    }

    /// Builds a dataset from per-subject covariate rows.
    pub fn from_rows(y: Vec<f64>, rows: &[Vec<f64>], historical: Vec<bool>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Shape {
                what: "covariate row length",
                expected: p,
                got: rows[i].len(),
            });
        }
        Dataset::new(y, rows.concat(), p, historical)
    }

    /// Checks that outcomes are admissible for `kind` (0/1 for binomial).
    pub fn check_outcome(&self, kind: OutcomeKind) -> Result<()> {
        if kind == OutcomeKind::Binomial {
            if let Some(i) = self.y.iter().position(|v| *v != 0.0 && *v != 1.0) {
                return Err(Error::InvalidDataset(format!(
                    "binomial outcome of subject {i} is {}, expected 0 or 1",
                    self.y[i]
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_internal(&self) -> usize {
        self.n_internal
    }

    pub fn n_historical(&self) -> usize {
        self.n_historical
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn historical(&self) -> &[bool] {
        &self.historical
    }

    pub fn is_historical(&self, i: usize) -> bool {
        self.historical[i]
    }

    /// Splits a per-subject vector into (internal, historical) parts, preserving order.
    pub fn split<T: Copy>(&self, values: &[T]) -> (Vec<T>, Vec<T>) {
        let mut internal = Vec::with_capacity(self.n_internal);
        let mut hist = Vec::with_capacity(self.n_historical);
        for (v, h) in values.iter().zip(&self.historical) {
            if *h {
                hist.push(*v);
            } else {
                internal.push(*v);
            }
        }
        (internal, hist)
    }
}
