//! CSV ingestion and export of control-arm datasets.

use std::fs::File;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};
use psborrow_core::{Dataset, OutcomeKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Which CSV columns hold the outcome, the historical flag and the covariates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRoles {
    pub outcome: String,
    pub historical: String,
    /// Empty means every remaining column, in file order.
    pub covariates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub covariates: Vec<String>,
}

fn column_index(headers: &StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::MissingColumn(name.to_string()))
}

fn cell<'r>(record: &'r StringRecord, idx: usize, column: &str, line: u64) -> Result<&'r str> {
    match record.get(idx) {
        Some(v) if !v.is_empty() && v != "NA" => Ok(v),
        _ => Err(CliError::MissingValue {
            line,
            column: column.to_string(),
        }),
    }
}

fn number(record: &StringRecord, idx: usize, column: &str, line: u64) -> Result<f64> {
    let raw = cell(record, idx, column, line)?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::NonNumeric {
            line,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

/// Reads a header-first CSV into a validated [`Dataset`].
///
/// Rows with missing cells are rejected rather than skipped; callers who want
/// complete-case analysis should filter the file beforehand.
pub fn parse_dataset_csv(
    path: &Path,
    roles: &ColumnRoles,
    kind: OutcomeKind,
) -> Result<LoadedData> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();

    let outcome_idx = column_index(&headers, &roles.outcome)?;
    let hist_idx = column_index(&headers, &roles.historical)?;
    let covariates: Vec<String> = if roles.covariates.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != outcome_idx && *i != hist_idx)
            .map(|(_, h)| h.to_string())
            .collect()
    } else {
        roles.covariates.clone()
    };
    let cov_idx: Vec<usize> = covariates
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_>>()?;

    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut historical = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());

        let outcome = number(&record, outcome_idx, &roles.outcome, line)?;
        if kind == OutcomeKind::Binomial && outcome != 0.0 && outcome != 1.0 {
            return Err(CliError::InvalidOutcome {
                line,
                value: record[outcome_idx].to_string(),
            });
        }
        let flag = cell(&record, hist_idx, &roles.historical, line)?;
        let is_hist = match flag.parse::<f64>() {
            Ok(v) if v == 0.0 => false,
            Ok(v) if v == 1.0 => true,
            _ => {
                return Err(CliError::InvalidFlag {
                    line,
                    value: flag.to_string(),
                })
            }
        };
        for (&idx, name) in cov_idx.iter().zip(&covariates) {
            x.push(number(&record, idx, name, line)?);
        }
        y.push(outcome);
        historical.push(is_hist);
    }
    let dataset = Dataset::new(y, x, covariates.len(), historical)?;
    Ok(LoadedData {
        dataset,
        covariates,
    })
}

/// Writes `data` with columns `outcome, historical, covariates…`.
pub fn write_dataset_csv(path: &Path, data: &Dataset, roles: &ColumnRoles) -> Result<()> {
    if roles.covariates.len() != data.p() {
        return Err(CliError::Config(format!(
            "{} covariate names for {} covariates",
            roles.covariates.len(),
            data.p()
        )));
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![roles.outcome.clone(), roles.historical.clone()];
    header.extend(roles.covariates.iter().cloned());
    writer.write_record(&header)?;
    for i in 0..data.n() {
        let mut row = vec![
            data.y()[i].to_string(),
            u8::from(data.is_historical(i)).to_string(),
        ];
        row.extend(data.row(i).iter().map(f64::to_string));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}
