//! Cross-chain aggregation of a KL trace into per-checkpoint means with
//! normal-approximation confidence intervals.

use std::collections::BTreeMap;
use std::path::Path;

use crate::experiment::{ExperimentError, KlTrace, Method};

/// Half-width multiplier for a 95% normal confidence interval.
const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub iteration: usize,
    pub method: Method,
    pub mean: f64,
    /// CI bounds; `None` when only one chain contributed.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

/// Collapses a trace across chains: for every (iteration, method) cell the
/// mean KL over chains and a 95% CI from the sample standard deviation.
/// With a single chain the interval is omitted and a warning is printed.
pub fn summarize(trace: &KlTrace) -> Result<Vec<SummaryRow>, ExperimentError> {
    if trace.rows.is_empty() {
        return Err(ExperimentError::EmptyTrace);
    }
    let mut cells: BTreeMap<(usize, Method), Vec<f64>> = BTreeMap::new();
    for row in &trace.rows {
        cells.entry((row.iteration, row.method)).or_default().push(row.kl);
    }
    let single_chain = cells.values().any(|v| v.len() < 2);
    if single_chain {
        eprintln!("warning: single chain; confidence intervals omitted");
    }
    let rows = cells
        .into_iter()
        .map(|((iteration, method), values)| {
            let k = values.len() as f64;
            let mean = values.iter().sum::<f64>() / k;
            let (lo, hi) = if values.len() < 2 {
                (None, None)
            } else {
                let var =
                    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
                let half = Z_95 * (var / k).sqrt();
                (Some(mean - half), Some(mean + half))
            };
            SummaryRow { iteration, method, mean, lo, hi }
        })
        .collect();
    Ok(rows)
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["iteration", "method", "mean", "lo", "hi"])?;
    for row in rows {
        writer.write_record([
            row.iteration.to_string(),
            row.method.to_string(),
            row.mean.to_string(),
            row.lo.map(|v| v.to_string()).unwrap_or_default(),
            row.hi.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, ExperimentError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let parse_err = |detail: String| ExperimentError::MalformedTrace {
            row: idx + 2,
            detail,
        };
        let field = |i: usize| record.get(i).unwrap_or("");
        let opt = |s: &str| -> Result<Option<f64>, ExperimentError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| ExperimentError::MalformedTrace {
                    row: idx + 2,
                    detail: format!("bound: {e}"),
                })
            }
        };
        rows.push(SummaryRow {
            iteration: field(0)
                .parse()
                .map_err(|e| parse_err(format!("iteration: {e}")))?,
            method: field(1).parse().map_err(parse_err)?,
            mean: field(2).parse().map_err(|e| parse_err(format!("mean: {e}")))?,
            lo: opt(field(3))?,
            hi: opt(field(4))?,
        });
    }
    if rows.is_empty() {
        return Err(ExperimentError::EmptyTrace);
    }
    Ok(rows)
}
