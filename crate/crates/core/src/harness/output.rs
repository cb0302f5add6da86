//! Result emission (CSV rows, JSON summary) and log-log scaling fits.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use super::{CellAggregate, ExperimentSpec, HarnessError, SweepResult, TrialRow};

pub const CSV_HEADER: [&str; 13] = [
    "cell_id",
    "n",
    "k",
    "adversary",
    "F",
    "trial",
    "rounds",
    "terminal",
    "winner",
    "winner_valid",
    "residual",
    "tau_breaks",
    "violations",
];

/// Writes the per-trial rows. The first line is a `#` timestamp comment;
/// everything below it is a pure function of the experiment spec.
pub fn write_rows_csv(path: &Path, rows: &[TrialRow]) -> Result<(), HarnessError> {
    let mut file = File::create(path)?;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    writeln!(file, "# generated_unix: {stamp}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CSV_HEADER)
        .map_err(|e| HarnessError::Spec(format!("csv write: {e}")))?;
    for row in rows {
        w.write_record([
            row.cell_id.to_string(),
            row.n.to_string(),
            row.k.to_string(),
            row.adversary.clone(),
            row.budget.to_string(),
            row.trial.to_string(),
            row.rounds.to_string(),
            row.terminal.clone(),
            row.winner.map(|w| w.to_string()).unwrap_or_default(),
            row.winner_valid.to_string(),
            row.residual.to_string(),
            row.tau_breaks.clone(),
            row.violations.to_string(),
        ])
        .map_err(|e| HarnessError::Spec(format!("csv write: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a rows CSV back as (header, records), skipping `#` comment lines.
pub fn read_rows_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| HarnessError::Spec(format!("csv read: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::Spec(format!("csv read: {e}")))?;
        records.push(record.iter().map(str::to_string).collect());
    }
    Ok((header, records))
}

fn aggregate_json(cell: &CellAggregate) -> serde_json::Value {
    serde_json::json!({
        "cell_id": cell.cell_id,
        "n": cell.n,
        "k": cell.k,
        "trials": cell.trials,
        "mean_rounds": cell.mean_rounds,
        "median_rounds": cell.median_rounds,
        "consensus_rate": cell.consensus_rate,
        "strict_rate": cell.strict_rate,
        "validity_rate": cell.validity_rate,
        "mean_residual": cell.mean_residual,
        "censored": cell.censored,
        "failed": cell.failed,
        "violation_total": cell.violation_total,
    })
}

/// JSON mirror of the per-cell aggregates plus run metadata.
pub fn write_summary_json(
    path: &Path,
    spec: &ExperimentSpec,
    result: &SweepResult,
) -> Result<(), HarnessError> {
    let summary = serde_json::json!({
        "seed": spec.seed,
        "trials": spec.trials,
        "grid": { "n": spec.grid_n, "k": spec.grid_k },
        "adversary": spec.adversary.kind.as_str(),
        "cells": result.cells.iter().map(aggregate_json).collect::<Vec<_>>(),
        "warnings": result.warnings,
        "errors": result.errors,
    });
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &summary)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Least-squares fit on log-log axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `ln y = slope * ln x + intercept`. Requires at least three distinct
/// positive `x` values and positive `y` values.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<FitResult, HarnessError> {
    let mut xs: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(HarnessError::InsufficientPoints {
            needed: 3,
            got: xs.len(),
        });
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(HarnessError::Spec(
            "log-log fit requires positive x and y".into(),
        ));
    }

    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = logs
        .iter()
        .map(|&(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let ss_tot: f64 = logs.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|&(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };

    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points: points.len(),
    })
}

/// Groups points by exact `x` and replaces each group with its mean `y`,
/// sorted by `x`.
pub fn aggregate_mean(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut groups: Vec<(f64, f64, u64)> = Vec::new();
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (x, y) in sorted {
        match groups.last_mut() {
            Some(last) if last.0 == x => {
                last.1 += y;
                last.2 += 1;
            }
            _ => groups.push((x, y, 1)),
        }
    }
    groups
        .into_iter()
        .map(|(x, sum, count)| (x, sum / count as f64))
        .collect()
}
