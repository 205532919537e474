//! Long-format result table: one row per `(run, N, estimator)`.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use pairstate::config::OutputFormat;
use pairstate::sim::RunRecord;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub estimator: String,
    pub err0_ppm: Option<f64>,
    pub err1_ppm: Option<f64>,
    pub p_err: Option<f64>,
    pub fidelity0: Option<f64>,
    pub fidelity1: Option<f64>,
    pub lambda_pl: Option<f64>,
    pub size: Option<f64>,
    pub credibility: Option<f64>,
    pub truth_plausible: Option<bool>,
    pub wall_time: Option<f64>,
    pub error: Option<String>,
}

pub const COLUMNS: [&str; 14] = [
    "run",
    "N",
    "estimator",
    "err0_ppm",
    "err1_ppm",
    "p_err",
    "fidelity0",
    "fidelity1",
    "lambda_pl",
    "size",
    "credibility",
    "truth_plausible",
    "wall_time",
    "error",
];

pub fn rows(records: &[RunRecord]) -> Vec<ResultRow> {
    let mut out = Vec::new();
    for rec in records {
        for cp in &rec.checkpoints {
            for est in &cp.estimates {
                let pl = if est.ml.is_some() { cp.plausibility.as_ref() } else { None };
                let mut error = est.error.clone();
                if est.ml.is_some() && error.is_none() {
                    error = cp.plausibility_error.clone();
                }
                out.push(ResultRow {
                    run: rec.run,
                    n: cp.n_total,
                    estimator: est.estimator.to_string(),
                    err0_ppm: est.score.map(|s| s.err0_ppm),
                    err1_ppm: est.score.map(|s| s.err1_ppm),
                    p_err: est.score.map(|s| s.prob_abs_err),
                    fidelity0: est.score.map(|s| s.fidelity0),
                    fidelity1: est.score.map(|s| s.fidelity1),
                    lambda_pl: pl.map(|p| p.lambda_pl),
                    size: pl.map(|p| p.size_pl),
                    credibility: pl.map(|p| p.credibility_pl),
                    truth_plausible: pl.and_then(|p| p.truth_plausible),
                    wall_time: est.wall_time_s,
                    error,
                });
            }
        }
    }
    out
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: OutputFormat, mut w: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(w);
            for r in rows {
                wtr.serialize(r)?;
            }
            if rows.is_empty() {
                wtr.write_record(COLUMNS)?;
            }
            wtr.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Reads a table written by [`write_rows`]; the format follows the file
/// extension (`.json`, anything else is CSV).
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut text = String::new();
    std::fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_string(&mut text)?;
    if path.extension().is_some_and(|e| e == "json") {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let missing: Vec<&str> = COLUMNS.iter().copied().filter(|c| !headers.iter().any(|h| h == *c)).collect();
    if !missing.is_empty() {
        bail!("{}: missing columns {}", path.display(), missing.join(", "));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}: row {}", path.display(), i + 2)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: u64) -> ResultRow {
        ResultRow {
            run: 0,
            n,
            estimator: "ml".into(),
            err0_ppm: Some(12.5),
            err1_ppm: Some(0.1),
            p_err: Some(1e-3),
            fidelity0: Some(0.9999875),
            fidelity1: Some(0.9999999),
            lambda_pl: Some(1.5e-7),
            size: None,
            credibility: Some(0.999),
            truth_plausible: Some(true),
            wall_time: None,
            error: Some("a \"quoted\", text".into()),
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(100), row(200)];
        for (name, fmt) in [("t.csv", OutputFormat::Csv), ("t.json", OutputFormat::Json)] {
            let path = dir.path().join(name);
            write_rows(&rows, fmt, std::fs::File::create(&path).unwrap()).unwrap();
            assert_eq!(read_rows(&path).unwrap(), rows);
        }
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    }
}
