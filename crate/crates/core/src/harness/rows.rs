//! Flat report rows and their CSV/JSON serialization.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{Direction, SeReport};

use super::config::OutputFormat;

/// One UE's result in one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub trial: usize,
    pub sweep: usize,
    pub direction: Direction,
    pub scheme: String,
    pub estimator: String,
    pub ue: usize,
    pub sinr_mc: Option<f64>,
    pub se_mc: Option<f64>,
    pub stderr: Option<f64>,
    pub sinr_cf: Option<f64>,
    pub se_cf: Option<f64>,
    pub wall_ms: f64,
}

pub const CSV_HEADER: &str = "trial,sweep,direction,scheme,estimator,ue,sinr_mc,se_mc,stderr,sinr_cf,se_cf,wall_ms";

impl ReportRow {
    /// SE preferring the closed-form column.
    pub fn se(&self) -> Option<f64> {
        self.se_cf.or(self.se_mc)
    }
}

/// Flattens a report into rows, one per UE.
pub fn rows_from_report(report: &SeReport, trial: usize, sweep: usize, wall_ms: f64) -> Vec<ReportRow> {
    report
        .ues
        .iter()
        .enumerate()
        .map(|(ue, u)| ReportRow {
            trial,
            sweep,
            direction: report.direction,
            scheme: report.scheme.clone(),
            estimator: report.estimator.clone(),
            ue,
            sinr_mc: u.sinr_mc,
            se_mc: u.se_mc,
            stderr: u.stderr,
            sinr_cf: u.sinr_cf,
            se_cf: u.se_cf,
            wall_ms,
        })
        .collect()
}

pub fn write_rows<W: Write>(rows: &[ReportRow], format: OutputFormat, out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Writes rows to `path`.
pub fn emit_report(rows: &[ReportRow], format: OutputFormat, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let file = std::fs::File::create(path)?;
    write_rows(rows, format, std::io::BufWriter::new(file))
}

pub fn rows_to_string(rows: &[ReportRow], format: OutputFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serializers emit UTF-8"))
}

pub fn rows_from_json(text: &str) -> Result<Vec<ReportRow>> {
    Ok(serde_json::from_str(text)?)
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

/// Empirical CDF: sorted values paired with quantiles `i/n`.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
}

/// CDF of the per-UE SE for every `(direction, scheme, estimator)` group,
/// as CSV text.
pub fn cdf_csv(rows: &[ReportRow]) -> Result<String> {
    let mut groups: Vec<((Direction, String, String), Vec<f64>)> = Vec::new();
    for r in rows {
        let key = (r.direction, r.scheme.clone(), r.estimator.clone());
        let Some(se) = r.se() else { continue };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(se),
            None => groups.push((key, vec![se])),
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["direction", "scheme", "estimator", "se", "quantile"])?;
    for ((dir, scheme, est), values) in &groups {
        for (se, q) in empirical_cdf(values) {
            w.write_record([dir.to_string(), scheme.clone(), est.clone(), se.to_string(), q.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv emits UTF-8"))
}
