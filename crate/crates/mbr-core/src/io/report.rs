//! Report emission: selection results as CSV or records, and the
//! simulation reports as CSV with a header row and one row per point.
//! Every row leads with the format version.

use std::io::Write;

use serde::Serialize;

use super::IoError;
use crate::decoder::SelectionResult;
use crate::sim::{QualityReport, SweepReport, ZipfConfig, ZipfReport};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// One output row of the selection report.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionRow {
    pub format_version: u32,
    pub id: String,
    pub rule: String,
    pub chosen_index: usize,
    pub chosen_text: String,
    pub objective: f64,
    pub tie_broken: bool,
    /// Length of the chosen text relative to a supplied reference, when a
    /// reference file was given.
    pub relative_length: Option<f64>,
}

impl SelectionRow {
    pub fn new(id: &str, result: &SelectionResult, relative_length: Option<f64>) -> Self {
        SelectionRow {
            format_version: REPORT_FORMAT_VERSION,
            id: id.to_string(),
            rule: result.rule.as_str().to_string(),
            chosen_index: result.chosen_index,
            chosen_text: result.chosen_text.clone(),
            objective: result.objective_values[result.chosen_index],
            tie_broken: result.tie_broken,
            relative_length,
        }
    }
}

/// Fixed header: format_version,id,rule,chosen_index,chosen_text,objective,
/// tie_broken,relative_length.
pub fn selection_report_csv<W: Write>(writer: W, rows: &[SelectionRow]) -> Result<(), IoError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for row in rows {
        csv_writer.serialize(row)?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Same rows as line-delimited JSON.
pub fn selection_report_records<W: Write>(
    mut writer: W,
    rows: &[SelectionRow],
) -> Result<(), IoError> {
    for row in rows {
        writeln!(writer, "{}", serde_json::to_string(row).expect("serializes"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepCsvRow<'a> {
    format_version: u32,
    sample_count: usize,
    mean_kl_mc: f64,
    std_kl_mc: f64,
    mean_kl_mb: f64,
    std_kl_mb: f64,
    mean_jsd_mc: f64,
    mean_jsd_mb: f64,
    excluded_mc: usize,
    excluded_mb: usize,
    seed: u64,
    config_hash: &'a str,
}

pub fn sweep_report_csv<W: Write>(writer: W, report: &SweepReport) -> Result<(), IoError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for row in &report.rows {
        csv_writer.serialize(SweepCsvRow {
            format_version: REPORT_FORMAT_VERSION,
            sample_count: row.sample_count,
            mean_kl_mc: row.mean_kl_mc,
            std_kl_mc: row.std_kl_mc,
            mean_kl_mb: row.mean_kl_mb,
            std_kl_mb: row.std_kl_mb,
            mean_jsd_mc: row.mean_jsd_mc,
            mean_jsd_mb: row.mean_jsd_mb,
            excluded_mc: row.excluded_mc,
            excluded_mb: row.excluded_mb,
            seed: report.seed,
            config_hash: &report.config_hash,
        })?;
    }
    csv_writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct QualityCsvRow<'a> {
    format_version: u32,
    sample_count: usize,
    mean_kl_mc: f64,
    mean_regret_mc: f64,
    mean_kl_mb: f64,
    mean_regret_mb: f64,
    seed: u64,
    config_hash: &'a str,
}

pub fn quality_report_csv<W: Write>(writer: W, report: &QualityReport) -> Result<(), IoError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for row in &report.rows {
        csv_writer.serialize(QualityCsvRow {
            format_version: REPORT_FORMAT_VERSION,
            sample_count: row.sample_count,
            mean_kl_mc: row.mean_kl_mc,
            mean_regret_mc: row.mean_regret_mc,
            mean_kl_mb: row.mean_kl_mb,
            mean_regret_mb: row.mean_regret_mb,
            seed: report.seed,
            config_hash: &report.config_hash,
        })?;
    }
    csv_writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ZipfCsvRow<'a> {
    format_version: u32,
    exponent: f64,
    domain_size: usize,
    samples_per_run: usize,
    runs: usize,
    seed: u64,
    mean_kl_mc: f64,
    std_kl_mc: f64,
    mean_kl_mb: f64,
    std_kl_mb: f64,
    config_hash: &'a str,
}

/// One summary row per configuration.
pub fn zipf_report_csv<W: Write>(
    writer: W,
    config: &ZipfConfig,
    report: &ZipfReport,
) -> Result<(), IoError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.serialize(ZipfCsvRow {
        format_version: REPORT_FORMAT_VERSION,
        exponent: config.exponent,
        domain_size: config.domain_size,
        samples_per_run: config.samples_per_run,
        runs: config.runs,
        seed: config.seed,
        mean_kl_mc: report.mean_kl_mc,
        std_kl_mc: report.std_kl_mc,
        mean_kl_mb: report.mean_kl_mb,
        std_kl_mb: report.std_kl_mb,
        config_hash: &report.config_hash,
    })?;
    csv_writer.flush()?;
    Ok(())
}
