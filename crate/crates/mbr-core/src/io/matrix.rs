//! Externally computed utility matrices.
//!
//! The file is line-delimited JSON: a version header, then one record per
//! pool declaring the candidate order, the reference order, and row-major
//! values. Neural utilities (or anything else the engine does not compute)
//! enter through this path and are validated against the pool's own text
//! order before use.

use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::pool::HypothesisPool;
use crate::utility::UtilityMatrix;

pub const MATRIX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixRecord {
    id: String,
    candidates: Vec<String>,
    references: Vec<String>,
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct VersionHeader {
    format_version: u32,
}

/// A parsed matrix plus the orders it was computed under.
#[derive(Debug, Clone)]
pub struct ExternalMatrix {
    pub candidates: Vec<String>,
    pub references: Vec<String>,
    pub matrix: UtilityMatrix,
}

impl ExternalMatrix {
    /// Checks that the file's candidate and reference orders match the
    /// pool's exactly, naming the first mismatching text otherwise.
    pub fn validate_against(&self, pool: &HypothesisPool) -> Result<(), IoError> {
        let id = pool.source_id().to_string();
        check_order(
            &id,
            "candidates",
            &self.candidates,
            pool.candidates().iter().map(|h| h.text()),
            pool.candidates().len(),
        )?;
        check_order(
            &id,
            "references",
            &self.references,
            pool.references().iter().map(|h| h.text()),
            pool.references().len(),
        )?;
        Ok(())
    }
}

fn check_order<'a>(
    id: &str,
    side: &'static str,
    file_order: &[String],
    pool_order: impl Iterator<Item = &'a str>,
    pool_len: usize,
) -> Result<(), IoError> {
    if file_order.len() != pool_len {
        return Err(IoError::AlignmentLength {
            id: id.to_string(),
            side,
            expected: pool_len,
            found: file_order.len(),
        });
    }
    for (position, (file_text, pool_text)) in file_order.iter().zip(pool_order).enumerate() {
        if file_text != pool_text {
            return Err(IoError::Alignment {
                id: id.to_string(),
                side,
                position,
                expected: pool_text.to_string(),
                found: file_text.clone(),
            });
        }
    }
    Ok(())
}

/// Reads every matrix record, keyed by pool id in file order.
pub fn read_utility_matrices<R: BufRead>(
    reader: R,
) -> Result<IndexMap<String, ExternalMatrix>, IoError> {
    let mut out = IndexMap::new();
    for (line_index, line) in reader.lines().enumerate() {
        let line_number = line_index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if line_number == 1 {
            if let Ok(header) = serde_json::from_str::<VersionHeader>(&line) {
                if header.format_version != MATRIX_FORMAT_VERSION {
                    return Err(IoError::UnsupportedVersion {
                        found: header.format_version,
                        supported: MATRIX_FORMAT_VERSION,
                    });
                }
                continue;
            }
        }
        let record: MatrixRecord = serde_json::from_str(&line).map_err(|e| IoError::Parse {
            line: line_number,
            message: e.to_string(),
        })?;
        if record.values.len() != record.candidates.len()
            || record
                .values
                .iter()
                .any(|row| row.len() != record.references.len())
        {
            return Err(IoError::Parse {
                line: line_number,
                message: format!(
                    "values must be {} rows of {} entries",
                    record.candidates.len(),
                    record.references.len()
                ),
            });
        }
        out.insert(
            record.id,
            ExternalMatrix {
                candidates: record.candidates,
                references: record.references,
                matrix: UtilityMatrix::from_values(record.values),
            },
        );
    }
    Ok(out)
}

/// Appends one pool's matrix record. Call once per pool after writing the
/// version header with `write_matrix_header`.
pub fn write_utility_matrix<W: Write>(
    writer: &mut W,
    pool: &HypothesisPool,
    matrix: &UtilityMatrix,
    with_header: bool,
) -> Result<(), IoError> {
    if with_header {
        writeln!(
            writer,
            "{}",
            serde_json::json!({ "format_version": MATRIX_FORMAT_VERSION })
        )?;
    }
    let record = MatrixRecord {
        id: pool.source_id().to_string(),
        candidates: pool.candidates().iter().map(|h| h.text().to_string()).collect(),
        references: pool.references().iter().map(|h| h.text().to_string()).collect(),
        values: matrix.values().to_vec(),
    };
    writeln!(writer, "{}", serde_json::to_string(&record).expect("serializes"))?;
    Ok(())
}
