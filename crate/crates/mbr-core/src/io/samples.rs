//! Line-delimited hypothesis records and pool reconstruction.
//!
//! One record per line: `{"id": ..., "text": ..., "logprob": ..., "count": n}`
//! with `count` defaulting to 1. An optional leading line
//! `{"format_version": 1}` pins the format; writers always emit it, readers
//! accept streams without it so raw sampler output can be ingested as-is.

use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::logprob::LogProb;
use crate::pool::{HypothesisPool, PoolMode};

pub const SAMPLE_FORMAT_VERSION: u32 = 1;

/// One sampled hypothesis as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub text: String,
    #[serde(with = "logprob_field")]
    pub logprob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

/// JSON has no infinities; log(0) rides as the string "-inf".
mod logprob_field {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else {
            serializer.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum NumberOrMarker {
        Number(f64),
        Marker(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        match NumberOrMarker::deserialize(deserializer)? {
            NumberOrMarker::Number(v) => Ok(v),
            NumberOrMarker::Marker(s) => match s.as_str() {
                "-inf" | "-Inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "unrecognized logprob marker {other:?}"
                ))),
            },
        }
    }
}

#[derive(Deserialize)]
struct VersionHeader {
    format_version: u32,
}

/// Base of the logprobs in an input file; everything is converted to
/// natural log at ingestion because external toolkits disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    fn to_natural(self, value: f64) -> f64 {
        match self {
            LogBase::Natural => value,
            LogBase::Two => value * std::f64::consts::LN_2,
            LogBase::Ten => value * std::f64::consts::LN_10,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    pub log_base: LogBase,
    /// Permit positive logprobs (length-penalized scores from external
    /// scorers are not true log-probabilities).
    pub unnormalized: bool,
    pub mode: PoolMode,
}

/// Pools grouped by id in first-appearance order, plus any warnings raised
/// while reading.
#[derive(Debug)]
pub struct ReadSamples {
    pub pools: IndexMap<String, HypothesisPool>,
    pub warnings: Vec<String>,
}

/// Reads a record stream and builds one pool per id. Ids group in
/// first-appearance order; within an id, records keep input order, which
/// fixes the reference order and therefore tie-breaking.
pub fn read_samples<R: BufRead>(reader: R, options: &ReadOptions) -> Result<ReadSamples, IoError> {
    let mut grouped: IndexMap<String, Vec<(String, LogProb)>> = IndexMap::new();
    let mut warnings = Vec::new();
    let mut saw_record = false;

    for (line_index, line) in reader.lines().enumerate() {
        let line_number = line_index + 1;
        let line = line.map_err(|e| IoError::Parse {
            line: line_number,
            message: format!("not valid UTF-8: {e}"),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if line_number == 1 {
            if let Ok(header) = serde_json::from_str::<VersionHeader>(&line) {
                if header.format_version != SAMPLE_FORMAT_VERSION {
                    return Err(IoError::UnsupportedVersion {
                        found: header.format_version,
                        supported: SAMPLE_FORMAT_VERSION,
                    });
                }
                continue;
            }
        }
        let record: SampleRecord = serde_json::from_str(&line).map_err(|e| IoError::Parse {
            line: line_number,
            message: e.to_string(),
        })?;
        let (id, text, logprob, count) = validate_record(record, options, line_number)?;
        saw_record = true;
        let samples = grouped.entry(id).or_default();
        // A record with count k stands for k occurrences.
        samples.extend(std::iter::repeat_n((text, logprob), count));
    }

    if !saw_record {
        warnings.push("no records in input".to_string());
    }

    let mut pools = IndexMap::new();
    for (id, samples) in grouped {
        let pool = HypothesisPool::build(id.clone(), samples, options.mode)?;
        warnings.extend(pool.warnings().iter().map(|w| format!("{id}: {w}")));
        pools.insert(id, pool);
    }
    Ok(ReadSamples { pools, warnings })
}

fn validate_record(
    record: SampleRecord,
    options: &ReadOptions,
    line: usize,
) -> Result<(String, String, LogProb, usize), IoError> {
    if record.id.is_empty() {
        return Err(IoError::Parse {
            line,
            message: "record id must be non-empty".into(),
        });
    }
    if record.text.is_empty() {
        return Err(IoError::Parse {
            line,
            message: "record text must be non-empty".into(),
        });
    }
    let count = record.count.unwrap_or(1);
    if count == 0 {
        return Err(IoError::Parse {
            line,
            message: "count must be at least 1".into(),
        });
    }
    let natural = options.log_base.to_natural(record.logprob);
    let logprob = if options.unnormalized {
        LogProb::new_unnormalized(natural)
    } else {
        LogProb::new(natural)
    }
    .map_err(|e| IoError::Parse {
        line,
        message: e.to_string(),
    })?;
    Ok((record.id, record.text, logprob, count))
}

/// A reference text per id, for relative-length reporting. Lines are
/// `{"id": ..., "text": ...}`; extra fields (logprob, count) are ignored,
/// and the first text per id wins.
pub fn read_reference_texts<R: BufRead>(
    reader: R,
) -> Result<IndexMap<String, String>, IoError> {
    #[derive(Deserialize)]
    struct ReferenceRecord {
        id: String,
        text: String,
    }

    let mut out: IndexMap<String, String> = IndexMap::new();
    for (line_index, line) in reader.lines().enumerate() {
        let line_number = line_index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if line_number == 1 && serde_json::from_str::<VersionHeader>(&line).is_ok() {
            continue;
        }
        let record: ReferenceRecord =
            serde_json::from_str(&line).map_err(|e| IoError::Parse {
                line: line_number,
                message: e.to_string(),
            })?;
        out.entry(record.id).or_insert(record.text);
    }
    Ok(out)
}

/// Writes one pool's references as records, counts preserved. A shared-mode
/// read of the output reconstructs the pool exactly.
pub fn write_samples<W: Write>(writer: &mut W, pools: &[&HypothesisPool]) -> Result<(), IoError> {
    writeln!(
        writer,
        "{}",
        serde_json::json!({ "format_version": SAMPLE_FORMAT_VERSION })
    )?;
    for pool in pools {
        for hypothesis in pool.references() {
            let record = SampleRecord {
                id: pool.source_id().to_string(),
                text: hypothesis.text().to_string(),
                logprob: hypothesis.logprob().value(),
                count: Some(hypothesis.count()),
            };
            writeln!(writer, "{}", serde_json::to_string(&record).expect("serializes"))?;
        }
    }
    Ok(())
}
