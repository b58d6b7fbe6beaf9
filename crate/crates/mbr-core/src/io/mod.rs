//! File formats: hypothesis sample records, external utility matrices,
//! selection and sweep reports, and the toy model config.
//!
//! Sample records and matrices are line-delimited JSON so any sampler can
//! append to them; reports are CSV. Every format carries a leading
//! format-version field. Logprobs serialize as numbers, with the string
//! `"-inf"` standing in for log(0) since JSON has no infinities.

mod lm_config;
mod matrix;
mod report;
mod samples;

pub use lm_config::{lm_to_toml, read_lm_config, LM_CONFIG_VERSION};
pub use matrix::{
    read_utility_matrices, write_utility_matrix, ExternalMatrix, MATRIX_FORMAT_VERSION,
};
pub use report::{
    quality_report_csv, selection_report_csv, selection_report_records, sweep_report_csv,
    zipf_report_csv, SelectionRow, REPORT_FORMAT_VERSION,
};
pub use samples::{
    read_reference_texts, read_samples, write_samples, LogBase, ReadOptions, ReadSamples,
    SampleRecord, SAMPLE_FORMAT_VERSION,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("pool {id:?}: {side} order mismatch at position {position}: file has {found:?}, pool has {expected:?}")]
    Alignment {
        id: String,
        side: &'static str,
        position: usize,
        expected: String,
        found: String,
    },
    #[error("pool {id:?}: file has {found} {side}, pool has {expected}")]
    AlignmentLength {
        id: String,
        side: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("unsupported format version {found}, this build reads version {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Pool(#[from] crate::pool::PoolError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
