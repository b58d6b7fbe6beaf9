//! Hypotheses and hypothesis pools.
//!
//! A pool holds the candidate set and the deduplicated reference set built
//! from one stream of sampled outputs for a single input. Deduplication keys
//! on the exact surface string (after trimming a single trailing newline)
//! and accumulates occurrence counts; the reference list keeps first-seen
//! order so downstream tie-breaking is stable.

use thiserror::Error;

use crate::logprob::LogProb;

#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error("cannot build a pool from an empty sample list")]
    EmptyPool,
}

/// How sequence length ℓ(y) is measured. Whitespace tokens by default;
/// begin/end markers are never part of the surface string and never counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LengthUnit {
    #[default]
    WhitespaceTokens,
    Chars,
}

impl LengthUnit {
    pub fn measure(self, text: &str) -> usize {
        match self {
            LengthUnit::WhitespaceTokens => text.split_whitespace().count(),
            LengthUnit::Chars => text.chars().count(),
        }
    }
}

/// One sampled output sequence with its model log-probability and the number
/// of times it occurred in the sampled collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    text: String,
    logprob: LogProb,
    count: usize,
}

impl Hypothesis {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn logprob(&self) -> LogProb {
        self.logprob
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Sequence length ℓ(y) in the given unit.
    pub fn length(&self, unit: LengthUnit) -> usize {
        unit.measure(&self.text)
    }
}

/// Candidate / reference construction mode.
///
/// `Shared` is the standard setup where the candidate set and the reference
/// pool are the same hypotheses: candidates are the deduplicated texts.
/// `Split` keeps every sampled occurrence as its own candidate and
/// deduplicates only the reference side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolMode {
    #[default]
    Shared,
    Split,
}

/// Deduplicated reference set plus candidate set for one source input.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisPool {
    source_id: String,
    candidates: Vec<Hypothesis>,
    references: Vec<Hypothesis>,
    total_samples: usize,
    warnings: Vec<String>,
}

impl HypothesisPool {
    /// Builds a pool from raw `(text, logprob)` samples.
    ///
    /// References are deduplicated by exact text with counts accumulated.
    /// If the same text arrives with a different logprob, the first-seen
    /// value is kept and a consistency warning is recorded; the sampler is
    /// the authority and real samplers return one score per string.
    pub fn build<I, S>(source_id: S, samples: I, mode: PoolMode) -> Result<Self, PoolError>
    where
        I: IntoIterator<Item = (String, LogProb)>,
        S: Into<String>,
    {
        let mut references: Vec<Hypothesis> = Vec::new();
        let mut split_candidates: Vec<Hypothesis> = Vec::new();
        let mut warnings = Vec::new();
        let mut total_samples = 0usize;

        for (raw_text, logprob) in samples {
            let text = trim_trailing_newline(&raw_text);
            total_samples += 1;
            match references.iter_mut().find(|h| h.text == text) {
                Some(existing) => {
                    existing.count += 1;
                    if existing.logprob != logprob {
                        warnings.push(format!(
                            "conflicting logprob for {:?}: keeping first-seen {} over {}",
                            text,
                            existing.logprob.value(),
                            logprob.value()
                        ));
                    }
                }
                None => references.push(Hypothesis {
                    text: text.to_string(),
                    logprob,
                    count: 1,
                }),
            }
            if mode == PoolMode::Split {
                // Occurrences keep the first-seen logprob for the text.
                let lp = references
                    .iter()
                    .find(|h| h.text == text)
                    .map(|h| h.logprob)
                    .unwrap();
                split_candidates.push(Hypothesis {
                    text: text.to_string(),
                    logprob: lp,
                    count: 1,
                });
            }
        }

        if total_samples == 0 {
            return Err(PoolError::EmptyPool);
        }

        let candidates = match mode {
            PoolMode::Shared => references.clone(),
            PoolMode::Split => split_candidates,
        };

        Ok(HypothesisPool {
            source_id: source_id.into(),
            candidates,
            references,
            total_samples,
            warnings,
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// The candidate set H_cand.
    pub fn candidates(&self) -> &[Hypothesis] {
        &self.candidates
    }

    /// The deduplicated reference set R, in first-occurrence order.
    pub fn references(&self) -> &[Hypothesis] {
        &self.references
    }

    /// |H_ref|: the number of raw samples, i.e. the sum of reference counts.
    pub fn total_samples(&self) -> usize {
        self.total_samples
    }

    /// Consistency warnings recorded during construction.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Natural-log model probabilities aligned with `references()`.
    pub fn reference_logprobs(&self) -> Vec<f64> {
        self.references.iter().map(|h| h.logprob.value()).collect()
    }
}

fn trim_trailing_newline(text: &str) -> &str {
    let text = text.strip_suffix('\n').unwrap_or(text);
    text.strip_suffix('\r').unwrap_or(text)
}
