//! Pairwise utility functions u(h, y) and batched matrix computation.
//!
//! The built-in utilities are lexical overlap scores bounded in [0, 1] with
//! u(x, x) = 1 for non-empty x. Neural utilities are supported only through
//! the external-matrix ingestion path in the io module.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::pool::HypothesisPool;

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("matrix is {rows}x{cols} but the pool has {candidates} candidates and {references} references")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        candidates: usize,
        references: usize,
    },
}

/// Smoothed sentence-level BLEU over whitespace tokens.
///
/// Every n-gram precision up to `max_n` gets add-one smoothing,
/// `p_n = (matches_n + 1) / (total_n + 1)`, so the geometric mean is always
/// defined; the usual brevity penalty `exp(1 - |y|/|h|)` applies when the
/// hypothesis is shorter than the reference. An empty hypothesis scores 0.
pub fn sentence_bleu(hypothesis: &str, reference: &str, max_n: usize) -> f64 {
    let h: Vec<&str> = hypothesis.split_whitespace().collect();
    let y: Vec<&str> = reference.split_whitespace().collect();
    if h.is_empty() {
        return 0.0;
    }

    let mut log_precision_sum = 0.0;
    for n in 1..=max_n {
        let h_grams = ngram_counts(&h, n);
        let y_grams = ngram_counts(&y, n);
        let total: usize = h_grams.values().sum();
        let matches: usize = h_grams
            .iter()
            .map(|(gram, &c)| c.min(y_grams.get(gram).copied().unwrap_or(0)))
            .sum();
        log_precision_sum += ((matches + 1) as f64 / (total + 1) as f64).ln();
    }
    let geo_mean = (log_precision_sum / max_n as f64).exp();

    let brevity = if h.len() >= y.len() {
        1.0
    } else {
        (1.0 - y.len() as f64 / h.len() as f64).exp()
    };
    geo_mean * brevity
}

/// Character n-gram F_beta score.
///
/// Whitespace is stripped, per-order F scores are macro-averaged, and orders
/// where neither side has any n-grams are skipped so identical strings score
/// exactly 1 regardless of their length.
pub fn chrf(hypothesis: &str, reference: &str, char_n: usize, beta: f64) -> f64 {
    let h: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    let y: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();

    let beta2 = beta * beta;
    let mut sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=char_n {
        let h_grams = ngram_counts(&h, n);
        let y_grams = ngram_counts(&y, n);
        let total_h: usize = h_grams.values().sum();
        let total_y: usize = y_grams.values().sum();
        if total_h == 0 && total_y == 0 {
            continue;
        }
        let matches: usize = h_grams
            .iter()
            .map(|(gram, &c)| c.min(y_grams.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if total_h > 0 {
            matches as f64 / total_h as f64
        } else {
            0.0
        };
        let recall = if total_y > 0 {
            matches as f64 / total_y as f64
        } else {
            0.0
        };
        let denom = beta2 * precision + recall;
        if denom > 0.0 {
            sum += (1.0 + beta2) * precision * recall / denom;
        }
        orders += 1;
    }
    if orders == 0 {
        // Both strings are empty (or whitespace only): identical by definition.
        return if h == y { 1.0 } else { 0.0 };
    }
    sum / orders as f64
}

/// Token-multiset F1 over whitespace tokens: 2 * overlap / (|h| + |y|).
pub fn unigram_f1(hypothesis: &str, reference: &str) -> f64 {
    let h: Vec<&str> = hypothesis.split_whitespace().collect();
    let y: Vec<&str> = reference.split_whitespace().collect();
    if h.is_empty() && y.is_empty() {
        return 1.0;
    }
    if h.is_empty() || y.is_empty() {
        return 0.0;
    }
    let h_counts = ngram_counts(&h, 1);
    let y_counts = ngram_counts(&y, 1);
    let overlap: usize = h_counts
        .iter()
        .map(|(tok, &c)| c.min(y_counts.get(tok).copied().unwrap_or(0)))
        .sum();
    2.0 * overlap as f64 / (h.len() + y.len()) as f64
}

fn ngram_counts<T: Eq + std::hash::Hash + Clone>(
    tokens: &[T],
    n: usize,
) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n && n > 0 {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// A selectable utility function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Utility {
    SentenceBleu { max_n: usize },
    Chrf { char_n: usize, beta: f64 },
    UnigramF1,
}

impl Utility {
    pub fn sentence_bleu() -> Self {
        Utility::SentenceBleu { max_n: 4 }
    }

    pub fn chrf() -> Self {
        Utility::Chrf {
            char_n: 6,
            beta: 2.0,
        }
    }

    pub fn score(&self, hypothesis: &str, reference: &str) -> f64 {
        match *self {
            Utility::SentenceBleu { max_n } => sentence_bleu(hypothesis, reference, max_n),
            Utility::Chrf { char_n, beta } => chrf(hypothesis, reference, char_n, beta),
            Utility::UnigramF1 => unigram_f1(hypothesis, reference),
        }
    }

    /// All three built-in utilities.
    pub fn all() -> [Utility; 3] {
        [
            Utility::sentence_bleu(),
            Utility::chrf(),
            Utility::UnigramF1,
        ]
    }
}

/// Dense utility values: rows are candidates, columns are references.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    values: Vec<Vec<f64>>,
    u_max: f64,
}

impl UtilityMatrix {
    /// Computes u(candidate_i, reference_j) for a pool, parallel over rows.
    /// Cells are pure, so the result is independent of the schedule.
    pub fn compute(pool: &HypothesisPool, utility: &Utility) -> Self {
        let refs: Vec<&str> = pool.references().iter().map(|h| h.text()).collect();
        let values: Vec<Vec<f64>> = pool
            .candidates()
            .par_iter()
            .map(|cand| refs.iter().map(|r| utility.score(cand.text(), r)).collect())
            .collect();
        Self::from_values(values)
    }

    /// Serial reference path for the determinism contract.
    pub fn compute_serial(pool: &HypothesisPool, utility: &Utility) -> Self {
        let values: Vec<Vec<f64>> = pool
            .candidates()
            .iter()
            .map(|cand| {
                pool.references()
                    .iter()
                    .map(|r| utility.score(cand.text(), r.text()))
                    .collect()
            })
            .collect();
        Self::from_values(values)
    }

    /// Wraps precomputed values (the external-matrix ingestion path).
    pub fn from_values(values: Vec<Vec<f64>>) -> Self {
        let u_max = values
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        UtilityMatrix { values, u_max }
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// Largest |u| over the matrix; the constant in the Pinsker-style bound.
    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn check_shape(&self, pool: &HypothesisPool) -> Result<(), UtilityError> {
        if self.rows() != pool.candidates().len() || self.cols() != pool.references().len() {
            return Err(UtilityError::ShapeMismatch {
                rows: self.rows(),
                cols: self.cols(),
                candidates: pool.candidates().len(),
                references: pool.references().len(),
            });
        }
        Ok(())
    }
}
