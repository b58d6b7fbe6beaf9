//! Probability estimates over the deduplicated reference set.
//!
//! Three ways to put mass on R: the Monte Carlo (empirical) estimate from
//! occurrence counts, the model-based estimate proportional to the model's
//! own probability, and a length-normalized variant that reweights each
//! reference by `exp(scale * ℓ(y))` to counter an assumed length bias.
//! All normalization happens in log space.

use thiserror::Error;

use crate::logprob::log_sum_exp;
use crate::pool::{HypothesisPool, LengthUnit};

/// Weight vectors must sum to 1 within this tolerance.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("every reference has zero model probability; the model-based estimate is degenerate")]
    DegenerateWeights,
    #[error("weights must be non-negative, got {0}")]
    NegativeWeight(f64),
    #[error("weights must sum to 1 within {WEIGHT_SUM_TOLERANCE}, got {0}")]
    NotNormalized(f64),
}

/// Which estimator produced a weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Empirical,
    ModelBased,
    LengthNormalized,
    Exact,
}

/// A normalized probability mass over a pool's reference list.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    kind: WeightKind,
}

impl WeightVector {
    /// Validates non-negativity and normalization.
    pub fn new(weights: Vec<f64>, kind: WeightKind) -> Result<Self, WeightError> {
        if let Some(&w) = weights.iter().find(|w| **w < 0.0 || w.is_nan()) {
            return Err(WeightError::NegativeWeight(w));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(WeightError::NotNormalized(sum));
        }
        Ok(WeightVector { weights, kind })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Monte Carlo estimate: weight_i = count_i / |H_ref|.
pub fn empirical_weights(pool: &HypothesisPool) -> WeightVector {
    let total = pool.total_samples() as f64;
    let weights = pool
        .references()
        .iter()
        .map(|h| h.count() as f64 / total)
        .collect();
    // Counts over a valid pool always normalize.
    WeightVector::new(weights, WeightKind::Empirical).expect("counts normalize")
}

/// Model-based estimate: weight_i = P(y_i) / sum_j P(y_j), occurrence counts
/// ignored. References the model assigns zero mass keep weight 0 but stay in
/// R (they can still be selected as candidates).
pub fn model_based_weights(pool: &HypothesisPool) -> Result<WeightVector, WeightError> {
    normalized_from_scores(&pool.reference_logprobs(), WeightKind::ModelBased)
}

/// Length-normalized model-based estimate:
/// weight_i ∝ exp(length_scale * ℓ(y_i)) * P(y_i).
///
/// `length_scale = 1` is the published form; the bias model behind it is an
/// assumption, so the exponent is tunable. `length_scale = 0` recovers the
/// plain model-based weights.
pub fn length_normalized_weights(
    pool: &HypothesisPool,
    length_scale: f64,
    unit: LengthUnit,
) -> Result<WeightVector, WeightError> {
    let scores: Vec<f64> = pool
        .references()
        .iter()
        .map(|h| h.logprob().value() + length_scale * h.length(unit) as f64)
        .collect();
    normalized_from_scores(&scores, WeightKind::LengthNormalized)
}

fn normalized_from_scores(scores: &[f64], kind: WeightKind) -> Result<WeightVector, WeightError> {
    let norm = log_sum_exp(scores);
    if norm == f64::NEG_INFINITY {
        return Err(WeightError::DegenerateWeights);
    }
    let weights = scores.iter().map(|s| (s - norm).exp()).collect();
    WeightVector::new(weights, kind)
}
