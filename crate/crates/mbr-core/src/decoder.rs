//! Decision rules: expected-utility selection under an estimated reference
//! distribution, and the exact objective over a fully enumerated model.
//!
//! All sampled-pool rules are one kernel: objective_i = sum_j u(h_i, y_j) * w_j,
//! argmax over candidates. The estimators differ only in the weight vector
//! they plug in.

use thiserror::Error;

use crate::pool::{HypothesisPool, LengthUnit};
use crate::toylm::{ToyLm, ToyLmError};
use crate::utility::{Utility, UtilityError, UtilityMatrix};
use crate::weights::{WeightKind, WeightVector};

/// Two objectives within this distance count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Shape(#[from] UtilityError),
    #[error("weight vector has {weights} entries but the pool has {references} references")]
    WeightMismatch { weights: usize, references: usize },
    #[error("relative length needs a non-empty reference")]
    EmptyReference,
    #[error(transparent)]
    ToyLm(#[from] ToyLmError),
}

/// Which decision rule produced a selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Monte Carlo MBR: empirical weights.
    Mbr,
    /// Model-based MBR: weights proportional to the model probability.
    Mbmbr,
    /// Length-normalized model-based MBR.
    MbmbrL,
    /// Exact objective over an enumerated support.
    Exact,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Mbr => "mbr",
            Rule::Mbmbr => "mbmbr",
            Rule::MbmbrL => "mbmbr-l",
            Rule::Exact => "exact",
        }
    }

    /// The estimator a rule conventionally pairs with.
    pub fn default_weight_kind(self) -> WeightKind {
        match self {
            Rule::Mbr => WeightKind::Empirical,
            Rule::Mbmbr => WeightKind::ModelBased,
            Rule::MbmbrL => WeightKind::LengthNormalized,
            Rule::Exact => WeightKind::Exact,
        }
    }
}

/// The winning candidate plus the full objective vector for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen_index: usize,
    pub chosen_text: String,
    pub objective_values: Vec<f64>,
    pub rule: Rule,
    pub tie_broken: bool,
}

/// Expected-utility selection: objective_i = sum_j matrix[i][j] * weights[j],
/// argmax over candidates, ties broken toward the lowest (first-seen) index.
///
/// The candidate's own reference weight is included when it appears in R;
/// the shared-pool sum runs over all of H_ref with no self-exclusion.
pub fn select(
    pool: &HypothesisPool,
    matrix: &UtilityMatrix,
    weights: &WeightVector,
    rule: Rule,
) -> Result<SelectionResult, DecodeError> {
    matrix.check_shape(pool)?;
    if weights.len() != pool.references().len() {
        return Err(DecodeError::WeightMismatch {
            weights: weights.len(),
            references: pool.references().len(),
        });
    }

    let objective_values: Vec<f64> = (0..matrix.rows())
        .map(|i| dot(matrix.row(i), weights.weights()))
        .collect();

    let (chosen_index, tie_broken) = argmax_first(&objective_values);
    Ok(SelectionResult {
        chosen_index,
        chosen_text: pool.candidates()[chosen_index].text().to_string(),
        objective_values,
        rule,
        tie_broken,
    })
}

/// The exact decision rule: objective_i = sum over the model's entire
/// enumerated support of u(h_i, y) * P(y). Tractable only for toy models;
/// `budget` caps the enumeration size.
pub fn exact_objective(
    candidates: &[String],
    lm: &ToyLm,
    utility: &Utility,
    budget: usize,
) -> Result<SelectionResult, DecodeError> {
    let support = lm.enumerate(budget)?;
    let objective_values: Vec<f64> = candidates
        .iter()
        .map(|cand| {
            support
                .iter()
                .map(|(text, lp)| utility.score(cand, text) * lp.prob())
                .sum()
        })
        .collect();
    let (chosen_index, tie_broken) = argmax_first(&objective_values);
    Ok(SelectionResult {
        chosen_index,
        chosen_text: candidates[chosen_index].clone(),
        objective_values,
        rule: Rule::Exact,
        tie_broken,
    })
}

/// ℓ(chosen) / ℓ(reference) in the given unit.
pub fn relative_length(
    result: &SelectionResult,
    reference_text: &str,
    unit: LengthUnit,
) -> Result<f64, DecodeError> {
    let ref_len = unit.measure(reference_text);
    if ref_len == 0 {
        return Err(DecodeError::EmptyReference);
    }
    Ok(unit.measure(&result.chosen_text) as f64 / ref_len as f64)
}

fn dot(row: &[f64], weights: &[f64]) -> f64 {
    row.iter().zip(weights).map(|(u, w)| u * w).sum()
}

/// First index attaining the maximum, plus whether another candidate came
/// within `TIE_TOLERANCE` of it.
fn argmax_first(values: &[f64]) -> (usize, bool) {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    let tie = values
        .iter()
        .enumerate()
        .any(|(i, &v)| i != best && (v - values[best]).abs() <= TIE_TOLERANCE);
    (best, tie)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logprob::LogProb;
    use crate::pool::PoolMode;
    use crate::weights::{empirical_weights, model_based_weights};

    fn lp(p: f64) -> LogProb {
        LogProb::from_prob(p).unwrap()
    }

    fn table2_pool() -> HypothesisPool {
        let a = "But telling the truth is not a crime.";
        let b = "However, telling the truth is not a crime.";
        let c = "But to tell the truth is not a crime.";
        let samples = vec![
            (a.to_string(), lp(0.3)),
            (a.to_string(), lp(0.3)),
            (b.to_string(), lp(0.1)),
            (b.to_string(), lp(0.1)),
            (c.to_string(), lp(0.1)),
        ];
        HypothesisPool::build("t2", samples, PoolMode::Shared).unwrap()
    }

    #[test]
    fn singleton_pool_selects_itself() {
        let pool =
            HypothesisPool::build("s", vec![("only one".to_string(), lp(0.5))], PoolMode::Shared)
                .unwrap();
        let m = UtilityMatrix::compute(&pool, &Utility::UnigramF1);
        let w = empirical_weights(&pool);
        let r = select(&pool, &m, &w, Rule::Mbr).unwrap();
        assert_eq!(r.chosen_index, 0);
        assert_eq!(r.objective_values, vec![1.0]);
    }

    #[test]
    fn objectives_match_hand_weighted_row_sums() {
        let pool = table2_pool();
        let m = UtilityMatrix::compute(&pool, &Utility::UnigramF1);
        let texts: Vec<&str> = pool.references().iter().map(|h| h.text()).collect();

        for (weights, rule) in [
            (empirical_weights(&pool), Rule::Mbr),
            (model_based_weights(&pool).unwrap(), Rule::Mbmbr),
        ] {
            let r = select(&pool, &m, &weights, rule).unwrap();
            for (i, cand) in texts.iter().enumerate() {
                let hand: f64 = texts
                    .iter()
                    .zip(weights.weights())
                    .map(|(y, w)| crate::utility::unigram_f1(cand, y) * w)
                    .sum();
                assert!(
                    (r.objective_values[i] - hand).abs() < 1e-15,
                    "candidate {i} under {rule:?}"
                );
            }
            assert_eq!(r.chosen_index, argmax_first(&r.objective_values).0);
        }
    }

    #[test]
    fn dominating_row_wins_under_uniform_weights() {
        let pool = HypothesisPool::build(
            "d",
            vec![
                ("a".to_string(), lp(0.2)),
                ("b".to_string(), lp(0.2)),
                ("c".to_string(), lp(0.2)),
            ],
            PoolMode::Shared,
        )
        .unwrap();
        let m = UtilityMatrix::from_values(vec![
            vec![0.1, 0.2, 0.3],
            vec![0.5, 0.6, 0.7],
            vec![0.2, 0.1, 0.0],
        ]);
        let w = empirical_weights(&pool);
        let r = select(&pool, &m, &w, Rule::Mbr).unwrap();
        assert_eq!(r.chosen_index, 1);
        assert!(!r.tie_broken);
    }

    #[test]
    fn ties_break_to_lowest_index_and_are_flagged() {
        let pool = HypothesisPool::build(
            "t",
            vec![("a".to_string(), lp(0.2)), ("b".to_string(), lp(0.2))],
            PoolMode::Shared,
        )
        .unwrap();
        let m = UtilityMatrix::from_values(vec![vec![0.4, 0.4], vec![0.4, 0.4]]);
        let w = empirical_weights(&pool);
        let r = select(&pool, &m, &w, Rule::Mbr).unwrap();
        assert_eq!(r.chosen_index, 0);
        assert!(r.tie_broken);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let pool = table2_pool();
        let m = UtilityMatrix::from_values(vec![vec![0.0; 2]; 3]);
        let w = empirical_weights(&pool);
        assert!(matches!(
            select(&pool, &m, &w, Rule::Mbr),
            Err(DecodeError::Shape(_))
        ));
    }

    #[test]
    fn same_weights_give_bit_identical_results_across_rule_tags() {
        let pool = table2_pool();
        let m = UtilityMatrix::compute(&pool, &Utility::UnigramF1);
        let w = model_based_weights(&pool).unwrap();
        let r1 = select(&pool, &m, &w, Rule::Mbr).unwrap();
        let r2 = select(&pool, &m, &w, Rule::Mbmbr).unwrap();
        assert_eq!(r1.chosen_index, r2.chosen_index);
        assert_eq!(r1.objective_values, r2.objective_values);
    }

    #[test]
    fn uniform_model_matches_all_counts_one() {
        // All counts 1 with uniform P: empirical and model-based weights
        // coincide, so the two rules select identically.
        let samples: Vec<(String, LogProb)> = ["a b", "b c", "c a"]
            .iter()
            .map(|t| (t.to_string(), lp(0.25)))
            .collect();
        let pool = HypothesisPool::build("u", samples, PoolMode::Shared).unwrap();
        let m = UtilityMatrix::compute(&pool, &Utility::UnigramF1);
        let emp = select(&pool, &m, &empirical_weights(&pool), Rule::Mbr).unwrap();
        let mb = select(&pool, &m, &model_based_weights(&pool).unwrap(), Rule::Mbmbr).unwrap();
        assert_eq!(emp.chosen_index, mb.chosen_index);
        for (a, b) in emp.objective_values.iter().zip(&mb.objective_values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn relative_length_ratios() {
        let r = SelectionResult {
            chosen_index: 0,
            chosen_text: "one two three four five six seven".to_string(),
            objective_values: vec![1.0],
            rule: Rule::Mbr,
            tie_broken: false,
        };
        let ten = "a b c d e f g h i j";
        assert_eq!(
            relative_length(&r, ten, LengthUnit::WhitespaceTokens).unwrap(),
            0.7
        );
        let same = SelectionResult {
            chosen_text: ten.to_string(),
            ..r.clone()
        };
        assert_eq!(
            relative_length(&same, ten, LengthUnit::WhitespaceTokens).unwrap(),
            1.0
        );
        assert!(matches!(
            relative_length(&r, "", LengthUnit::WhitespaceTokens),
            Err(DecodeError::EmptyReference)
        ));
    }
}
