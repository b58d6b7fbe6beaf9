//! Decision rules for sampling-based text generation: given a pool of
//! sampled hypotheses, pick the one with the highest expected utility under
//! an estimated distribution over references.
//!
//! Three estimators drive the same selection kernel:
//!
//! - the Monte Carlo (empirical) estimate from occurrence counts,
//! - the model-based estimate, proportional to the model's own probability
//!   restricted to the deduplicated sample set, and
//! - a length-normalized model-based variant.
//!
//! The model-based estimate is the information projection of the model onto
//! distributions supported on the observed samples, so its divergence from
//! the model has the closed form `-log sum P(y)` and never exceeds the
//! Monte Carlo estimate's. The [`divergence`] module carries those
//! identities, the [`toylm`] module provides an exactly enumerable model to
//! test them against, and [`sim`] reproduces the estimator studies at desk
//! scale.

#![forbid(unsafe_code)]

pub mod decoder;
pub mod divergence;
pub mod io;
pub mod logprob;
pub mod pool;
pub mod sim;
pub mod toylm;
pub mod utility;
pub mod weights;

pub use decoder::{exact_objective, relative_length, select, Rule, SelectionResult};
pub use divergence::{
    jsd_restricted, kl_model_based_closed_form, kl_restricted, pinsker_objective_bound,
    RestrictedDistribution,
};
pub use logprob::{log_sum_exp, LogProb};
pub use pool::{Hypothesis, HypothesisPool, LengthUnit, PoolMode};
pub use toylm::{truncate_distribution, SamplerConfig, ToyLm, TruncationAlgorithm};
pub use utility::{chrf, sentence_bleu, unigram_f1, Utility, UtilityMatrix};
pub use weights::{
    empirical_weights, length_normalized_weights, model_based_weights, WeightKind, WeightVector,
};
