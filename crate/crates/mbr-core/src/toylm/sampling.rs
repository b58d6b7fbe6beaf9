//! Truncation sampling: ancestral, top-k, nucleus, and epsilon.
//!
//! Truncation reshapes each per-step conditional before drawing; the
//! recorded sequence probability is always the untruncated model
//! probability, because the estimators weight hypotheses by P, not by the
//! sampling distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ToyLm, ToyLmError};
use crate::logprob::LogProb;

/// Which truncation rule reshapes the per-step conditionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum TruncationAlgorithm {
    /// Plain ancestral sampling: no truncation.
    Ancestral,
    /// Keep only the k most probable tokens.
    TopK { k: usize },
    /// Keep the smallest prefix of the sorted distribution covering mass p.
    Nucleus { p: f64 },
    /// Drop tokens with probability below the threshold.
    Epsilon { epsilon: f64 },
}

/// Sampling configuration: truncation rule, temperature (applied before
/// truncation), and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    #[serde(flatten)]
    pub algorithm: TruncationAlgorithm,
    pub temperature: f64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(
        algorithm: TruncationAlgorithm,
        temperature: f64,
        seed: u64,
    ) -> Result<Self, ToyLmError> {
        if temperature.is_nan() || temperature <= 0.0 {
            return Err(ToyLmError::InvalidSamplerConfig(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        match algorithm {
            TruncationAlgorithm::TopK { k: 0 } => {
                return Err(ToyLmError::InvalidSamplerConfig("top-k needs k >= 1".into()))
            }
            TruncationAlgorithm::Nucleus { p } if !(p > 0.0 && p <= 1.0) => {
                return Err(ToyLmError::InvalidSamplerConfig(format!(
                    "nucleus mass must lie in (0, 1], got {p}"
                )))
            }
            TruncationAlgorithm::Epsilon { epsilon } if !(0.0..1.0).contains(&epsilon) => {
                return Err(ToyLmError::InvalidSamplerConfig(format!(
                    "epsilon must lie in [0, 1), got {epsilon}"
                )))
            }
            _ => {}
        }
        Ok(SamplerConfig {
            algorithm,
            temperature,
            seed,
        })
    }

    pub fn ancestral(seed: u64) -> Self {
        SamplerConfig::new(TruncationAlgorithm::Ancestral, 1.0, seed).unwrap()
    }

    pub fn top_k(k: usize, seed: u64) -> Result<Self, ToyLmError> {
        SamplerConfig::new(TruncationAlgorithm::TopK { k }, 1.0, seed)
    }

    pub fn nucleus(p: f64, seed: u64) -> Result<Self, ToyLmError> {
        SamplerConfig::new(TruncationAlgorithm::Nucleus { p }, 1.0, seed)
    }

    pub fn epsilon(epsilon: f64, seed: u64) -> Result<Self, ToyLmError> {
        SamplerConfig::new(TruncationAlgorithm::Epsilon { epsilon }, 1.0, seed)
    }

    /// Same config with a different seed; sweep runs derive per-run seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Applies temperature and the configured truncation to one probability
/// vector. The result sums to 1, truncated entries are exactly 0, and the
/// support never grows. An epsilon threshold that would empty the support
/// falls back to the single most probable token.
pub fn truncate_distribution(probs: &[f64], config: &SamplerConfig) -> Vec<f64> {
    debug_assert!(
        (probs.iter().sum::<f64>() - 1.0).abs() < 1e-6,
        "input must be a probability vector"
    );
    let probs = apply_temperature(probs, config.temperature);

    match config.algorithm {
        TruncationAlgorithm::Ancestral => probs,
        TruncationAlgorithm::TopK { k } => {
            let order = sorted_indices(&probs);
            renormalize_kept(&probs, &order[..k.min(order.len())])
        }
        TruncationAlgorithm::Nucleus { p } => {
            let order = sorted_indices(&probs);
            let mut kept = Vec::new();
            let mut cumulative = 0.0;
            for &i in &order {
                kept.push(i);
                cumulative += probs[i];
                if cumulative >= p {
                    break;
                }
            }
            renormalize_kept(&probs, &kept)
        }
        TruncationAlgorithm::Epsilon { epsilon } => {
            let kept: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] >= epsilon).collect();
            if kept.is_empty() {
                // The threshold emptied the support; argmax is the limit.
                renormalize_kept(&probs, &sorted_indices(&probs)[..1])
            } else {
                renormalize_kept(&probs, &kept)
            }
        }
    }
}

fn apply_temperature(probs: &[f64], temperature: f64) -> Vec<f64> {
    if temperature == 1.0 {
        return probs.to_vec();
    }
    let exponent = 1.0 / temperature;
    let scaled: Vec<f64> = probs.iter().map(|p| p.powf(exponent)).collect();
    let total: f64 = scaled.iter().sum();
    scaled.iter().map(|p| p / total).collect()
}

/// Indices sorted by probability descending, position ascending on ties, so
/// truncation is deterministic.
fn sorted_indices(probs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
    order
}

fn renormalize_kept(probs: &[f64], kept: &[usize]) -> Vec<f64> {
    let total: f64 = kept.iter().map(|&i| probs[i]).sum();
    let mut out = vec![0.0; probs.len()];
    for &i in kept {
        out[i] = probs[i] / total;
    }
    out
}

impl ToyLm {
    /// Draws `n` i.i.d. sequences step-wise from the truncated conditionals.
    /// Returned logprobs are the untruncated model logprobs. Identical
    /// `(model, config, n)` inputs reproduce the identical sample list.
    pub fn sample(&self, config: &SamplerConfig, n: usize) -> Vec<(String, LogProb)> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        (0..n).map(|_| self.sample_one(config, &mut rng)).collect()
    }

    fn sample_one(&self, config: &SamplerConfig, rng: &mut ChaCha8Rng) -> (String, LogProb) {
        let mut ctx = self.initial_context();
        let mut body = Vec::new();
        let mut logp = 0.0f64;
        loop {
            if body.len() == self.max_body_len() {
                // Forced end marker carries probability 1.
                break;
            }
            let model_probs = self.conditional(&ctx);
            let truncated = truncate_distribution(model_probs, config);
            let symbol = draw_categorical(&truncated, rng);
            logp += model_probs[symbol].ln();
            if symbol == self.eos_id() {
                break;
            }
            body.push(symbol);
            self.shift_context(&mut ctx, symbol);
        }
        (
            self.body_text(&body),
            LogProb::new(logp.min(0.0)).expect("finite logprob"),
        )
    }
}

fn draw_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let mut remaining = rng.random::<f64>();
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            remaining -= p;
            if remaining <= 0.0 {
                return i;
            }
        }
    }
    // Rounding left a sliver; the last positive entry absorbs it.
    last_positive
}
