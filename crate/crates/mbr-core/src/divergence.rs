//! Divergences between restricted-support estimates and the true model.
//!
//! The estimates live on the deduplicated reference set R, so their KL
//! divergence from the model needs only the reference logprobs; the
//! Jensen-Shannon divergence additionally needs the model mass outside R
//! (the tail mass), which callers must supply when logprobs come from an
//! external model. The model-based estimate admits a closed form:
//! KL = -log sum_R P(y), which doubles as a test oracle.

use thiserror::Error;

use crate::logprob::log_sum_exp;
use crate::pool::HypothesisPool;
use crate::utility::UtilityMatrix;
use crate::weights::{WeightError, WeightVector};

#[derive(Debug, Error, PartialEq)]
pub enum DivergenceError {
    #[error("distribution has {masses} masses but {logprobs} logprobs were supplied")]
    AlignmentMismatch { masses: usize, logprobs: usize },
    #[error("tail mass {0} lies outside [0, 1]")]
    InvalidTailMass(f64),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// A probability distribution with support restricted to a pool's reference
/// list, plus the true-model mass outside that support.
///
/// The masses are aligned with the reference list they were computed from;
/// `tail_mass` is `1 - sum_R P(y)` and is stored rather than recomputed
/// because externally ingested pools know the restricted model only through
/// the logprobs they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedDistribution {
    masses: WeightVector,
    tail_mass: f64,
}

impl RestrictedDistribution {
    pub fn new(masses: WeightVector, tail_mass: f64) -> Result<Self, DivergenceError> {
        if !(0.0..=1.0).contains(&tail_mass) {
            return Err(DivergenceError::InvalidTailMass(tail_mass));
        }
        Ok(RestrictedDistribution { masses, tail_mass })
    }

    /// Derives the tail mass from the aligned model logprobs:
    /// `1 - sum exp(logP)`, clamped into [0, 1].
    pub fn with_tail_from(masses: WeightVector, logprobs: &[f64]) -> Self {
        let covered: f64 = logprobs.iter().map(|lp| lp.exp()).sum();
        RestrictedDistribution {
            masses,
            tail_mass: (1.0 - covered).clamp(0.0, 1.0),
        }
    }

    pub fn masses(&self) -> &WeightVector {
        &self.masses
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// KL(p || P) over the restricted support: sum_R p(y) (log p(y) - log P(y))
/// with the 0 log 0 = 0 convention.
///
/// Returns positive infinity when p puts mass where the model puts none;
/// divergence sweeps aggregate that as a distinguished value instead of an
/// error.
pub fn kl_restricted(p: &RestrictedDistribution, logprobs: &[f64]) -> Result<f64, DivergenceError> {
    check_alignment(p, logprobs)?;
    let mut total = 0.0;
    for (&mass, &lp) in p.masses().weights().iter().zip(logprobs) {
        if mass == 0.0 {
            continue;
        }
        if lp == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        total += mass * (mass.ln() - lp);
    }
    // Accumulated rounding can leave a tiny negative residue at p = P.
    Ok(total.max(0.0))
}

/// Closed form for the model-based estimate: KL(P_MB || P) = log alpha
/// = -log sum_R P(y), computed with log-sum-exp over the reference logprobs.
pub fn kl_model_based_closed_form(pool: &HypothesisPool) -> Result<f64, DivergenceError> {
    let lse = log_sum_exp(&pool.reference_logprobs());
    if lse == f64::NEG_INFINITY {
        return Err(WeightError::DegenerateWeights.into());
    }
    // sum_R P can exceed 1 by rounding when R covers everything.
    Ok((-lse).max(0.0))
}

/// Jensen-Shannon divergence of p from the model, computable on the
/// restricted support alone:
/// 1/2 [ sum_R p log(p/M) + sum_R P log(P/M) + tail * ln 2 ], M = (p+P)/2.
pub fn jsd_restricted(
    p: &RestrictedDistribution,
    logprobs: &[f64],
) -> Result<f64, DivergenceError> {
    check_alignment(p, logprobs)?;
    let mut total = 0.0;
    for (&mass, &lp) in p.masses().weights().iter().zip(logprobs) {
        let model = lp.exp();
        let mid = 0.5 * (mass + model);
        if mass > 0.0 {
            total += mass * (mass / mid).ln();
        }
        if model > 0.0 {
            total += model * (model / mid).ln();
        }
    }
    total += p.tail_mass() * std::f64::consts::LN_2;
    Ok((0.5 * total).clamp(0.0, std::f64::consts::LN_2))
}

/// Both sides of the estimation-error bound
/// |E_P[u] - E_p[u]| <= u_max sqrt(2 KL(p || P)).
///
/// The matrix columns, the estimate `p`, and `exact_logprobs` must share one
/// support enumeration; the left side maximizes the absolute objective gap
/// over candidates (matrix rows). An infinite KL makes the right side
/// infinite and the bound vacuous.
pub fn pinsker_objective_bound(
    matrix: &UtilityMatrix,
    p: &WeightVector,
    exact_logprobs: &[f64],
) -> Result<(f64, f64), DivergenceError> {
    if p.len() != exact_logprobs.len() || matrix.cols() != p.len() {
        return Err(DivergenceError::AlignmentMismatch {
            masses: p.len(),
            logprobs: exact_logprobs.len(),
        });
    }
    let model: Vec<f64> = exact_logprobs.iter().map(|lp| lp.exp()).collect();
    let lhs = (0..matrix.rows())
        .map(|i| {
            let row = matrix.row(i);
            let gap: f64 = row
                .iter()
                .zip(model.iter().zip(p.weights()))
                .map(|(u, (pm, pe))| u * (pm - pe))
                .sum();
            gap.abs()
        })
        .fold(0.0f64, f64::max);

    let distribution = RestrictedDistribution::new(p.clone(), 0.0)?;
    let kl = kl_restricted(&distribution, exact_logprobs)?;
    let rhs = matrix.u_max() * (2.0 * kl).sqrt();
    Ok((lhs, rhs))
}

fn check_alignment(
    p: &RestrictedDistribution,
    logprobs: &[f64],
) -> Result<(), DivergenceError> {
    if p.len() != logprobs.len() {
        return Err(DivergenceError::AlignmentMismatch {
            masses: p.len(),
            logprobs: logprobs.len(),
        });
    }
    Ok(())
}
