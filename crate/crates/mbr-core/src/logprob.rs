//! Natural-log probabilities and log-space accumulation.
//!
//! Sequence probabilities underflow quickly in linear space, so everything
//! downstream (estimators, divergences, the toy model) carries probabilities
//! as natural logs and normalizes with log-sum-exp.

use std::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LogProbError {
    #[error("log-probability must not be NaN")]
    NotANumber,
    #[error("log-probability {0} is positive; probabilities cannot exceed 1")]
    Positive(f64),
    #[error("log-probability must not be +inf")]
    PositiveInfinity,
}

/// A natural-log probability: a finite value `<= 0`, or negative infinity
/// for log(0).
///
/// `NaN` and `+inf` are rejected at construction, which makes the type
/// totally ordered with log(0) below every finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProb(f64);

impl LogProb {
    /// log(1) = 0.
    pub const ONE: LogProb = LogProb(0.0);
    /// The distinguished log(0).
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);

    /// A proper log-probability: finite `<= 0`, or `-inf`.
    pub fn new(value: f64) -> Result<Self, LogProbError> {
        if value.is_nan() {
            return Err(LogProbError::NotANumber);
        }
        if value > 0.0 {
            return Err(LogProbError::Positive(value));
        }
        Ok(LogProb(value))
    }

    /// Accepts positive finite values too. Some external scorers emit
    /// length-penalized scores that are not true log-probabilities; the
    /// ingestion layer opts into those explicitly.
    pub fn new_unnormalized(value: f64) -> Result<Self, LogProbError> {
        if value.is_nan() {
            return Err(LogProbError::NotANumber);
        }
        if value == f64::INFINITY {
            return Err(LogProbError::PositiveInfinity);
        }
        Ok(LogProb(value))
    }

    /// From a linear-space probability in [0, 1].
    pub fn from_prob(p: f64) -> Result<Self, LogProbError> {
        if p.is_nan() {
            return Err(LogProbError::NotANumber);
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(LogProbError::Positive(p.ln()));
        }
        Ok(LogProb(p.ln()))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Linear-space probability, `exp(value)`.
    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl Eq for LogProb {}

impl PartialOrd for LogProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogProb {
    fn cmp(&self, other: &Self) -> Ordering {
        // NaN is unrepresentable, so partial_cmp always succeeds.
        self.0.partial_cmp(&other.0).unwrap()
    }
}

impl From<LogProb> for f64 {
    fn from(lp: LogProb) -> f64 {
        lp.0
    }
}

/// log(sum(exp(x_i))) without overflow. Returns `-inf` for an empty slice
/// or when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_positive() {
        assert_eq!(LogProb::new(f64::NAN), Err(LogProbError::NotANumber));
        assert_eq!(LogProb::new(0.5), Err(LogProbError::Positive(0.5)));
        assert!(LogProb::new(0.0).is_ok());
        assert!(LogProb::new(-1e300).is_ok());
    }

    #[test]
    fn unnormalized_permits_positive_finite() {
        assert!(LogProb::new_unnormalized(2.5).is_ok());
        assert_eq!(
            LogProb::new_unnormalized(f64::INFINITY),
            Err(LogProbError::PositiveInfinity)
        );
    }

    #[test]
    fn log_zero_below_every_finite_value() {
        let zero = LogProb::ZERO;
        assert!(zero < LogProb::new(-1e308).unwrap());
        assert!(zero < LogProb::ONE);
        assert!(zero.is_zero());
        assert_eq!(zero.prob(), 0.0);
    }

    #[test]
    fn exp_in_unit_interval() {
        for v in [-0.0, -1.0, -50.0, f64::NEG_INFINITY] {
            let p = LogProb::new(v).unwrap().prob();
            assert!((0.0..=1.0).contains(&p), "exp({v}) = {p} out of range");
        }
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [-1.2f64, -0.3, -4.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum();
        assert!((log_sum_exp(&xs) - direct.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_all_zero_mass() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn log_sum_exp_survives_deep_underflow() {
        // exp(-1000) underflows, but shifting by the max keeps the result exact.
        let lse = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((lse - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
