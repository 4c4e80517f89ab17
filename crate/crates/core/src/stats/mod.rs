//! Consistency aggregation and the statistical model relating perturbation
//! features to exact-match success.

pub mod diagnostics;
pub mod glmm;
pub mod observations;
pub mod report;
pub mod simulate;

use thiserror::Error;

pub use diagnostics::{spearman, vif, Diagnostics, RHO_THRESHOLD, VIF_THRESHOLD};
pub use glmm::{fit_glmm, logistic_irls, Factor, FixedEffect, GlmmData, GlmmOptions, RegressionFit};
pub use observations::{design_from_rows, ObservationRow};
pub use report::{regress, RegressionReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no input values")]
    EmptyInput,
    #[error("rate {0} is outside [0, 1]")]
    InvalidRate(String),
    #[error("outcomes must be 0 or 1")]
    InvalidOutcome,
    #[error("inputs have inconsistent dimensions")]
    DimensionMismatch,
    #[error("grouping factor `{0}` needs at least two levels")]
    InsufficientLevels(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
}

/// Largest relative consistency drop over perturbation types, in percent:
/// `max_p (1 − EXM_p) × 100`, where `EXM_p` is the exact-match rate on the
/// perturbed versions of instances the model solves unperturbed.
pub fn max_delta_exm(rates: &[f64]) -> Result<f64, StatsError> {
    if rates.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut best = f64::NEG_INFINITY;
    for &r in rates {
        if !(0.0..=1.0).contains(&r) {
            return Err(StatsError::InvalidRate(r.to_string()));
        }
        best = best.max((1.0 - r) * 100.0);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_drop() {
        assert_eq!(max_delta_exm(&[1.0, 1.0]).unwrap(), 0.0);
        assert!((max_delta_exm(&[0.9, 0.7, 0.8]).unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(max_delta_exm(&[]), Err(StatsError::EmptyInput));
        assert!(max_delta_exm(&[1.2]).is_err());
    }
}
