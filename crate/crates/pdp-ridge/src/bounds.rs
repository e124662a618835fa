//! High-probability accuracy bound on the distance between the released
//! coefficients and the true data-generating parameter.
//!
//! With probability at least `1 - delta` over the release noise and the
//! label noise,
//!
//! ```text
//! ||theta* - theta_released||
//!     <= ||theta*|| / (1 + lambda_min(Gram_w) / lambda)     (ridge bias)
//!      + (d + sqrt(2d/delta)) / eta                         (release noise)
//!      + (sigma / lambda) * sqrt(2d/delta) * ||w||          (label noise)
//! ```
//!
//! where `Gram_w = sum_i w_i x_i x_i^T`. The bound is stated for the
//! calibrated noise rate; the evaluator accepts any `eta > 0` but coverage
//! is only claimed for calibrated values.

use crate::error::{Error, Result};
use crate::ridge::{weighted_gram, Dataset, WeightVector};

/// Inputs of the accuracy bound evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyBoundInput {
    pub theta_star_norm: f64,
    /// Smallest eigenvalue of the weighted Gram matrix.
    pub lambda_min_gram: f64,
    pub lambda: f64,
    pub eta: f64,
    pub dimension: usize,
    pub delta: f64,
    /// Label-noise standard deviation.
    pub sigma: f64,
    /// Euclidean norm of the weight vector.
    pub weight_norm: f64,
}

impl AccuracyBoundInput {
    pub fn validate(&self) -> Result<()> {
        let positive = [("lambda", self.lambda), ("eta", self.eta)];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        let non_negative = [
            ("theta_star_norm", self.theta_star_norm),
            ("lambda_min_gram", self.lambda_min_gram),
            ("sigma", self.sigma),
            ("weight_norm", self.weight_norm),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// The three terms of the accuracy bound: ridge bias, release noise,
/// label noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub bias: f64,
    pub release_noise: f64,
    pub label_noise: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.bias + self.release_noise + self.label_noise
    }
}

/// Evaluate the bound term by term.
pub fn accuracy_bound_terms(input: &AccuracyBoundInput) -> Result<BoundTerms> {
    input.validate()?;
    let d = input.dimension as f64;
    let tail = (2.0 * d / input.delta).sqrt();
    Ok(BoundTerms {
        bias: input.theta_star_norm / (1.0 + input.lambda_min_gram / input.lambda),
        release_noise: (d + tail) / input.eta,
        label_noise: input.sigma / input.lambda * tail * input.weight_norm,
    })
}

/// Evaluate the bound as a single number.
pub fn accuracy_bound(input: &AccuracyBoundInput) -> Result<f64> {
    Ok(accuracy_bound_terms(input)?.total())
}

/// Smallest eigenvalue of the weighted Gram matrix `sum_i w_i x_i x_i^T`,
/// clamped to zero when rounding puts it just below.
pub fn min_gram_eigenvalue(data: &Dataset, w: &WeightVector) -> Result<f64> {
    if w.len() != data.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} data points",
            w.len(),
            data.len()
        )));
    }
    let gram = weighted_gram(data, w);
    let eigenvalues = gram
        .symmetric_eigen()
        .eigenvalues;
    let min = eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    debug_assert!(min >= -1e-10, "Gram matrix eigenvalue {min} below tolerance");
    Ok(min.max(0.0))
}
