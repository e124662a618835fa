//! Comparison methods: non-personalized output perturbation and the
//! sample-then-privatize mechanism.
//!
//! The non-personalized baseline satisfies every budget by running the
//! uniform pipeline at the most stringent budget `eps* = min_i eps_i`.
//!
//! The subsampling baseline picks a threshold `t`, keeps each point
//! independently with probability `(e^{eps_i} - 1) / (e^t - 1)` (capped at
//! one), and runs the uniform output-perturbation pipeline at budget `t`
//! on whatever survived.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pdpop::{fit, PrivacyProfile, PrivateModel};
use crate::ridge::{Dataset, RidgeConfig};

/// Threshold choice for the subsampling baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// `t = max_i eps_i`
    MaxEpsilon,
    /// `t = mean_i eps_i`
    MeanEpsilon,
    /// A caller-chosen threshold.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JorgensenConfig {
    pub threshold_rule: ThresholdRule,
}

impl JorgensenConfig {
    pub fn new(threshold_rule: ThresholdRule) -> Result<Self> {
        if let ThresholdRule::Explicit(t) = threshold_rule {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "explicit threshold must be finite and > 0, got {t}"
                )));
            }
        }
        Ok(Self { threshold_rule })
    }
}

/// Result of one subsampling pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleOutcome {
    pub kept_indices: Vec<usize>,
    pub threshold: f64,
    pub inclusion_probs: Vec<f64>,
}

/// Uniform-budget baseline at `eps* = min_i eps_i`.
///
/// Identical to the personalized fit on the constant profile
/// `(eps*, ..., eps*)`: uniform weights `1/n` and total budget `n * eps*`.
pub fn fit_non_personalized<R: Rng + ?Sized>(
    data: &Dataset,
    profile: &PrivacyProfile,
    cfg: &RidgeConfig,
    rng: &mut R,
) -> Result<PrivateModel> {
    if profile.len() != data.len() {
        return Err(Error::DimensionMismatch(format!(
            "profile has {} budgets for {} data points",
            profile.len(),
            data.len()
        )));
    }
    let uniform = PrivacyProfile::constant(profile.min(), profile.len())?;
    fit(data, &uniform, cfg, rng)
}

/// Resolve the threshold for a profile under the given rule.
pub fn jorgensen_threshold(profile: &PrivacyProfile, cfg: &JorgensenConfig) -> f64 {
    match cfg.threshold_rule {
        ThresholdRule::MaxEpsilon => profile.max(),
        ThresholdRule::MeanEpsilon => profile.mean(),
        ThresholdRule::Explicit(t) => t,
    }
}

/// Inclusion probability for a single budget at threshold `t`.
///
/// Points at or above the threshold are kept with probability exactly one,
/// without evaluating the exponentials.
pub fn inclusion_probability(epsilon: f64, t: f64) -> f64 {
    if epsilon >= t {
        1.0
    } else {
        (epsilon.exp() - 1.0) / (t.exp() - 1.0)
    }
}

/// Independent Bernoulli subsample of the profile's points.
///
/// Points with `eps_i >= t` are kept without consuming randomness, so a
/// run where every probability is one draws nothing from `rng`.
pub fn jorgensen_subsample<R: Rng + ?Sized>(
    profile: &PrivacyProfile,
    t: f64,
    rng: &mut R,
) -> SubsampleOutcome {
    let mut kept_indices = Vec::new();
    let mut inclusion_probs = Vec::with_capacity(profile.len());
    for (i, &eps) in profile.as_slice().iter().enumerate() {
        let p = inclusion_probability(eps, t);
        inclusion_probs.push(p);
        let keep = if p >= 1.0 {
            true
        } else {
            rng.random::<f64>() < p
        };
        if keep {
            kept_indices.push(i);
        }
    }
    SubsampleOutcome {
        kept_indices,
        threshold: t,
        inclusion_probs,
    }
}

/// Subsample, then run the uniform output-perturbation pipeline at budget
/// `t` on the kept points (weights `1/m`, total budget `m * t`).
///
/// Returns [`Error::EmptySubsample`] when nothing survives; callers
/// discard the trial rather than retrying, since a retry would bias the
/// loss distribution.
pub fn fit_jorgensen<R: Rng + ?Sized>(
    data: &Dataset,
    profile: &PrivacyProfile,
    cfg: &RidgeConfig,
    jorgensen: &JorgensenConfig,
    rng: &mut R,
) -> Result<PrivateModel> {
    if profile.len() != data.len() {
        return Err(Error::DimensionMismatch(format!(
            "profile has {} budgets for {} data points",
            profile.len(),
            data.len()
        )));
    }
    let t = jorgensen_threshold(profile, jorgensen);
    let outcome = jorgensen_subsample(profile, t, rng);
    if outcome.kept_indices.is_empty() {
        return Err(Error::EmptySubsample);
    }
    let subset = data.select(&outcome.kept_indices)?;
    let uniform = PrivacyProfile::constant(t, outcome.kept_indices.len())?;
    fit(&subset, &uniform, cfg, rng)
}
