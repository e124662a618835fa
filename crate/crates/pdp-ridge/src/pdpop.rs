//! Per-point privacy calibration and the private fitting pipeline.
//!
//! Given budgets `eps_1..eps_n`, each point receives weight
//! `w_i = eps_i / sum_j eps_j` in the ridge objective and the release
//! noise rate is set to
//!
//! ```text
//! eta = lambda / (2 sqrt(d) (1 + sqrt(d) * b)) * sum_j eps_j
//! ```
//!
//! where `b` bounds the norm of the non-private solution. Without extra
//! assumptions `b = min(1/sqrt(lambda), sqrt(d)/lambda)`, which the
//! solution satisfies automatically; when the caller can bound the
//! unregularized minimizer by some known `B`, that `B` is used instead
//! and (for `B` below the automatic bound) yields a larger `eta`, i.e.
//! less noise.
//!
//! Fitting solves the weighted ridge problem and releases the solution
//! plus noise drawn from the law in [`crate::noise`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::noise::{sample_noise, NoiseParams};
use crate::ridge::{solve_weighted_ridge, Dataset, RidgeConfig, WeightVector};

/// Budgets above this are rejected as likely unit errors; they would also
/// overflow the exponentials in subsampling-based comparisons.
pub const MAX_EPSILON: f64 = 1e6;

/// Per-point privacy budgets, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyProfile(Vec<f64>);

impl PrivacyProfile {
    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::InvalidBudget("profile is empty".into()));
        }
        for (i, &e) in epsilons.iter().enumerate() {
            if !e.is_finite() || e <= 0.0 {
                return Err(Error::InvalidBudget(format!(
                    "row {i}: epsilon {e} must be finite and > 0"
                )));
            }
            if e > MAX_EPSILON {
                return Err(Error::InvalidBudget(format!(
                    "row {i}: epsilon {e} exceeds the accepted maximum {MAX_EPSILON:e}"
                )));
            }
        }
        Ok(Self(epsilons))
    }

    /// Constant profile, e.g. for the non-personalized baseline.
    pub fn constant(epsilon: f64, n: usize) -> Result<Self> {
        Self::new(vec![epsilon; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.0.len() as f64
    }
}

/// Which bound on the non-private solution norm backed the calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Automatic bound `min(1/sqrt(lambda), sqrt(d)/lambda)`; no
    /// assumptions on the data beyond the domain ranges.
    Unassumed,
    /// Caller-supplied bound on the unregularized minimizer.
    BoundedTheta,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Unassumed => "unassumed",
            Regime::BoundedTheta => "bounded-theta",
        }
    }
}

/// Output of [`calibrate`]: the weights and noise rate to fit with.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub weights: WeightVector,
    pub eta: f64,
    pub regime: Regime,
    /// The solution-norm bound actually used in the `eta` formula.
    pub norm_bound: f64,
    pub epsilon_sum: f64,
}

/// Automatic bound on the ridge solution norm: `min(1/sqrt(lambda), sqrt(d)/lambda)`.
pub fn ridge_norm_bound(lambda: f64, dimension: usize) -> f64 {
    let d = dimension as f64;
    (1.0 / lambda.sqrt()).min(d.sqrt() / lambda)
}

/// Noise rate for the given regularization, dimension, norm bound and
/// total budget.
fn noise_rate(lambda: f64, dimension: usize, norm_bound: f64, epsilon_sum: f64) -> f64 {
    let sqrt_d = (dimension as f64).sqrt();
    lambda / (2.0 * sqrt_d * (1.0 + sqrt_d * norm_bound)) * epsilon_sum
}

/// Turn a privacy profile into fit parameters: proportional weights and
/// the noise rate for the requested regime.
pub fn calibrate(
    profile: &PrivacyProfile,
    lambda: f64,
    dimension: usize,
    theta_bound: Option<f64>,
) -> Result<Calibration> {
    let cfg = RidgeConfig::new(lambda, dimension, theta_bound)?;
    let epsilon_sum = profile.sum();
    let weights = WeightVector::new(
        profile.as_slice().iter().map(|e| e / epsilon_sum).collect(),
    )?;
    let auto_bound = ridge_norm_bound(lambda, dimension);
    let (regime, norm_bound) = match cfg.theta_bound {
        Some(b) => {
            if b > auto_bound {
                log::warn!(
                    "theta_bound {b} exceeds the automatic bound {auto_bound}; \
                     the calibration will be noisier than the unassumed regime"
                );
            }
            (Regime::BoundedTheta, b)
        }
        None => (Regime::Unassumed, auto_bound),
    };
    Ok(Calibration {
        weights,
        eta: noise_rate(lambda, dimension, norm_bound, epsilon_sum),
        regime,
        norm_bound,
        epsilon_sum,
    })
}

/// Upper bound on how far the non-private solution can move when point
/// `i` (weight `w_i`) is replaced: `2 sqrt(d) w_i (sqrt(d) b + 1) / lambda`.
pub fn sensitivity_bound(w_i: f64, lambda: f64, dimension: usize, norm_bound: f64) -> f64 {
    let sqrt_d = (dimension as f64).sqrt();
    2.0 * sqrt_d * w_i * (sqrt_d * norm_bound + 1.0) / lambda
}

/// A released model: the noisy coefficients plus the calibration record.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateModel {
    /// Released coefficient vector (non-private solution plus noise).
    pub theta: Vec<f64>,
    /// The noiseless ridge solution. Retained so tests can measure the
    /// injected noise; it must never be released or serialized.
    pub non_private_theta: Vec<f64>,
    pub calibration: Calibration,
    pub lambda: f64,
}

impl PrivateModel {
    pub fn dimension(&self) -> usize {
        self.theta.len()
    }

    /// Write the releasable part of the model as a flat key-value record.
    ///
    /// Deliberately excludes the non-private solution and the per-point
    /// weights/budgets; the record carries only the noisy coefficients and
    /// scalar calibration metadata.
    pub fn write_record(&self, method: &str, out: &mut impl std::io::Write) -> Result<()> {
        writeln!(out, "method = {method}")?;
        writeln!(out, "lambda = {}", self.lambda)?;
        writeln!(out, "dimension = {}", self.dimension())?;
        writeln!(out, "regime = {}", self.calibration.regime.as_str())?;
        writeln!(out, "norm_bound = {}", self.calibration.norm_bound)?;
        writeln!(out, "eta = {}", self.calibration.eta)?;
        writeln!(out, "epsilon_sum = {}", self.calibration.epsilon_sum)?;
        for (i, t) in self.theta.iter().enumerate() {
            writeln!(out, "theta_{i} = {t}")?;
        }
        Ok(())
    }
}

/// Full private fit: calibrate, solve the weighted ridge problem, add
/// release noise.
pub fn fit<R: Rng + ?Sized>(
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
    let calibration = calibrate(profile, cfg.lambda, data.dim(), cfg.theta_bound)?;
    let non_private = solve_weighted_ridge(data, &calibration.weights, cfg)?;

    // The automatic norm bound holds for every valid input.
    debug_assert!({
        let norm = non_private.iter().map(|t| t * t).sum::<f64>().sqrt();
        norm <= ridge_norm_bound(cfg.lambda, data.dim()) + 1e-9
    });

    let params = NoiseParams::new(calibration.eta, data.dim())?;
    let z = sample_noise(&params, rng);
    let theta = non_private.iter().zip(&z).map(|(t, n)| t + n).collect();
    Ok(PrivateModel {
        theta,
        non_private_theta: non_private,
        calibration,
        lambda: cfg.lambda,
    })
}
