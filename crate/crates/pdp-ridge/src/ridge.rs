//! Weighted ridge regression solved in closed form.
//!
//! The estimator minimizes
//!
//! ```text
//! L_w(theta) = sum_i w_i (y_i - theta . x_i)^2 + lambda ||theta||^2
//! ```
//!
//! over points `x_i in [0,1]^d`, labels `y_i in [-1,1]` and non-negative
//! weights summing to one. The minimizer solves the linear system
//! `(sum_i w_i x_i x_i^T + lambda I) theta = sum_i w_i y_i x_i`, which is
//! symmetric positive definite for any `lambda > 0`; we factor it with a
//! Cholesky decomposition rather than forming an inverse.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum absolute deviation of a weight vector's sum from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A feature matrix with entries in `[0,1]` and labels in `[-1,1]`.
///
/// Construction validates the ranges strictly; out-of-range values are an
/// error, never clamped, because the privacy calibration downstream is
/// void outside this domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>, // row-major, n * d
    labels: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Build a dataset from a flat row-major feature buffer.
    pub fn from_flat(n: usize, d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidData(format!(
                "need n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch(format!(
                "feature buffer has {} entries, expected n*d = {}",
                features.len(),
                n * d
            )));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "got {} labels for {} rows",
                labels.len(),
                n
            )));
        }
        for (idx, &v) in features.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidData(format!(
                    "row {}, feature f{}: value {} outside [0,1]",
                    idx / d,
                    idx % d,
                    v
                )));
            }
        }
        for (i, &y) in labels.iter().enumerate() {
            if !(-1.0..=1.0).contains(&y) {
                return Err(Error::InvalidData(format!(
                    "row {i}, label: value {y} outside [-1,1]"
                )));
            }
        }
        Ok(Self {
            features,
            labels,
            n,
            d,
        })
    }

    /// Build a dataset from per-row feature slices.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidData("need n >= 1 rows".into()));
        }
        let d = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} features, expected {d}",
                    r.len()
                )));
            }
        }
        let features = rows.iter().flatten().copied().collect();
        Self::from_flat(rows.len(), d, features, labels)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Copy of the dataset with point `i` replaced by `(x, y)`.
    ///
    /// Used to form i-neighboring datasets; the replacement is validated
    /// like any other point.
    pub fn with_point_replaced(&self, i: usize, x: &[f64], y: f64) -> Result<Self> {
        if i >= self.n {
            return Err(Error::DimensionMismatch(format!(
                "row index {i} out of range for n={}",
                self.n
            )));
        }
        if x.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "replacement has {} features, expected {}",
                x.len(),
                self.d
            )));
        }
        let mut features = self.features.clone();
        features[i * self.d..(i + 1) * self.d].copy_from_slice(x);
        let mut labels = self.labels.clone();
        labels[i] = y;
        Self::from_flat(self.n, self.d, features, labels)
    }

    /// Sub-dataset containing the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidData("selection is empty".into()));
        }
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(Error::DimensionMismatch(format!(
                    "row index {i} out of range for n={}",
                    self.n
                )));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::from_flat(indices.len(), self.d, features, labels)
    }

    /// First `k` rows as a dataset.
    pub fn head(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidData(format!(
                "prefix length {k} out of range for n={}",
                self.n
            )));
        }
        Self::from_flat(
            k,
            self.d,
            self.features[..k * self.d].to_vec(),
            self.labels[..k].to_vec(),
        )
    }
}

/// Non-negative per-point weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("weight vector is empty".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "weight {i} is {w}, must be finite and >= 0"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOLERANCE:e}"
            )));
        }
        Ok(Self(weights))
    }

    /// The uniform weighting `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidWeights("weight vector is empty".into()));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
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

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Euclidean norm of the weight vector (appears in the accuracy bound).
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Regularization strength, feature dimension and the optional a-priori
/// bound on the norm of the unregularized solution.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub dimension: usize,
    pub theta_bound: Option<f64>,
}

impl RidgeConfig {
    pub fn new(lambda: f64, dimension: usize, theta_bound: Option<f64>) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and > 0, got {lambda}"
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be >= 1".into()));
        }
        if let Some(b) = theta_bound {
            if !b.is_finite() || b <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "theta_bound must be finite and > 0, got {b}"
                )));
            }
        }
        Ok(Self {
            lambda,
            dimension,
            theta_bound,
        })
    }
}

fn check_shapes(data: &Dataset, w: &WeightVector) -> Result<()> {
    if w.len() != data.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} data points",
            w.len(),
            data.len()
        )));
    }
    Ok(())
}

/// Weighted Gram matrix `sum_i w_i x_i x_i^T`, accumulated in row order.
pub(crate) fn weighted_gram(data: &Dataset, w: &WeightVector) -> DMatrix<f64> {
    let d = data.dim();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for i in 0..data.len() {
        let xi = data.row(i);
        let wi = w.get(i);
        for a in 0..d {
            let wxa = wi * xi[a];
            for b in a..d {
                gram[(a, b)] += wxa * xi[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    gram
}

fn weighted_xy(data: &Dataset, w: &WeightVector) -> DVector<f64> {
    let d = data.dim();
    let mut rhs = DVector::<f64>::zeros(d);
    for i in 0..data.len() {
        let xi = data.row(i);
        let wy = w.get(i) * data.label(i);
        for a in 0..d {
            rhs[a] += wy * xi[a];
        }
    }
    rhs
}

/// Minimizer of the weighted ridge objective, via Cholesky solve of the
/// normal equations.
pub fn solve_weighted_ridge(data: &Dataset, w: &WeightVector, cfg: &RidgeConfig) -> Result<Vec<f64>> {
    check_shapes(data, w)?;
    if cfg.dimension != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "config dimension {} but data has d={}",
            cfg.dimension,
            data.dim()
        )));
    }
    let mut system = weighted_gram(data, w);
    for a in 0..data.dim() {
        system[(a, a)] += cfg.lambda;
    }
    let rhs = weighted_xy(data, w);
    let chol = Cholesky::new(system).ok_or_else(|| {
        Error::NumericalFailure("Cholesky factorization of the ridge system failed".into())
    })?;
    let theta = chol.solve(&rhs);
    Ok(theta.as_slice().to_vec())
}

/// Value of the weighted ridge objective at `theta`.
pub fn weighted_ridge_loss(
    data: &Dataset,
    w: &WeightVector,
    theta: &[f64],
    lambda: f64,
) -> Result<f64> {
    check_shapes(data, w)?;
    if theta.len() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "theta has {} entries but data has d={}",
            theta.len(),
            data.dim()
        )));
    }
    let mut loss = 0.0;
    for i in 0..data.len() {
        let pred: f64 = data.row(i).iter().zip(theta).map(|(x, t)| x * t).sum();
        let r = data.label(i) - pred;
        loss += w.get(i) * r * r;
    }
    loss += lambda * theta.iter().map(|t| t * t).sum::<f64>();
    Ok(loss)
}

/// Gradient of the weighted ridge objective at `theta`.
pub fn weighted_ridge_loss_gradient(
    data: &Dataset,
    w: &WeightVector,
    theta: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_shapes(data, w)?;
    if theta.len() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "theta has {} entries but data has d={}",
            theta.len(),
            data.dim()
        )));
    }
    let d = data.dim();
    let mut grad = vec![0.0; d];
    for i in 0..data.len() {
        let xi = data.row(i);
        let pred: f64 = xi.iter().zip(theta.iter()).map(|(x, t)| x * t).sum();
        let scale = -2.0 * w.get(i) * (data.label(i) - pred);
        for a in 0..d {
            grad[a] += scale * xi[a];
        }
    }
    for a in 0..d {
        grad[a] += 2.0 * lambda * theta[a];
    }
    Ok(grad)
}
