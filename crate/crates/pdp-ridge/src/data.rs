//! Data sources: synthetic regression instances, three-segment privacy
//! profiles, and the medical-cost CSV preprocessing pipeline.
//!
//! Synthetic data draws a unit-norm parameter `theta*` uniformly from the
//! sphere, features uniformly from `[0,1]^d`, and sets the label to
//! `x . theta* / sqrt(d)`, which keeps every label in `[-1,1]`. Optional
//! Gaussian label noise is clamped back into range (the clamp rate is
//! logged); the default is noiseless.
//!
//! Privacy profiles split the population into conservatives, mediums and
//! liberals with fractions `f_c`, `f_m`, `1 - f_c - f_m`. Conservative
//! budgets are uniform on `[eps_c, eps_m]`, medium budgets uniform on
//! `[eps_m, eps_l]`, and liberals all get `eps_l`. The assignment is
//! shuffled so segments are not positional.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::noise::{derive_rng, sample_unit_sphere, standard_normal, RngSeed};
use crate::pdpop::{PrivacyProfile, MAX_EPSILON};
use crate::ridge::Dataset;

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub d: usize,
    pub n: usize,
    /// Label-noise standard deviation; zero gives an exactly linear
    /// relation.
    pub sigma: f64,
    pub seed: RngSeed,
}

impl SyntheticSpec {
    pub fn new(d: usize, n: usize, sigma: f64, seed: RngSeed) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidConfig(format!(
                "need d >= 1 and n >= 1, got d={d}, n={n}"
            )));
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(Self { d, n, sigma, seed })
    }
}

/// Three-segment privacy population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacySegmentSpec {
    pub f_c: f64,
    pub f_m: f64,
    pub eps_c: f64,
    pub eps_m: f64,
    pub eps_l: f64,
    pub seed: RngSeed,
}

impl PrivacySegmentSpec {
    pub fn new(f_c: f64, f_m: f64, eps_c: f64, eps_m: f64, eps_l: f64, seed: RngSeed) -> Result<Self> {
        for (name, f) in [("f_c", f_c), ("f_m", f_m)] {
            if !f.is_finite() || !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0,1], got {f}"
                )));
            }
        }
        if f_c + f_m > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "f_c + f_m = {} exceeds 1",
                f_c + f_m
            )));
        }
        if !(eps_c > 0.0 && eps_c < eps_m && eps_m < eps_l) {
            return Err(Error::InvalidConfig(format!(
                "budgets must satisfy 0 < eps_c < eps_m < eps_l, got {eps_c}, {eps_m}, {eps_l}"
            )));
        }
        if eps_l > MAX_EPSILON {
            return Err(Error::InvalidConfig(format!(
                "eps_l {eps_l} exceeds the accepted maximum {MAX_EPSILON:e}"
            )));
        }
        Ok(Self {
            f_c,
            f_m,
            eps_c,
            eps_m,
            eps_l,
            seed,
        })
    }

    /// The defaults used throughout the experiment harness.
    pub fn default_with_seed(seed: RngSeed) -> Self {
        Self::new(0.34, 0.43, 0.01, 0.2, 1.0, seed).expect("defaults are valid")
    }
}

/// A train/test pair, plus the generating parameter when it is known.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub theta_star: Option<Vec<f64>>,
}

fn synthetic_dataset<R: Rng + ?Sized>(
    theta_star: &[f64],
    n: usize,
    sigma: f64,
    rng: &mut R,
) -> Dataset {
    let d = theta_star.len();
    let sqrt_d = (d as f64).sqrt();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        for _ in 0..d {
            features.push(rng.random::<f64>());
        }
        let y: f64 = features[start..]
            .iter()
            .zip(theta_star)
            .map(|(x, t)| x * t)
            .sum::<f64>()
            / sqrt_d;
        labels.push(y);
    }
    if sigma > 0.0 {
        let mut clamped = 0usize;
        for y in &mut labels {
            *y += sigma * standard_normal(rng);
            if *y > 1.0 || *y < -1.0 {
                *y = y.clamp(-1.0, 1.0);
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::warn!(
                "label noise clamped {clamped} of {n} labels back into [-1,1]"
            );
        }
    }
    Dataset::from_flat(n, d, features, labels).expect("generated data is in range by construction")
}

/// Draw a synthetic dataset and the parameter that generated it.
pub fn generate_synthetic(spec: &SyntheticSpec) -> (Dataset, Vec<f64>) {
    let mut rng = derive_rng(spec.seed, &[]);
    let theta_star = sample_unit_sphere(spec.d, &mut rng);
    let data = synthetic_dataset(&theta_star, spec.n, spec.sigma, &mut rng);
    (data, theta_star)
}

/// Draw a train/test pair sharing one generating parameter.
pub fn generate_synthetic_split(
    d: usize,
    n_train: usize,
    n_test: usize,
    sigma: f64,
    seed: RngSeed,
) -> Result<LabeledSplit> {
    SyntheticSpec::new(d, n_train, sigma, seed)?;
    if n_test == 0 {
        return Err(Error::InvalidConfig("need n_test >= 1".into()));
    }
    let mut rng = derive_rng(seed, &[]);
    let theta_star = sample_unit_sphere(d, &mut rng);
    let train = synthetic_dataset(&theta_star, n_train, sigma, &mut rng);
    let test = synthetic_dataset(&theta_star, n_test, sigma, &mut rng);
    Ok(LabeledSplit {
        train,
        test,
        theta_star: Some(theta_star),
    })
}

/// Assign per-point budgets for a population of size `n`.
///
/// The first `floor(f_c * n)` slots are conservative, the next
/// `floor(f_m * n)` medium, the remainder liberal; the assignment is then
/// shuffled against the data indices.
pub fn assign_privacy_profile(n: usize, spec: &PrivacySegmentSpec) -> Result<PrivacyProfile> {
    if n == 0 {
        return Err(Error::InvalidConfig("need n >= 1".into()));
    }
    let mut rng = derive_rng(spec.seed, &[]);
    let n_c = (spec.f_c * n as f64).floor() as usize;
    let n_m = (spec.f_m * n as f64).floor() as usize;
    let mut epsilons = Vec::with_capacity(n);
    for _ in 0..n_c {
        epsilons.push(spec.eps_c + (spec.eps_m - spec.eps_c) * rng.random::<f64>());
    }
    for _ in 0..n_m {
        epsilons.push(spec.eps_m + (spec.eps_l - spec.eps_m) * rng.random::<f64>());
    }
    epsilons.resize(n, spec.eps_l);
    epsilons.shuffle(&mut rng);
    PrivacyProfile::new(epsilons)
}

/// Deterministic uniform partition of `0..n` into (train, test) index
/// sets, each sorted ascending.
pub(crate) fn split_indices<R: Rng + ?Sized>(
    n: usize,
    test_fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must lie in (0,1), got {test_fraction}"
        )));
    }
    let n_test = (n as f64 * test_fraction).floor() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::EmptySplit(format!(
            "test_fraction {test_fraction} on {n} rows leaves an empty side"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(rng);
    let mut test: Vec<usize> = indices[..n_test].to_vec();
    let mut train: Vec<usize> = indices[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Uniform random train/test split of an existing dataset.
pub fn train_test_split(data: &Dataset, test_fraction: f64, seed: RngSeed) -> Result<LabeledSplit> {
    let mut rng = derive_rng(seed, &[]);
    let (train_idx, test_idx) = split_indices(data.len(), test_fraction, &mut rng)?;
    Ok(LabeledSplit {
        train: data.select(&train_idx)?,
        test: data.select(&test_idx)?,
        theta_star: None,
    })
}

const MEDICAL_NUMERIC: [&str; 3] = ["age", "bmi", "children"];
const MEDICAL_CATEGORICAL: [&str; 3] = ["sex", "smoker", "region"];
const MEDICAL_LABEL: &str = "charges";

/// Which rows supply the min-max statistics for numeric scaling.
///
/// `TrainOnly` avoids leaking test statistics into preprocessing and
/// clamps test rows that fall outside the train range; `Global` scales
/// with the whole file's extremes, under which nothing clamps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingPolicy {
    #[default]
    TrainOnly,
    Global,
}

/// Parsed but unprocessed medical-cost rows.
#[derive(Debug, Clone)]
pub struct MedicalRaw {
    numeric: [Vec<f64>; 3],
    categorical: [Vec<String>; 3],
    charges: Vec<f64>,
}

impl MedicalRaw {
    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }
}

/// Read and type-check the medical-cost CSV.
pub fn parse_medical_csv(path: &Path) -> Result<MedicalRaw> {
    let file = std::fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path.to_path_buf())
        } else {
            Error::Io(e)
        }
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::MalformedCsv(format!("cannot read header: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MalformedCsv(format!("missing column `{name}`")))
    };
    let numeric_cols = [col("age")?, col("bmi")?, col("children")?];
    let categorical_cols = [col("sex")?, col("smoker")?, col("region")?];
    let label_col = col(MEDICAL_LABEL)?;

    let mut raw = MedicalRaw {
        numeric: [Vec::new(), Vec::new(), Vec::new()],
        categorical: [Vec::new(), Vec::new(), Vec::new()],
        charges: Vec::new(),
    };
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = record.map_err(|e| Error::MalformedCsv(format!("row {row}: {e}")))?;
        let parse = |c: usize, name: &str| -> Result<f64> {
            let field = record.get(c).ok_or_else(|| {
                Error::MalformedCsv(format!("row {row}: missing field `{name}`"))
            })?;
            field.parse::<f64>().map_err(|_| {
                Error::MalformedCsv(format!(
                    "row {row}, column {name}: cannot parse `{field}` as a number"
                ))
            })
        };
        for (k, &c) in numeric_cols.iter().enumerate() {
            raw.numeric[k].push(parse(c, MEDICAL_NUMERIC[k])?);
        }
        for (k, &c) in categorical_cols.iter().enumerate() {
            let field = record.get(c).ok_or_else(|| {
                Error::MalformedCsv(format!("row {row}: missing field `{}`", MEDICAL_CATEGORICAL[k]))
            })?;
            raw.categorical[k].push(field.to_string());
        }
        raw.charges.push(parse(label_col, MEDICAL_LABEL)?);
    }
    if raw.is_empty() {
        return Err(Error::MalformedCsv("file contains no data rows".into()));
    }
    Ok(raw)
}

/// Preprocess parsed medical-cost rows into a model-ready split.
///
/// Numeric columns and the label are min-max scaled to `[0,1]`; the rows
/// supplying the statistics are chosen by `scaling`, and test values
/// falling outside the statistics' range are clamped. Every category of
/// each categorical column becomes its own one-hot feature (categories
/// taken from the full file, sorted), and a constant-one intercept
/// feature is appended last.
pub fn preprocess_medical(
    raw: &MedicalRaw,
    test_fraction: f64,
    seed: RngSeed,
    scaling: ScalingPolicy,
) -> Result<LabeledSplit> {
    let n = raw.len();
    let mut rng = derive_rng(seed, &[]);
    let (train_idx, test_idx) = split_indices(n, test_fraction, &mut rng)?;
    let all_idx: Vec<usize> = (0..n).collect();
    let stat_rows: &[usize] = match scaling {
        ScalingPolicy::TrainOnly => &train_idx,
        ScalingPolicy::Global => &all_idx,
    };

    let min_max = |values: &[f64], name: &str| -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in stat_rows {
            lo = lo.min(values[i]);
            hi = hi.max(values[i]);
        }
        if lo == hi {
            return Err(Error::DegenerateColumn(format!(
                "column {name} is constant on the scaling rows (min == max == {lo})"
            )));
        }
        Ok((lo, hi))
    };

    let mut numeric_stats = Vec::with_capacity(3);
    for (k, name) in MEDICAL_NUMERIC.iter().enumerate() {
        numeric_stats.push(min_max(&raw.numeric[k], name)?);
    }
    let label_stats = min_max(&raw.charges, MEDICAL_LABEL)?;

    // Category vocabulary from the full file, sorted for determinism.
    let categories: Vec<Vec<String>> = raw
        .categorical
        .iter()
        .map(|col| {
            col.iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();

    let d = 3 + categories.iter().map(|c| c.len()).sum::<usize>() + 1;
    let build = |indices: &[usize], clamp: bool| -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            for (k, &(lo, hi)) in numeric_stats.iter().enumerate() {
                let mut v = (raw.numeric[k][i] - lo) / (hi - lo);
                if clamp {
                    v = v.clamp(0.0, 1.0);
                }
                features.push(v);
            }
            for (k, cats) in categories.iter().enumerate() {
                for cat in cats {
                    features.push(if &raw.categorical[k][i] == cat { 1.0 } else { 0.0 });
                }
            }
            features.push(1.0);
            let mut y = (raw.charges[i] - label_stats.0) / (label_stats.1 - label_stats.0);
            if clamp {
                y = y.clamp(0.0, 1.0);
            }
            labels.push(y);
        }
        Dataset::from_flat(indices.len(), d, features, labels)
    };

    Ok(LabeledSplit {
        train: build(&train_idx, false)?,
        test: build(&test_idx, true)?,
        theta_star: None,
    })
}

/// Load, scale and encode the medical-cost CSV with train-only scaling
/// statistics.
pub fn load_medical_cost(path: &Path, test_fraction: f64, seed: RngSeed) -> Result<LabeledSplit> {
    let raw = parse_medical_csv(path)?;
    preprocess_medical(&raw, test_fraction, seed, ScalingPolicy::TrainOnly)
}

/// Write a dataset in the canonical CSV layout `f0..f{d-1},y`.
pub fn write_dataset_csv(data: &Dataset, out: &mut impl Write) -> Result<()> {
    let header: Vec<String> = (0..data.dim())
        .map(|j| format!("f{j}"))
        .chain(std::iter::once("y".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.len() {
        let mut fields: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        fields.push(data.label(i).to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Read a dataset from the canonical CSV layout.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path.to_path_buf())
        } else {
            Error::Io(e)
        }
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::MalformedCsv(format!("cannot read header: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.len() < 2 || headers.last().map(String::as_str) != Some("y") {
        return Err(Error::MalformedCsv(
            "expected feature columns f0..f{d-1} followed by a label column y".into(),
        ));
    }
    let d = headers.len() - 1;
    for (j, h) in headers[..d].iter().enumerate() {
        if h != &format!("f{j}") {
            return Err(Error::MalformedCsv(format!(
                "column {j} is named `{h}`, expected `f{j}`"
            )));
        }
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = record.map_err(|e| Error::MalformedCsv(format!("row {row}: {e}")))?;
        if record.len() != d + 1 {
            return Err(Error::MalformedCsv(format!(
                "row {row}: has {} fields, expected {}",
                record.len(),
                d + 1
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let value = field.parse::<f64>().map_err(|_| {
                Error::MalformedCsv(format!(
                    "row {row}, column {}: cannot parse `{field}` as a number",
                    headers[j]
                ))
            })?;
            if j < d {
                features.push(value);
            } else {
                labels.push(value);
            }
        }
        n += 1;
    }
    Dataset::from_flat(n, d, features, labels)
}

/// Write a privacy profile as a single-column CSV.
pub fn write_profile_csv(profile: &PrivacyProfile, out: &mut impl Write) -> Result<()> {
    writeln!(out, "epsilon")?;
    for e in profile.as_slice() {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

/// Read a privacy profile from a single-column CSV.
pub fn read_profile_csv(path: &Path) -> Result<PrivacyProfile> {
    let file = std::fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path.to_path_buf())
        } else {
            Error::Io(e)
        }
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedCsv(format!("cannot read header: {e}")))?;
    if headers.len() != 1 || headers.get(0) != Some("epsilon") {
        return Err(Error::MalformedCsv(
            "expected a single column named `epsilon`".into(),
        ));
    }
    let mut epsilons = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = record.map_err(|e| Error::MalformedCsv(format!("row {row}: {e}")))?;
        let field = record.get(0).unwrap_or("");
        let value = field.parse::<f64>().map_err(|_| {
            Error::MalformedCsv(format!(
                "row {row}, column epsilon: cannot parse `{field}` as a number"
            ))
        })?;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidBudget(format!(
                "row {row}: epsilon {value} must be finite and > 0"
            )));
        }
        epsilons.push(value);
    }
    PrivacyProfile::new(epsilons)
}
