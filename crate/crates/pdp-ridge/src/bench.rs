//! Experiment harness: sweep one parameter, run many seeded trials of
//! each method, aggregate both test metrics, emit tables.
//!
//! Every trial derives its own RNG from
//! `(master_seed, sweep index, method id, trial index)` via
//! [`crate::noise::derive_seed`], so reports are bit-reproducible and do
//! not depend on thread scheduling: trials run in parallel but are
//! reduced in trial order. Method ids are fixed (`pdp-op` = 0,
//! `non-personalized` = 1, `jorgensen-max` = 2, `jorgensen-mean` = 3), so
//! a method's column does not change when the plan lists different
//! method subsets.
//!
//! By default the dataset is drawn once and held fixed while the noise
//! and the privacy profile are resampled per trial, which isolates the
//! mechanisms' own variance; `resample_data = true` redraws the dataset
//! per trial as well.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::baselines::{fit_jorgensen, fit_non_personalized, JorgensenConfig, ThresholdRule};
use crate::data::{
    assign_privacy_profile, generate_synthetic_split, parse_medical_csv, preprocess_medical,
    LabeledSplit, MedicalRaw, PrivacySegmentSpec, ScalingPolicy,
};
use crate::error::{Error, Result};
use crate::noise::derive_seed;
use crate::pdpop::fit;
use crate::ridge::{Dataset, RidgeConfig};

// Seed-derivation domains.
const DATA_DOMAIN: u64 = 0;
const TRIAL_DOMAIN: u64 = 1;
const PROFILE_DOMAIN: u64 = 2;
const FIT_DOMAIN: u64 = 3;

/// Mean squared prediction error on a held-out set.
pub fn unregularized_test_loss(theta: &[f64], test: &Dataset) -> Result<f64> {
    if theta.len() != test.dim() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} coefficients but test data has d={}",
            theta.len(),
            test.dim()
        )));
    }
    let mut total = 0.0;
    for i in 0..test.len() {
        let pred: f64 = test.row(i).iter().zip(theta).map(|(x, t)| x * t).sum();
        let r = test.label(i) - pred;
        total += r * r;
    }
    Ok(total / test.len() as f64)
}

/// Mean squared prediction error plus the training penalty `lambda ||theta||^2`.
pub fn regularized_test_loss(theta: &[f64], test: &Dataset, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let penalty = lambda * theta.iter().map(|t| t * t).sum::<f64>();
    Ok(unregularized_test_loss(theta, test)? + penalty)
}

/// The fitting methods the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PdpOp,
    NonPersonalized,
    JorgensenMax,
    JorgensenMean,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::PdpOp,
        Method::NonPersonalized,
        Method::JorgensenMax,
        Method::JorgensenMean,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::PdpOp => "pdp-op",
            Method::NonPersonalized => "non-personalized",
            Method::JorgensenMax => "jorgensen-max",
            Method::JorgensenMean => "jorgensen-mean",
        }
    }

    fn id(&self) -> u64 {
        match self {
            Method::PdpOp => 0,
            Method::NonPersonalized => 1,
            Method::JorgensenMax => 2,
            Method::JorgensenMean => 3,
        }
    }
}

/// Which plan parameter the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Lambda,
    EpsC,
    EpsM,
    FC,
    TrainFraction,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::EpsC => "eps_c",
            SweepParameter::EpsM => "eps_m",
            SweepParameter::FC => "f_c",
            SweepParameter::TrainFraction => "train_fraction",
        }
    }
}

fn default_test_size() -> usize {
    1000
}

fn default_test_fraction() -> f64 {
    0.2
}

/// Where the experiment's data comes from.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic {
        d: usize,
        n: usize,
        #[serde(default)]
        sigma: f64,
        #[serde(default = "default_test_size")]
        test_size: usize,
    },
    MedicalCost {
        path: PathBuf,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        #[serde(default)]
        scaling: ScalingPolicy,
    },
}

/// Privacy-population parameters (seedless; seeds are derived per trial).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyParams {
    pub f_c: f64,
    pub f_m: f64,
    pub eps_c: f64,
    pub eps_m: f64,
    pub eps_l: f64,
}

impl PrivacyParams {
    fn spec(&self, seed: u64) -> Result<PrivacySegmentSpec> {
        PrivacySegmentSpec::new(self.f_c, self.f_m, self.eps_c, self.eps_m, self.eps_l, seed)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeParams {
    pub lambda: f64,
    #[serde(default)]
    pub theta_bound: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// A full experiment description; deserializable from a TOML plan file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub resample_data: bool,
    pub dataset: DatasetSource,
    pub privacy: PrivacyParams,
    pub ridge: RidgeParams,
    pub sweep: Sweep,
}

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: ExperimentPlan =
            toml::from_str(text).map_err(|e| Error::PlanInvalid(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::FileNotFound(path.to_path_buf())
            } else {
                Error::Io(e)
            }
        })?;
        Self::from_toml_str(&text)
    }

    /// Check everything that can be checked without running: counts,
    /// ranges, and that every sweep value yields a valid configuration.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::PlanInvalid(msg));
        if self.trials == 0 {
            return invalid("trials must be >= 1".into());
        }
        if self.methods.is_empty() {
            return invalid("methods must list at least one method".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return invalid(format!("method `{}` is listed twice", m.label()));
            }
        }
        match &self.dataset {
            DatasetSource::Synthetic { d, n, sigma, test_size } => {
                if *d == 0 || *n == 0 || *test_size == 0 {
                    return invalid("synthetic d, n and test_size must be >= 1".into());
                }
                if !sigma.is_finite() || *sigma < 0.0 {
                    return invalid(format!("sigma must be finite and >= 0, got {sigma}"));
                }
            }
            DatasetSource::MedicalCost { test_fraction, .. } => {
                if !(*test_fraction > 0.0 && *test_fraction < 1.0) {
                    return invalid(format!(
                        "test_fraction must lie in (0,1), got {test_fraction}"
                    ));
                }
            }
        }
        if self.sweep.values.is_empty() {
            log::warn!("sweep has no values; the report will be header-only");
        }
        for (i, &value) in self.sweep.values.iter().enumerate() {
            self.resolve(value)
                .map_err(|e| Error::PlanInvalid(format!("sweep value #{i} ({value}): {e}")))?;
        }
        // The fixed settings must themselves be valid when the sweep
        // replaces a different parameter.
        self.resolve_with(self.ridge.lambda, self.privacy, 1.0)
            .map_err(|e| Error::PlanInvalid(format!("fixed parameters: {e}")))?;
        Ok(())
    }

    fn resolve(&self, sweep_value: f64) -> Result<(RidgeConfig, PrivacySegmentSpec, f64)> {
        let mut lambda = self.ridge.lambda;
        let mut privacy = self.privacy;
        let mut train_fraction = 1.0;
        match self.sweep.parameter {
            SweepParameter::Lambda => lambda = sweep_value,
            SweepParameter::EpsC => privacy.eps_c = sweep_value,
            SweepParameter::EpsM => privacy.eps_m = sweep_value,
            SweepParameter::FC => privacy.f_c = sweep_value,
            SweepParameter::TrainFraction => train_fraction = sweep_value,
        }
        self.resolve_with(lambda, privacy, train_fraction)
    }

    fn resolve_with(
        &self,
        lambda: f64,
        privacy: PrivacyParams,
        train_fraction: f64,
    ) -> Result<(RidgeConfig, PrivacySegmentSpec, f64)> {
        if !(train_fraction > 0.0 && train_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train_fraction must lie in (0,1], got {train_fraction}"
            )));
        }
        let dimension = match &self.dataset {
            DatasetSource::Synthetic { d, .. } => *d,
            // 3 numeric + one-hot groups + intercept; the exact value is
            // recomputed from the file, this is only for validation.
            DatasetSource::MedicalCost { .. } => 12,
        };
        let cfg = RidgeConfig::new(lambda, dimension, self.ridge.theta_bound)?;
        let spec = privacy.spec(0)?;
        Ok((cfg, spec, train_fraction))
    }
}

/// Mean and sample standard deviation of one metric over kept trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

fn moments(values: &[f64]) -> Moments {
    if values.is_empty() {
        return Moments {
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Moments { mean, std }
}

/// Aggregated results for one (sweep value, method) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodCell {
    pub unregularized: Moments,
    pub regularized: Moments,
    pub trials_used: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub sweep_value: f64,
    /// One cell per plan method, in plan order.
    pub cells: Vec<MethodCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub sweep_parameter: SweepParameter,
    pub methods: Vec<Method>,
    pub rows: Vec<ReportRow>,
}

fn build_data(
    plan: &ExperimentPlan,
    raw_medical: Option<&MedicalRaw>,
    seed: u64,
) -> Result<LabeledSplit> {
    match &plan.dataset {
        DatasetSource::Synthetic { d, n, sigma, test_size } => {
            generate_synthetic_split(*d, *n, *test_size, *sigma, seed)
        }
        DatasetSource::MedicalCost { test_fraction, scaling, .. } => {
            let raw = raw_medical.expect("medical raw table loaded up front");
            preprocess_medical(raw, *test_fraction, seed, *scaling)
        }
    }
}

// Everything shared by the trials of one (sweep value, method) cell.
struct CellContext<'a> {
    plan: &'a ExperimentPlan,
    base: &'a LabeledSplit,
    raw_medical: Option<&'a MedicalRaw>,
    cfg: &'a RidgeConfig,
    privacy: &'a PrivacySegmentSpec,
    train_fraction: f64,
    sweep_index: u64,
}

fn run_trial(ctx: &CellContext<'_>, method: Method, trial: u64) -> Result<Option<(f64, f64)>> {
    let plan = ctx.plan;
    let resampled;
    let split = if plan.resample_data {
        let seed = derive_seed(plan.master_seed, &[DATA_DOMAIN, ctx.sweep_index, trial]);
        resampled = build_data(plan, ctx.raw_medical, seed)?;
        &resampled
    } else {
        ctx.base
    };
    let n_used = ((split.train.len() as f64 * ctx.train_fraction).floor() as usize).max(1);
    let train = if n_used == split.train.len() {
        split.train.clone()
    } else {
        split.train.head(n_used)?
    };

    let trial_word = derive_seed(
        plan.master_seed,
        &[TRIAL_DOMAIN, ctx.sweep_index, method.id(), trial],
    );
    let spec = PrivacySegmentSpec {
        seed: derive_seed(trial_word, &[PROFILE_DOMAIN]),
        ..*ctx.privacy
    };
    let profile = assign_privacy_profile(n_used, &spec)?;
    let cfg = RidgeConfig::new(ctx.cfg.lambda, train.dim(), ctx.cfg.theta_bound)?;
    let mut rng = crate::noise::derive_rng(trial_word, &[FIT_DOMAIN]);

    let model = match method {
        Method::PdpOp => fit(&train, &profile, &cfg, &mut rng),
        Method::NonPersonalized => fit_non_personalized(&train, &profile, &cfg, &mut rng),
        Method::JorgensenMax => fit_jorgensen(
            &train,
            &profile,
            &cfg,
            &JorgensenConfig::new(ThresholdRule::MaxEpsilon)?,
            &mut rng,
        ),
        Method::JorgensenMean => fit_jorgensen(
            &train,
            &profile,
            &cfg,
            &JorgensenConfig::new(ThresholdRule::MeanEpsilon)?,
            &mut rng,
        ),
    };
    let model = match model {
        Ok(m) => m,
        Err(Error::EmptySubsample) => {
            log::warn!(
                "{}: empty subsample at {}={}, trial {trial}; discarding the trial",
                method.label(),
                plan.sweep.parameter.name(),
                ctx.sweep_index
            );
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let unreg = unregularized_test_loss(&model.theta, &split.test)?;
    let reg = regularized_test_loss(&model.theta, &split.test, cfg.lambda)?;
    Ok(Some((unreg, reg)))
}

/// Run the plan: every sweep value, every method, `trials` trials each.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let raw_medical = match &plan.dataset {
        DatasetSource::MedicalCost { path, .. } => Some(parse_medical_csv(path)?),
        DatasetSource::Synthetic { .. } => None,
    };
    let base = build_data(
        plan,
        raw_medical.as_ref(),
        derive_seed(plan.master_seed, &[DATA_DOMAIN]),
    )?;

    let mut rows = Vec::with_capacity(plan.sweep.values.len());
    for (si, &sweep_value) in plan.sweep.values.iter().enumerate() {
        let (cfg, privacy, train_fraction) = plan.resolve(sweep_value)?;
        let mut cells = Vec::with_capacity(plan.methods.len());
        for &method in &plan.methods {
            log::info!(
                "running {}={} method={} ({} trials)",
                plan.sweep.parameter.name(),
                sweep_value,
                method.label(),
                plan.trials
            );
            let ctx = CellContext {
                plan,
                base: &base,
                raw_medical: raw_medical.as_ref(),
                cfg: &cfg,
                privacy: &privacy,
                train_fraction,
                sweep_index: si as u64,
            };
            // Parallel trials, reduced in trial order.
            let outcomes: Vec<Option<(f64, f64)>> = (0..plan.trials as u64)
                .into_par_iter()
                .map(|t| run_trial(&ctx, method, t))
                .collect::<Result<Vec<_>>>()?;
            let mut unreg = Vec::with_capacity(plan.trials);
            let mut reg = Vec::with_capacity(plan.trials);
            let mut discarded = 0usize;
            for outcome in outcomes {
                match outcome {
                    Some((u, r)) => {
                        unreg.push(u);
                        reg.push(r);
                    }
                    None => discarded += 1,
                }
            }
            cells.push(MethodCell {
                unregularized: moments(&unreg),
                regularized: moments(&reg),
                trials_used: unreg.len(),
                discarded,
            });
        }
        rows.push(ReportRow { sweep_value, cells });
    }
    Ok(ExperimentReport {
        sweep_parameter: plan.sweep.parameter,
        methods: plan.methods.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

const METRICS: [&str; 2] = ["unregularized", "regularized"];

/// Render a report as CSV (12 significant digits) or a markdown table.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Markdown => emit_markdown(report),
    }
}

fn emit_csv(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let mut header = vec![report.sweep_parameter.name().to_string()];
    for metric in METRICS {
        for method in &report.methods {
            header.push(format!("{metric}.{}.mean", method.label()));
            header.push(format!("{metric}.{}.std", method.label()));
        }
    }
    for method in &report.methods {
        header.push(format!("{}.trials", method.label()));
        header.push(format!("{}.discarded", method.label()));
    }
    let _ = writeln!(out, "{}", header.join(","));

    for row in &report.rows {
        let mut fields = vec![format!("{}", row.sweep_value)];
        for metric in 0..2 {
            for cell in &row.cells {
                let m = if metric == 0 { cell.unregularized } else { cell.regularized };
                fields.push(format!("{:.11e}", m.mean));
                fields.push(format!("{:.11e}", m.std));
            }
        }
        for cell in &row.cells {
            fields.push(cell.trials_used.to_string());
            fields.push(cell.discarded.to_string());
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

fn emit_markdown(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let mut header = vec![report.sweep_parameter.name().to_string()];
    for metric in METRICS {
        for method in &report.methods {
            header.push(format!("{metric} {} (mean)", method.label()));
            header.push(format!("{metric} {} (std)", method.label()));
        }
    }
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", vec![" --- "; header.len()].join("|"));
    for row in &report.rows {
        let mut fields = vec![format!("{}", row.sweep_value)];
        for metric in 0..2 {
            for cell in &row.cells {
                let m = if metric == 0 { cell.unregularized } else { cell.regularized };
                fields.push(format!("{:.4e}", m.mean));
                fields.push(format!("{:.4e}", m.std));
            }
        }
        let _ = writeln!(out, "| {} |", fields.join(" | "));
    }
    out
}
