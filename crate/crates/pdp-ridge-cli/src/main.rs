//! Command-line frontend: data generation, profile generation, single
//! fits, accuracy-bound evaluation and full experiment runs.
//!
//! All randomness flows from the `--seed` flag; identical invocations
//! produce byte-identical outputs. Exit codes: 0 on success, 1 for
//! data/validation problems, 2 for usage or plan problems.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdp_ridge::baselines::{fit_jorgensen, fit_non_personalized, JorgensenConfig, ThresholdRule};
use pdp_ridge::bench::{emit_report, run_experiment, ExperimentPlan, ReportFormat};
use pdp_ridge::bounds::{accuracy_bound_terms, AccuracyBoundInput};
use pdp_ridge::data::{
    assign_privacy_profile, generate_synthetic, read_dataset_csv, read_profile_csv,
    write_dataset_csv, write_profile_csv, PrivacySegmentSpec, SyntheticSpec,
};
use pdp_ridge::noise::derive_rng;
use pdp_ridge::pdpop::fit;
use pdp_ridge::{Error, RidgeConfig};

#[derive(Parser)]
#[command(
    name = "pdp-ridge",
    about = "Ridge regression with per-point personalized differential privacy",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV plus a theta-star sidecar file.
    Synth(SynthArgs),
    /// Generate a per-point privacy-budget profile CSV.
    Profile(ProfileArgs),
    /// Fit one private model and write its record.
    Fit(FitArgs),
    /// Evaluate the accuracy bound and print its three terms.
    Bound(BoundArgs),
    /// Run an experiment plan and emit the report.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Feature dimension.
    #[arg(long)]
    d: usize,
    /// Number of data points.
    #[arg(long)]
    n: usize,
    /// Label-noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long)]
    seed: u64,
    /// Output CSV path; the generating parameter goes to `<out>.theta_star`.
    #[arg(long, default_value = "dataset.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    /// Number of data points the profile covers.
    #[arg(long)]
    n: usize,
    /// Fraction of conservative (most private) points.
    #[arg(long, default_value_t = 0.34)]
    f_c: f64,
    /// Fraction of medium points.
    #[arg(long, default_value_t = 0.43)]
    f_m: f64,
    #[arg(long, default_value_t = 0.01)]
    eps_c: f64,
    #[arg(long, default_value_t = 0.2)]
    eps_m: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_l: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset CSV in the canonical `f0..f{d-1},y` layout.
    #[arg(long)]
    data: PathBuf,
    /// Profile CSV (single `epsilon` column), row-aligned with the data.
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    lambda: f64,
    /// One of: pdp-op, non-personalized, jorgensen-max, jorgensen-mean.
    #[arg(long)]
    method: String,
    /// Known bound on the unregularized solution norm, when available.
    #[arg(long)]
    theta_bound: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "model.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    theta_star_norm: f64,
    /// Smallest eigenvalue of the weighted Gram matrix.
    #[arg(long, default_value_t = 0.0)]
    lambda_min_gram: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    d: usize,
    #[arg(long, value_parser = parse_delta)]
    delta: f64,
    /// Label-noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Euclidean norm of the weight vector.
    #[arg(long, default_value_t = 0.0)]
    weight_norm: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Plan file (TOML).
    #[arg(long)]
    plan: PathBuf,
    /// Override the plan's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the plan's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// csv or markdown.
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: ReportFormat,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_delta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("delta must lie in (0,1), got {v}"))
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s {
        "csv" => Ok(ReportFormat::Csv),
        "markdown" => Ok(ReportFormat::Markdown),
        other => Err(format!("unknown format `{other}`, expected csv or markdown")),
    }
}

// Domain word separating CLI fit randomness from library-internal streams.
const CLI_FIT_DOMAIN: u64 = 0x11;

fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let spec = SyntheticSpec::new(args.d, args.n, args.sigma, args.seed)?;
    let (data, theta_star) = generate_synthetic(&spec);
    let mut out = std::fs::File::create(&args.out)?;
    write_dataset_csv(&data, &mut out)?;
    let sidecar = sidecar_path(&args.out);
    let mut side = std::fs::File::create(&sidecar)?;
    for t in &theta_star {
        writeln!(side, "{t}")?;
    }
    log::info!(
        "wrote {} rows x {} features to {} (theta_star in {})",
        args.n,
        args.d,
        args.out.display(),
        sidecar.display()
    );
    Ok(())
}

fn sidecar_path(out: &std::path::Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".theta_star");
    PathBuf::from(name)
}

fn cmd_profile(args: &ProfileArgs) -> anyhow::Result<()> {
    let spec = PrivacySegmentSpec::new(
        args.f_c, args.f_m, args.eps_c, args.eps_m, args.eps_l, args.seed,
    )?;
    let profile = assign_privacy_profile(args.n, &spec)?;
    let mut out = std::fs::File::create(&args.out)?;
    write_profile_csv(&profile, &mut out)?;
    log::info!("wrote {} budgets to {}", args.n, args.out.display());
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> anyhow::Result<()> {
    let data = read_dataset_csv(&args.data)?;
    let profile = read_profile_csv(&args.profile)?;
    let cfg = RidgeConfig::new(args.lambda, data.dim(), args.theta_bound)?;
    let mut rng = derive_rng(args.seed, &[CLI_FIT_DOMAIN]);
    let model = match args.method.as_str() {
        "pdp-op" => fit(&data, &profile, &cfg, &mut rng)?,
        "non-personalized" => fit_non_personalized(&data, &profile, &cfg, &mut rng)?,
        "jorgensen-max" => fit_jorgensen(
            &data,
            &profile,
            &cfg,
            &JorgensenConfig::new(ThresholdRule::MaxEpsilon)?,
            &mut rng,
        )?,
        "jorgensen-mean" => fit_jorgensen(
            &data,
            &profile,
            &cfg,
            &JorgensenConfig::new(ThresholdRule::MeanEpsilon)?,
            &mut rng,
        )?,
        other => anyhow::bail!(
            "unknown method `{other}`; expected one of pdp-op, non-personalized, \
             jorgensen-max, jorgensen-mean"
        ),
    };
    let mut out = std::fs::File::create(&args.out)?;
    model.write_record(&args.method, &mut out)?;
    log::info!("wrote model record to {}", args.out.display());
    Ok(())
}

fn cmd_bound(args: &BoundArgs) -> anyhow::Result<()> {
    let input = AccuracyBoundInput {
        theta_star_norm: args.theta_star_norm,
        lambda_min_gram: args.lambda_min_gram,
        lambda: args.lambda,
        eta: args.eta,
        dimension: args.d,
        delta: args.delta,
        sigma: args.sigma,
        weight_norm: args.weight_norm,
    };
    let terms = accuracy_bound_terms(&input)?;
    println!("bias term:          {:.5e}", terms.bias);
    println!("release-noise term: {:.5e}", terms.release_noise);
    println!("label-noise term:   {:.5e}", terms.label_noise);
    println!("total bound:        {:.5e}", terms.total());
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> anyhow::Result<()> {
    let mut plan = ExperimentPlan::from_path(&args.plan)?;
    if let Some(trials) = args.trials {
        plan.trials = trials;
    }
    if let Some(seed) = args.seed {
        plan.master_seed = seed;
    }
    plan.validate()?;
    let report = run_experiment(&plan)?;
    let text = emit_report(&report, args.format);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            log::info!("wrote report to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::PlanInvalid(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Profile(args) => cmd_profile(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
