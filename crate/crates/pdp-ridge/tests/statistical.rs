//! Seeded statistical checks against independent oracles.
//!
//! The acceptance suite in the CLI crate runs these properties at full
//! scale; the versions here use smaller sample counts so that the
//! library's own test run stays fast.

use pdp_ridge::baselines::{jorgensen_subsample, jorgensen_threshold, JorgensenConfig, ThresholdRule};
use pdp_ridge::bounds::{accuracy_bound, min_gram_eigenvalue, AccuracyBoundInput};
use pdp_ridge::data::{assign_privacy_profile, generate_synthetic_split, PrivacySegmentSpec};
use pdp_ridge::noise::{derive_rng, sample_radius, NoiseParams};
use pdp_ridge::pdpop::{calibrate, fit, ridge_norm_bound, sensitivity_bound, PrivacyProfile};
use pdp_ridge::ridge::{solve_weighted_ridge, Dataset, RidgeConfig};
use rand::Rng;

/// Textbook Gamma(shape, rate) sampler for integer shape: a sum of
/// independent exponentials. Deliberately distinct from the production
/// sampler's rejection scheme.
fn gamma_oracle<R: Rng>(shape: usize, rate: f64, rng: &mut R) -> f64 {
    let mut sum = 0.0;
    for _ in 0..shape {
        let u: f64 = 1.0 - rng.random::<f64>();
        sum -= u.ln() / rate;
    }
    sum
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    d
}

/// Critical value for the two-sample KS test at the given significance.
fn ks_threshold(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[test]
fn radius_law_passes_a_ks_test_against_the_oracle() {
    let samples = 20_000;
    let threshold = ks_threshold(0.001, samples, samples);
    for (seed, (d, eta)) in [(1u64, (1usize, 1.0f64)), (2, (5, 2.0)), (3, (30, 0.5))] {
        let params = NoiseParams::new(eta, d).unwrap();
        let mut rng = derive_rng(0xCAFE, &[seed]);
        let ours: Vec<f64> = (0..samples).map(|_| sample_radius(&params, &mut rng)).collect();
        let mut oracle_rng = derive_rng(0xBEEF, &[seed]);
        let oracle: Vec<f64> = (0..samples)
            .map(|_| gamma_oracle(d, eta, &mut oracle_rng))
            .collect();
        let stat = ks_statistic(ours, oracle);
        assert!(
            stat < threshold,
            "d={d}, eta={eta}: KS statistic {stat} over threshold {threshold}"
        );
    }
}

fn random_dataset<R: Rng>(n: usize, d: usize, rng: &mut R) -> Dataset {
    let features: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let labels: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    Dataset::from_flat(n, d, features, labels).unwrap()
}

#[test]
fn replacing_one_point_respects_the_sensitivity_bound() {
    let mut rng = derive_rng(0x5E15, &[]);
    for (d, n, lambda) in [(1usize, 10usize, 1.0f64), (5, 50, 10.0), (30, 100, 100.0)] {
        let bound_b = ridge_norm_bound(lambda, d);
        let cfg = RidgeConfig::new(lambda, d, None).unwrap();
        for _ in 0..200 {
            let data = random_dataset(n, d, &mut rng);
            let eps: Vec<f64> = (0..n).map(|_| 0.01 + rng.random::<f64>()).collect();
            let profile = PrivacyProfile::new(eps).unwrap();
            let cal = calibrate(&profile, lambda, d, None).unwrap();

            let i = (rng.random::<f64>() * n as f64) as usize % n;
            let x_new: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let y_new = rng.random::<f64>() * 2.0 - 1.0;
            let neighbor = data.with_point_replaced(i, &x_new, y_new).unwrap();

            let theta = solve_weighted_ridge(&data, &cal.weights, &cfg).unwrap();
            let theta_prime = solve_weighted_ridge(&neighbor, &cal.weights, &cfg).unwrap();
            let moved: f64 = theta
                .iter()
                .zip(&theta_prime)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let allowed = sensitivity_bound(cal.weights.get(i), lambda, d, bound_b);
            assert!(
                moved <= allowed + 1e-9,
                "d={d}, n={n}, lambda={lambda}: moved {moved} over bound {allowed}"
            );
        }
    }
}

#[test]
fn accuracy_bound_covers_the_observed_error() {
    // Noiseless synthetic labels follow x . (theta*/sqrt(d)), so the
    // data-generating parameter for the bound is theta*/sqrt(d).
    let (d, n, lambda, delta) = (5usize, 100usize, 1.0f64, 0.1f64);
    let split = generate_synthetic_split(d, n, 1, 0.0, 0x0D).unwrap();
    let theta_star: Vec<f64> = split
        .theta_star
        .as_ref()
        .unwrap()
        .iter()
        .map(|t| t / (d as f64).sqrt())
        .collect();
    let spec = PrivacySegmentSpec::default_with_seed(0x0E);
    let profile = assign_privacy_profile(n, &spec).unwrap();
    let cal = calibrate(&profile, lambda, d, None).unwrap();
    let bound = accuracy_bound(&AccuracyBoundInput {
        theta_star_norm: theta_star.iter().map(|t| t * t).sum::<f64>().sqrt(),
        lambda_min_gram: min_gram_eigenvalue(&split.train, &cal.weights).unwrap(),
        lambda,
        eta: cal.eta,
        dimension: d,
        delta,
        sigma: 0.0,
        weight_norm: cal.weights.norm(),
    })
    .unwrap();

    let cfg = RidgeConfig::new(lambda, d, None).unwrap();
    let mut rng = derive_rng(0x0F, &[]);
    let trials = 1500;
    let mut covered = 0usize;
    for _ in 0..trials {
        let model = fit(&split.train, &profile, &cfg, &mut rng).unwrap();
        let err: f64 = model
            .theta
            .iter()
            .zip(&theta_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if err <= bound {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;
    assert!(
        coverage >= 1.0 - delta - 0.02,
        "coverage {coverage} below {}",
        1.0 - delta - 0.02
    );
}

#[test]
fn every_method_improves_when_budgets_grow_tenfold() {
    use pdp_ridge::bench::{run_experiment, ExperimentPlan};

    let plan_text = |eps_c: f64, eps_m: f64, eps_l: f64| {
        format!(
            r#"
            trials = 1000
            master_seed = 31337
            methods = ["pdp-op", "non-personalized", "jorgensen-max", "jorgensen-mean"]

            [dataset]
            kind = "synthetic"
            d = 5
            n = 50
            test_size = 300

            [privacy]
            f_c = 0.34
            f_m = 0.43
            eps_c = {eps_c}
            eps_m = {eps_m}
            eps_l = {eps_l}

            [ridge]
            lambda = 5.0

            [sweep]
            parameter = "lambda"
            values = [5.0]
            "#
        )
    };
    let baseline = run_experiment(&ExperimentPlan::from_toml_str(&plan_text(0.01, 0.2, 1.0)).unwrap())
        .unwrap();
    let lenient = run_experiment(&ExperimentPlan::from_toml_str(&plan_text(0.1, 2.0, 10.0)).unwrap())
        .unwrap();
    for (k, method) in baseline.methods.iter().enumerate() {
        let tight = &baseline.rows[0].cells[k];
        let loose = &lenient.rows[0].cells[k];
        assert!(
            loose.unregularized.mean < tight.unregularized.mean,
            "{}: unregularized {} not below {}",
            method.label(),
            loose.unregularized.mean,
            tight.unregularized.mean
        );
        assert!(
            loose.regularized.mean < tight.regularized.mean,
            "{}: regularized {} not below {}",
            method.label(),
            loose.regularized.mean,
            tight.regularized.mean
        );
    }
}

#[test]
fn kept_fraction_matches_the_bernoulli_mixture() {
    // Expected kept fraction under the max-threshold rule at the default
    // three-segment population, from the closed-form mixture expectation:
    // E[(e^eps - 1)] / (e^t - 1) per uniform segment, 1 for liberals.
    let n = 100usize;
    let (n_c, n_m) = (34usize, 43usize);
    let n_l = n - n_c - n_m;
    let (eps_c, eps_m, eps_l) = (0.01f64, 0.2f64, 1.0f64);
    let t = eps_l;
    let denom = t.exp() - 1.0;
    let mean_exp = |lo: f64, hi: f64| (hi.exp() - lo.exp()) / (hi - lo);
    let p_conservative = (mean_exp(eps_c, eps_m) - 1.0) / denom;
    let p_medium = (mean_exp(eps_m, eps_l) - 1.0) / denom;
    let expected =
        (n_c as f64 * p_conservative + n_m as f64 * p_medium + n_l as f64) / n as f64;

    let cfg = JorgensenConfig::new(ThresholdRule::MaxEpsilon).unwrap();
    let trials = 100_000;
    let mut rng = derive_rng(0xA11CE, &[]);
    let mut kept_total = 0usize;
    for trial in 0..trials {
        let spec = PrivacySegmentSpec::new(0.34, 0.43, eps_c, eps_m, eps_l, trial as u64).unwrap();
        let profile = assign_privacy_profile(n, &spec).unwrap();
        let t_rule = jorgensen_threshold(&profile, &cfg);
        assert_eq!(t_rule, eps_l, "liberals pin the max threshold");
        kept_total += jorgensen_subsample(&profile, t_rule, &mut rng).kept_indices.len();
    }
    let rate = kept_total as f64 / (trials * n) as f64;
    assert!(
        (rate - expected).abs() < 0.005,
        "kept rate {rate} vs mixture expectation {expected}"
    );
}
