//! End-to-end tests of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdp-ridge"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn write_plan(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const QUICK_PLAN: &str = r#"
trials = 2
master_seed = 5
methods = ["pdp-op", "non-personalized"]

[dataset]
kind = "synthetic"
d = 3
n = 30
test_size = 40

[privacy]
f_c = 0.34
f_m = 0.43
eps_c = 0.01
eps_m = 0.2
eps_l = 1.0

[ridge]
lambda = 10.0

[sweep]
parameter = "lambda"
values = [1.0, 10.0]
"#;

#[test]
fn synth_writes_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["synth", "--d", "30", "--n", "100", "--seed", "7", "--out", "data.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));

    let csv = read(dir.path(), "data.csv");
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("f0,f1,"));
    assert!(header.ends_with("f29,y"));
    assert_eq!(lines.count(), 100);

    let sidecar = read(dir.path(), "data.csv.theta_star");
    assert_eq!(sidecar.lines().count(), 30);
}

#[test]
fn synth_requires_its_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--n", "100", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn profile_generates_budgets_in_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["profile", "--n", "50", "--seed", "3", "--out", "profile.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = read(dir.path(), "profile.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon"));
    let values: Vec<f64> = lines.map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 50);
    assert!(values.iter().all(|&e| (0.01..=1.0).contains(&e)));
}

fn prepare_fit_inputs(dir: &Path) {
    for (cmd, ok_msg) in [
        (
            vec!["synth", "--d", "2", "--n", "20", "--seed", "1", "--out", "data.csv"],
            "synth",
        ),
        (
            vec!["profile", "--n", "20", "--seed", "2", "--out", "profile.csv"],
            "profile",
        ),
    ] {
        let out = run(&cmd, dir);
        assert!(out.status.success(), "{ok_msg}: {}", stderr_of(&out));
    }
}

#[test]
fn fit_writes_a_model_record_without_private_fields() {
    let dir = tempfile::tempdir().unwrap();
    prepare_fit_inputs(dir.path());
    let out = run(
        &[
            "fit", "--data", "data.csv", "--profile", "profile.csv", "--lambda", "1.0",
            "--method", "pdp-op", "--seed", "9", "--out", "model.txt",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let record = read(dir.path(), "model.txt");
    assert!(record.contains("method = pdp-op"));
    assert!(record.contains("regime = unassumed"));
    assert!(record.contains("eta = "));
    assert!(record.contains("epsilon_sum = "));
    assert_eq!(record.matches("theta_").count(), 2);
    assert!(!record.contains("non_private"));
    assert!(!record.contains("weight"));

    // A supplied norm bound switches the calibration regime.
    let out = run(
        &[
            "fit", "--data", "data.csv", "--profile", "profile.csv", "--lambda", "1.0",
            "--method", "pdp-op", "--theta-bound", "0.1", "--seed", "9", "--out", "bounded.txt",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let bounded = read(dir.path(), "bounded.txt");
    assert!(bounded.contains("regime = bounded-theta"));
    assert!(bounded.contains("norm_bound = 0.1"));
}

#[test]
fn fit_on_constant_profiles_matches_across_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["synth", "--d", "2", "--n", "15", "--seed", "4", "--out", "data.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    // Constant profile: every budget identical.
    std::fs::write(
        dir.path().join("profile.csv"),
        format!("epsilon\n{}", "0.25\n".repeat(15)),
    )
    .unwrap();

    for (method, file) in [("pdp-op", "a.txt"), ("non-personalized", "b.txt")] {
        let out = run(
            &[
                "fit", "--data", "data.csv", "--profile", "profile.csv", "--lambda", "2.0",
                "--method", method, "--seed", "11", "--out", file,
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    let a = read(dir.path(), "a.txt");
    let b = read(dir.path(), "b.txt");
    // Identical except for the method label line.
    let strip = |s: &str| -> Vec<String> {
        s.lines().filter(|l| !l.starts_with("method")).map(String::from).collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn fit_rejects_a_negative_budget_with_the_row_number() {
    let dir = tempfile::tempdir().unwrap();
    prepare_fit_inputs(dir.path());
    std::fs::write(
        dir.path().join("bad_profile.csv"),
        "epsilon\n0.5\n0.5\n-1.0\n0.5\n",
    )
    .unwrap();
    let out = run(
        &[
            "fit", "--data", "data.csv", "--profile", "bad_profile.csv", "--lambda", "1.0",
            "--method", "pdp-op", "--seed", "9", "--out", "model.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("row 3"), "stderr: {err}");
}

#[test]
fn fit_rejects_unknown_methods() {
    let dir = tempfile::tempdir().unwrap();
    prepare_fit_inputs(dir.path());
    let out = run(
        &[
            "fit", "--data", "data.csv", "--profile", "profile.csv", "--lambda", "1.0",
            "--method", "laplace", "--seed", "9", "--out", "model.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("jorgensen-max"));
}

#[test]
fn bound_prints_the_term_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "bound", "--theta-star-norm", "1.0", "--lambda", "1.0", "--eta", "1.0",
            "--d", "1", "--delta", "0.5",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("label-noise term:   0.00000e0"), "{text}");
    assert!(text.contains("total bound:        4.00000e0"), "{text}");
}

#[test]
fn bound_rejects_out_of_range_delta() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "bound", "--theta-star-norm", "1.0", "--lambda", "1.0", "--eta", "1.0",
            "--d", "1", "--delta", "1.5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_runs_a_plan_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_plan(dir.path(), "plan.toml", QUICK_PLAN);
    let out = run(
        &["experiment", "--plan", "plan.toml", "--out", "report.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = read(dir.path(), "report.csv");
    assert_eq!(report.lines().count(), 3); // header + two sweep values
    assert!(report.starts_with("lambda,unregularized.pdp-op.mean,"));
}

#[test]
fn experiment_shipped_plan_reproduces_the_sweep_shape() {
    // The repository plan runs the full fifteen-value sweep; trials are
    // overridden to keep the test quick.
    let dir = tempfile::tempdir().unwrap();
    let plan = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans/synthetic-lambda-sweep.toml");
    let out = run(
        &[
            "experiment", "--plan", plan.to_str().unwrap(), "--trials", "1",
            "--out", "report.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = read(dir.path(), "report.csv");
    assert_eq!(report.lines().count(), 1 + 15);
    let header = report.lines().next().unwrap();
    for method in ["pdp-op", "non-personalized", "jorgensen-max", "jorgensen-mean"] {
        assert!(header.contains(&format!("unregularized.{method}.mean")));
        assert!(header.contains(&format!("regularized.{method}.std")));
    }
}

#[test]
fn experiment_rejects_unknown_methods_with_the_valid_list() {
    let dir = tempfile::tempdir().unwrap();
    let bad = QUICK_PLAN.replace("\"non-personalized\"", "\"laplace\"");
    write_plan(dir.path(), "plan.toml", &bad);
    let out = run(&["experiment", "--plan", "plan.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    let err = stderr_of(&out);
    for method in ["pdp-op", "non-personalized", "jorgensen-max", "jorgensen-mean"] {
        assert!(err.contains(method), "stderr missing {method}: {err}");
    }
}

#[test]
fn experiment_markdown_format() {
    let dir = tempfile::tempdir().unwrap();
    write_plan(dir.path(), "plan.toml", QUICK_PLAN);
    let out = run(
        &["experiment", "--plan", "plan.toml", "--format", "markdown"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("| lambda |"));
    assert_eq!(header.matches("(mean)").count(), 4); // 2 methods x 2 metrics
}
