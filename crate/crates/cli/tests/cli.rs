use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn tdb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdb")).args(args).output().unwrap()
}

fn data_args() -> Vec<String> {
    vec![
        "--data".into(),
        fixture("people.csv").display().to_string(),
        "--schema".into(),
        fixture("schema.json").display().to_string(),
    ]
}

fn run(sub: &str, extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec![sub.into()];
    args.extend(data_args());
    args.extend(extra.iter().map(|s| s.to_string()));
    tdb(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let o = tdb(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(tdb(&["--help"]).status.code(), Some(0));
    assert_eq!(tdb(&["--version"]).status.code(), Some(0));
}

#[test]
fn ingest_check_matches_golden() {
    let o = run("ingest-check", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let golden = std::fs::read_to_string(fixture("ingest_golden.json")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn bad_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("schema.json");
    std::fs::write(&schema, r#"{"age": "feature", "nope": "sensitive", "income": "target"}"#).unwrap();
    let o = tdb(&[
        "ingest-check",
        "--data",
        fixture("people.csv").to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));

    let o = tdb(&["ingest-check", "--data", "/no/such.csv", "--schema", fixture("schema.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_predict_debias_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let preds = dir.path().join("preds.csv");
    let out = dir.path().join("debiased.csv");

    let o = run("fit", &["--kind", "linear", "--out", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(json["kind"], "linear");
    assert_eq!(json["coefficients"].as_array().unwrap().len(), 5);

    let o = run("predict", &["--model", model.to_str().unwrap(), "--out", preds.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&preds).unwrap();
    assert_eq!(text.lines().next(), Some("id,prediction"));
    assert_eq!(text.lines().count(), 61);

    let o = run("debias", &["--predictions", preds.to_str().unwrap(), "--k", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let debiased = std::fs::read_to_string(&out).unwrap();
    assert_eq!(debiased.lines().next(), Some("id,debiased_prediction"));
    assert_eq!(debiased.lines().count(), 61);

    // debiasing straight from the model gives the same table
    let o = run("debias", &["--model", model.to_str().unwrap(), "--k", "1"]);
    assert_eq!(stdout(&o), debiased);

    // k beyond the reference size clamps to the global mean
    let o = run("debias", &["--model", model.to_str().unwrap(), "--k", "500"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let values: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] == w[1]));
    let o = run("debias", &["--model", model.to_str().unwrap(), "--k", "500", "--no-clamp"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn debias_rejects_k_zero() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    run("fit", &["--kind", "knn", "--knn", "3", "--out", model.to_str().unwrap()]);
    let o = run("debias", &["--model", model.to_str().unwrap(), "--k", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k must be >= 1"));
}

#[test]
fn debias_needs_exactly_one_prediction_source() {
    assert_eq!(run("debias", &["--k", "3"]).status.code(), Some(1));
    assert_eq!(
        run("debias", &["--k", "3", "--model", "a.json", "--predictions", "b.csv"]).status.code(),
        Some(1)
    );
}

#[test]
fn logistic_fit_needs_a_binary_target() {
    let o = run("fit", &["--kind", "logistic"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn evaluate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = tdb(&[
            "evaluate",
            "--config",
            fixture("experiment.json").to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["sweep.csv", "summary.csv", "report.json"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let summary = std::fs::read_to_string(dir.path().join("a/summary.csv")).unwrap();
    // 3 k values x 2 sex levels x 7 metrics
    assert_eq!(summary.lines().count(), 1 + 3 * 2 * 7);

    let seeded = dir.path().join("c");
    tdb(&[
        "evaluate",
        "--config",
        fixture("experiment.json").to_str().unwrap(),
        "--out-dir",
        seeded.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_ne!(
        std::fs::read(seeded.join("sweep.csv")).unwrap(),
        std::fs::read(dir.path().join("a/sweep.csv")).unwrap()
    );
}

#[test]
fn evaluate_without_output_directory_is_a_usage_error() {
    let o = tdb(&["evaluate", "--config", fixture("experiment.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn theory_check_prints_json() {
    let o = tdb(&["theory-check", "--trials", "10", "--n", "100000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["trials"].as_array().unwrap().len(), 10);
    assert_eq!(report["identity"]["passed"], 10);
    assert_eq!(report["residualization"]["passed"], 10);
    assert_eq!(report["tower"]["passed"], 10);
}

#[test]
fn synth_then_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/strong_s/spec.json");
    let out = dir.path().join("synth");
    let o = tdb(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--n",
        "50",
        "--seed",
        "3",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("data.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x1,x2,s,y"));
    assert_eq!(csv.lines().count(), 51);
    let o = tdb(&[
        "ingest-check",
        "--data",
        out.join("data.csv").to_str().unwrap(),
        "--schema",
        out.join("schema.json").to_str().unwrap(),
    ]);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["rows"], 50);
    assert_eq!(summary["sensitive"][0], "s");
}
