use std::collections::BTreeMap;
use std::path::PathBuf;

use tower_debias::harness::{
    export_results, run_experiment, run_on_dataset, summary_csv, sweep_csv, ExperimentConfig,
    ModelSource,
};
use tower_debias::models::{external_from_reader, write_predictions};
use tower_debias::theory::{sample, GaussianSpec};
use tower_debias::{Dataset, Error, ErrorCategory, FitConfig, ModelKind, SplitPlan, Task};

fn spec() -> GaussianSpec {
    GaussianSpec::new(
        vec![0.0, 0.0, 0.0],
        vec![vec![1.0, 0.4, 0.8], vec![0.4, 1.0, 0.9], vec![0.8, 0.9, 2.0]],
    )
    .unwrap()
}

fn config(k_grid: Vec<usize>, replicates: usize) -> ExperimentConfig {
    ExperimentConfig {
        data: PathBuf::new(),
        schema: PathBuf::new(),
        model: ModelSource::Fit(ModelKind::Linear),
        fit: FitConfig::default(),
        task: None,
        k_grid,
        split: SplitPlan {
            holdout_fraction: 0.25,
            n_replicates: replicates,
            base_seed: 5,
        },
        threshold: 0.5,
        output_dir: None,
        drop_missing: false,
    }
}

fn data(n: usize) -> Dataset {
    sample(&spec(), n, 12).unwrap()
}

#[test]
fn full_reference_k_gives_undefined_debiased_correlation() {
    let d = data(80);
    let r = run_on_dataset(&d, &config(vec![1, 60], 3), None).unwrap();
    assert!(r.replicates.iter().all(|rep| rep.n_train == 60 && rep.n_holdout == 20));
    let last = &r.summary[1];
    assert_eq!(last.k, 60);
    assert_eq!(last.correlations[0].debiased_correlation.n_defined, 0);
    assert_eq!(last.correlations[0].debiased_correlation.mean, None);
    assert_eq!(last.correlations[0].baseline_correlation.n_defined, 3);
    let json = serde_json::to_value(&r).unwrap();
    assert!(json["summary"][1]["correlations"][0]["debiased_correlation"]["mean"].is_null());
    assert!(sweep_csv(&r).contains("60,0,s,debiased_correlation,NA"));
}

#[test]
fn export_row_counts() {
    let d = data(100);
    let (ks, reps) = (vec![1, 5, 10], 4);
    let r = run_on_dataset(&d, &config(ks.clone(), reps), None).unwrap();
    let levels = 1;
    assert_eq!(sweep_csv(&r).lines().count(), 1 + ks.len() * reps * levels * 5);
    assert_eq!(summary_csv(&r).lines().count(), 1 + ks.len() * levels * 7);
}

#[test]
fn summary_means_match_recomputed_sweep() {
    let d = data(120);
    let r = run_on_dataset(&d, &config(vec![3, 9], 5), None).unwrap();
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for line in sweep_csv(&r).lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[4] != "NA" {
            groups
                .entry((f[0].to_string(), f[3].to_string()))
                .or_default()
                .push(f[4].parse().unwrap());
        }
    }
    let mut checked = 0;
    for line in summary_csv(&r).lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let Some(values) = groups.get(&(f[0].to_string(), f[2].to_string())) else {
            continue;
        };
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!((mean - f[3].parse::<f64>().unwrap()).abs() < 1e-12, "{line}");
        assert_eq!(f[5].parse::<usize>().unwrap(), values.len());
        checked += 1;
    }
    assert_eq!(checked, 2 * 5);
}

#[test]
fn abs_summaries_average_absolute_values() {
    let d = data(120);
    let r = run_on_dataset(&d, &config(vec![4], 6), None).unwrap();
    let per_rep: Vec<f64> = r
        .replicates
        .iter()
        .map(|rep| rep.reports[0].correlations[0].debiased.value().unwrap().abs())
        .collect();
    let want = per_rep.iter().sum::<f64>() / per_rep.len() as f64;
    let got = r.summary[0].correlations[0].abs_debiased_correlation.mean.unwrap();
    assert!((got - want).abs() < 1e-15);
}

#[test]
fn external_predictions_drive_the_sweep() {
    let d = data(60);
    let preds: Vec<f64> = d.target().iter().map(|y| y * 0.5).collect();
    let mut buf = Vec::new();
    write_predictions(&mut buf, d.row_ids(), &preds).unwrap();
    let ext = external_from_reader(buf.as_slice(), "id", Task::Regression).unwrap();
    let mut cfg = config(vec![2], 2);
    cfg.model = ModelSource::External {
        external_predictions: "unused.csv".into(),
    };
    let r = run_on_dataset(&d, &cfg, Some(&ext)).unwrap();
    assert_eq!(r.model, "external");
    assert!(run_on_dataset(&d, &cfg, None).is_err());
}

#[test]
fn config_file_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    std::fs::write(
        &path,
        r#"{"data": "d.csv", "schema": "/abs/schema.json", "model": {"external_predictions": "p.csv"}}"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::from_json_file(&path).unwrap();
    assert_eq!(cfg.data, dir.path().join("d.csv"));
    assert_eq!(cfg.schema, PathBuf::from("/abs/schema.json"));
    assert_eq!(
        cfg.model,
        ModelSource::External {
            external_predictions: dir.path().join("p.csv")
        }
    );
    assert_eq!(cfg.k_grid, vec![1, 2, 5, 7, 10, 15, 20, 25, 30, 40, 50]);
    assert_eq!(cfg.split.n_replicates, 25);
    assert_eq!(cfg.split.holdout_fraction, 0.2);

    let d = data(40);
    for bad in [vec![], vec![0, 3], vec![5, 2]] {
        let err = run_on_dataset(&d, &config(bad, 1), None).unwrap_err();
        assert_eq!(err.category(), ErrorCategory::Usage);
    }
}

#[test]
fn re_export_is_byte_identical_and_train_holdout_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = data(90);
    let csv = dir.path().join("data.csv");
    let mut f = std::fs::File::create(&csv).unwrap();
    std::io::Write::write_all(&mut f, b"x1,s,y\n").unwrap();
    for r in 0..d.n_rows() {
        let row: Vec<String> = d.columns().iter().map(|c| c.values[r].to_string()).collect();
        std::io::Write::write_all(&mut f, (row.join(",") + "\n").as_bytes()).unwrap();
    }
    std::fs::write(dir.path().join("schema.json"), r#"{"x1":"feature","s":"sensitive","y":"target"}"#).unwrap();
    let mut cfg = config(vec![1, 7], 3);
    cfg.data = csv;
    cfg.schema = dir.path().join("schema.json");
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    export_results(&a, dir.path().join("a")).unwrap();
    export_results(&b, dir.path().join("b")).unwrap();
    for name in ["sweep.csv", "summary.csv", "report.json"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(name)).unwrap(),
            std::fs::read(dir.path().join("b").join(name)).unwrap(),
            "{name}"
        );
    }
    for rep in &a.replicates {
        assert_eq!(rep.n_train + rep.n_holdout, 90);
    }
}

#[test]
fn failures_name_the_replicate() {
    let d = data(30);
    let mut cfg = config(vec![1], 2);
    cfg.model = ModelSource::Fit(ModelKind::Logistic);
    match run_on_dataset(&d, &cfg, None).unwrap_err() {
        Error::Experiment { replicate, source, .. } => {
            assert!(replicate < 2);
            assert!(matches!(*source, Error::InvalidParameter(_)));
        }
        other => panic!("unexpected {other:?}"),
    }
}
