//! Repeated-holdout evaluation of baseline versus debiased predictions over a
//! grid of neighbor counts.
//!
//! Per replicate: split, fit the baseline (or look up external predictions),
//! build the neighbor index on the training rows and their predictions, then
//! debias the holdout rows for every `k`. Holdout rows never enter the index.
//! Correlations are averaged across replicates rather than pooled.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split, Dataset, LoadOptions, Role, Schema, SplitPlan, Standardizer};
use crate::debias::{DebiasConfig, DebiasIndex};
use crate::error::{Error, Result};
use crate::metrics::{fairness_report, FairnessReport, UtilityMetric};
use crate::models::{fit, load_external_predictions, FitConfig, ModelKind, Predictor, Task};

pub const DEFAULT_K_GRID: [usize; 11] = [1, 2, 5, 7, 10, 15, 20, 25, 30, 40, 50];

fn default_k_grid() -> Vec<usize> {
    DEFAULT_K_GRID.to_vec()
}

fn default_threshold() -> f64 {
    0.5
}

/// Where baseline predictions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Fit(ModelKind),
    External { external_predictions: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    pub schema: PathBuf,
    pub model: ModelSource,
    #[serde(default)]
    pub fit: FitConfig,
    /// Inferred from the target when absent.
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<usize>,
    #[serde(default)]
    pub split: SplitPlan,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub drop_missing: bool,
}

impl ExperimentConfig {
    /// Reads a config; relative paths resolve against the file's directory.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.data);
        resolve(&mut config.schema);
        if let ModelSource::External {
            external_predictions,
        } = &mut config.model
        {
            resolve(external_predictions);
        }
        if let Some(dir) = &mut config.output_dir {
            resolve(dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_grid.is_empty() {
            return Err(Error::InvalidParameter("k_grid is empty".into()));
        }
        if self.k_grid.contains(&0) {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("k_grid must be strictly ascending".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter("threshold must lie in (0,1)".into()));
        }
        self.split.validate()?;
        self.fit.validate()
    }
}

/// Mean and sample standard deviation over the defined per-replicate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n_defined: usize,
}

impl MetricSummary {
    pub fn from_values(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let defined: Vec<f64> = values.into_iter().flatten().collect();
        let n = defined.len();
        if n == 0 {
            return MetricSummary {
                mean: None,
                sd: None,
                n_defined: 0,
            };
        }
        let mean = defined.iter().sum::<f64>() / n as f64;
        let sd = (n > 1).then(|| {
            (defined.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        MetricSummary {
            mean: Some(mean),
            sd,
            n_defined: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub name: String,
    pub baseline_correlation: MetricSummary,
    pub debiased_correlation: MetricSummary,
    pub abs_baseline_correlation: MetricSummary,
    pub abs_debiased_correlation: MetricSummary,
    pub reduction: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: usize,
    pub correlations: Vec<LevelSummary>,
    pub baseline_utility: MetricSummary,
    pub debiased_utility: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub n_train: usize,
    pub n_holdout: usize,
    /// One report per entry of the k grid.
    pub reports: Vec<FairnessReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub model: String,
    pub task: Task,
    pub utility_metric: UtilityMetric,
    pub k_grid: Vec<usize>,
    pub replicates: Vec<ReplicateResult>,
    pub summary: Vec<KSummary>,
}

/// Loads the configured dataset and runs the sweep.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let schema = Schema::from_json_file(&config.schema)?;
    let data = Dataset::load_csv(
        &config.data,
        &schema,
        &LoadOptions {
            drop_missing: config.drop_missing,
        },
    )?;
    let external = match &config.model {
        ModelSource::External {
            external_predictions,
        } => {
            let task = config.task.unwrap_or_else(|| Task::infer(&data));
            Some(load_external_predictions(external_predictions, "id", task)?)
        }
        ModelSource::Fit(_) => None,
    };
    run_on_dataset(&data, config, external.as_ref())
}

/// Runs the sweep on an in-memory dataset. `external` supplies baseline
/// predictions when the config names an external source.
pub fn run_on_dataset(
    data: &Dataset,
    config: &ExperimentConfig,
    external: Option<&Predictor>,
) -> Result<SweepResult> {
    config.validate()?;
    let task = config.task.unwrap_or_else(|| Task::infer(data));
    let model_name = match (&config.model, external) {
        (ModelSource::Fit(kind), _) => serde_json::to_value(kind)?
            .as_str()
            .unwrap_or("model")
            .to_string(),
        (ModelSource::External { .. }, Some(_)) => "external".to_string(),
        (ModelSource::External { .. }, None) => {
            return Err(Error::InvalidParameter(
                "external model source requires a prediction table".into(),
            ))
        }
    };

    let replicates = (0..config.split.n_replicates)
        .into_par_iter()
        .map(|r| {
            run_replicate(data, config, task, external, r).map_err(|e| match e {
                Error::Experiment { .. } => e,
                other => Error::Experiment {
                    replicate: r,
                    k: None,
                    source: Box::new(other),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(&config.k_grid, &replicates);
    Ok(SweepResult {
        model: model_name,
        task,
        utility_metric: UtilityMetric::for_task(task),
        k_grid: config.k_grid.clone(),
        replicates,
        summary,
    })
}

fn run_replicate(
    data: &Dataset,
    config: &ExperimentConfig,
    task: Task,
    external: Option<&Predictor>,
    replicate: usize,
) -> Result<ReplicateResult> {
    let (train, holdout) = split(data, &config.split, replicate)?;
    let model = match (&config.model, external) {
        (ModelSource::Fit(kind), _) => fit(*kind, &train, &config.fit)?,
        (ModelSource::External { .. }, Some(m)) => m.clone(),
        (ModelSource::External { .. }, None) => unreachable!("checked by caller"),
    };
    let reference = model.predict(&train)?;
    let baseline = model.predict(&holdout)?;

    let standardizer = Standardizer::fit(&train, &train.names_with_role(Role::Feature))?;
    let index = DebiasIndex::build(&train, &reference, standardizer)?;
    let reference_ids: HashSet<usize> = index.reference_row_ids().iter().copied().collect();
    if let Some(id) = holdout.row_ids().iter().find(|id| reference_ids.contains(id)) {
        return Err(Error::InvalidSplit(format!(
            "holdout row {id} leaked into the reference index"
        )));
    }

    let points = index.standardize(&holdout)?;
    let reports = config
        .k_grid
        .iter()
        .map(|&k| {
            let debiased = index.debias_points(&points, &DebiasConfig::new(k))?;
            fairness_report(&holdout, &baseline, &debiased, k, task, config.threshold)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateResult {
        replicate,
        n_train: train.n_rows(),
        n_holdout: holdout.n_rows(),
        reports,
    })
}

fn summarize(k_grid: &[usize], replicates: &[ReplicateResult]) -> Vec<KSummary> {
    k_grid
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let reports: Vec<&FairnessReport> = replicates.iter().map(|r| &r.reports[ki]).collect();
            let levels = reports.first().map_or(0, |r| r.correlations.len());
            let correlations = (0..levels)
                .map(|li| {
                    let entries = || reports.iter().map(move |r| &r.correlations[li]);
                    LevelSummary {
                        name: reports[0].correlations[li].name.clone(),
                        baseline_correlation: MetricSummary::from_values(
                            entries().map(|c| c.baseline.value()),
                        ),
                        debiased_correlation: MetricSummary::from_values(
                            entries().map(|c| c.debiased.value()),
                        ),
                        abs_baseline_correlation: MetricSummary::from_values(
                            entries().map(|c| c.baseline.value().map(f64::abs)),
                        ),
                        abs_debiased_correlation: MetricSummary::from_values(
                            entries().map(|c| c.debiased.value().map(f64::abs)),
                        ),
                        reduction: MetricSummary::from_values(entries().map(|c| c.reduction)),
                    }
                })
                .collect();
            KSummary {
                k,
                correlations,
                baseline_utility: MetricSummary::from_values(
                    reports.iter().map(|r| Some(r.utility.baseline)),
                ),
                debiased_utility: MetricSummary::from_values(
                    reports.iter().map(|r| Some(r.utility.debiased)),
                ),
            }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Long-format rows: `k,replicate,sensitive_level,metric,value`.
pub fn sweep_csv(r: &SweepResult) -> String {
    let metric = r.utility_metric.name();
    let mut out = String::from("k,replicate,sensitive_level,metric,value\n");
    for rep in &r.replicates {
        for report in &rep.reports {
            for c in &report.correlations {
                let rows = [
                    ("baseline_correlation".to_string(), c.baseline.value()),
                    ("debiased_correlation".to_string(), c.debiased.value()),
                    ("reduction".to_string(), c.reduction),
                    (format!("baseline_{metric}"), Some(report.utility.baseline)),
                    (format!("debiased_{metric}"), Some(report.utility.debiased)),
                ];
                for (name, value) in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        report.k,
                        rep.replicate,
                        csv_field(&c.name),
                        name,
                        fmt_opt(value)
                    );
                }
            }
        }
    }
    out
}

/// Per-k aggregates: `k,sensitive_level,metric,mean,sd,n_defined`.
pub fn summary_csv(r: &SweepResult) -> String {
    let metric = r.utility_metric.name();
    let mut out = String::from("k,sensitive_level,metric,mean,sd,n_defined\n");
    for ks in &r.summary {
        for lv in &ks.correlations {
            let rows = [
                ("baseline_correlation".to_string(), lv.baseline_correlation),
                ("debiased_correlation".to_string(), lv.debiased_correlation),
                ("abs_baseline_correlation".to_string(), lv.abs_baseline_correlation),
                ("abs_debiased_correlation".to_string(), lv.abs_debiased_correlation),
                ("reduction".to_string(), lv.reduction),
                (format!("baseline_{metric}"), ks.baseline_utility),
                (format!("debiased_{metric}"), ks.debiased_utility),
            ];
            for (name, s) in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    ks.k,
                    csv_field(&lv.name),
                    name,
                    fmt_opt(s.mean),
                    fmt_opt(s.sd),
                    s.n_defined
                );
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `sweep.csv`, `summary.csv` and `report.json` into `dir`.
pub fn export_results(r: &SweepResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    if r.replicates.is_empty() || r.k_grid.is_empty() {
        return Err(Error::InvalidParameter("nothing to export".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, contents: String| {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(path, e))
    };
    write("sweep.csv", sweep_csv(r))?;
    write("summary.csv", summary_csv(r))?;
    let mut json = serde_json::to_string_pretty(r)?;
    json.push('\n');
    write("report.json", json)
}
