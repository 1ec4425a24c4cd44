//! `tdb`: command-line front end for neighborhood debiasing.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tower_debias::harness::{export_results, run_experiment, ExperimentConfig};
use tower_debias::models::{self, load_external_predictions, write_predictions};
use tower_debias::theory::{run_theory_suite, sample, GaussianSpec, TheoryConfig};
use tower_debias::{
    DebiasConfig, DebiasIndex, Dataset, Error, ErrorCategory, FitConfig, LoadOptions, ModelKind,
    Predictor, Role, Schema, Task,
};

#[derive(Parser)]
#[command(name = "tdb", version, about = "Remove sensitive-attribute influence from predictions by kNN averaging")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// JSON map of column name to role.
    #[arg(long)]
    schema: PathBuf,
    /// Drop rows with missing cells instead of failing.
    #[arg(long)]
    drop_missing: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Error> {
        load_data(&self.data, &self.schema, self.drop_missing)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Linear,
    Logistic,
    Knn,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Linear => ModelKind::Linear,
            KindArg::Logistic => ModelKind::Logistic,
            KindArg::Knn => ModelKind::Knn,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a dataset and print its encoded layout as JSON.
    IngestCheck {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Fit a baseline model on the whole dataset and export it as JSON.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Neighbor count for the kNN baseline.
        #[arg(long, default_value_t = FitConfig::default().knn)]
        knn: usize,
        #[arg(long, default_value_t = FitConfig::default().ridge_epsilon)]
        ridge: f64,
        /// Output model file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict every row with a fitted model; writes `id,prediction`.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Debias predictions; writes `id,debiased_prediction`.
    Debias {
        #[command(flatten)]
        data: DataArgs,
        /// `id,prediction` CSV of black-box outputs for the reference rows.
        #[arg(long, conflicts_with = "model", required_unless_present = "model")]
        predictions: Option<PathBuf>,
        /// Fitted model JSON used to produce reference predictions.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        /// Fail instead of clamping when k exceeds the reference size.
        #[arg(long)]
        no_clamp: bool,
        /// Query rows to debias (defaults to the reference data itself).
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a repeated-holdout k-sweep described by an experiment JSON.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides the config's split seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte Carlo checks of the Gaussian theory; prints a JSON report.
    TheoryCheck {
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed X dimension (cycles 1, 2, 5 when omitted).
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 25)]
        k: usize,
    },
    /// Sample a synthetic CSV and schema from a Gaussian spec JSON.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving `data.csv` and `schema.json`.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn load_data(data: &Path, schema: &Path, drop_missing: bool) -> Result<Dataset, Error> {
    let schema = Schema::from_json_file(schema)?;
    Dataset::load_csv(data, &schema, &LoadOptions { drop_missing })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_error(p, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Error> {
    let mut w = output(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| io_error(path.unwrap_or(Path::new("<stdout>")), e))
}

fn ingest_summary(d: &Dataset) -> serde_json::Value {
    let columns: Vec<_> = d
        .columns()
        .iter()
        .map(|c| serde_json::json!({"name": c.name, "role": c.role, "source": c.source, "level": c.level}))
        .collect();
    serde_json::json!({
        "rows": d.n_rows(),
        "dropped_rows": d.dropped_rows(),
        "target": d.target_column().name,
        "target_levels": d.target_levels(),
        "features": d.names_with_role(Role::Feature),
        "sensitive": d.names_with_role(Role::Sensitive),
        "encoding": d.encoding_map(),
        "columns": columns,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::IngestCheck { data } => {
            let d = data.load()?;
            let text = serde_json::to_string_pretty(&ingest_summary(&d))? + "\n";
            write_text(None, &text)
        }
        Command::Fit {
            data,
            kind,
            knn,
            ridge,
            out,
        } => {
            let d = data.load()?;
            let config = FitConfig {
                knn,
                ridge_epsilon: ridge,
                ..FitConfig::default()
            };
            let model = models::fit(kind.into(), &d, &config)?;
            write_text(out.as_deref(), &(model.to_json()? + "\n"))
        }
        Command::Predict { data, model, out } => {
            let d = data.load()?;
            let model = Predictor::load(&model)?;
            let preds = model.predict(&d)?;
            write_predictions(output(out.as_deref())?, d.row_ids(), &preds)
        }
        Command::Debias {
            data,
            predictions,
            model,
            k,
            no_clamp,
            queries,
            out,
        } => {
            let d = data.load()?;
            let config = DebiasConfig { k, clamp: !no_clamp };
            config.effective_k(usize::MAX)?;
            let predictor = match (predictions, model) {
                (Some(p), _) => load_external_predictions(&p, "id", Task::infer(&d))?,
                (None, Some(m)) => Predictor::load(&m)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            let reference = predictor.predict(&d)?;
            let index = DebiasIndex::build_with_fitted_standardizer(&d, &reference)?;
            let queries = match queries {
                Some(q) => load_data(&q, &data.schema, data.drop_missing)?,
                None => d,
            };
            let debiased = index.debias_predict(&queries, &config)?;
            tower_debias::debias::write_debiased(output(out.as_deref())?, queries.row_ids(), &debiased)
        }
        Command::Evaluate {
            config,
            out_dir,
            seed,
        } => {
            let mut config = ExperimentConfig::from_json_file(&config)?;
            if let Some(seed) = seed {
                config.split.base_seed = seed;
            }
            let dir = out_dir
                .or_else(|| config.output_dir.clone())
                .ok_or_else(|| Error::InvalidParameter("no output directory given".into()))?;
            let result = run_experiment(&config)?;
            export_results(&result, &dir)?;
            log::info!("wrote results to {}", dir.display());
            Ok(())
        }
        Command::TheoryCheck {
            trials,
            n,
            seed,
            p,
            k,
        } => {
            let report = run_theory_suite(&TheoryConfig {
                trials,
                n,
                seed,
                p,
                k,
            })?;
            write_text(None, &(serde_json::to_string_pretty(&report)? + "\n"))
        }
        Command::Synth {
            spec,
            n,
            seed,
            out_dir,
        } => {
            let spec = GaussianSpec::from_json_file(&spec)?;
            let d = sample(&spec, n, seed)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| io_error(&out_dir, e))?;
            let data_path = out_dir.join("data.csv");
            write_synth_csv(&d, &data_path)?;
            let schema = Schema::from_roles(d.columns().iter().map(|c| (c.name.as_str(), c.role)));
            write_text(Some(&out_dir.join("schema.json")), &(schema.to_json_string()? + "\n"))
        }
    }
}

/// Raw sampled columns without the row-id column.
fn write_synth_csv(d: &Dataset, path: &Path) -> Result<(), Error> {
    let mut text = d
        .columns()
        .iter()
        .map(|c| c.name.as_str())
        .collect::<Vec<_>>()
        .join(",");
    text.push('\n');
    for r in 0..d.n_rows() {
        let row: Vec<String> = d.columns().iter().map(|c| c.values[r].to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(Some(path), &text)
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Usage => 1,
        ErrorCategory::Data => 2,
        ErrorCategory::Numerical => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
