//! Baseline predictors of `E(Y | X, S)` and an adapter for externally
//! supplied predictions.
//!
//! Linear and logistic design matrices hold an intercept, every feature and
//! every sensitive column, with the first level of each one-hot group dropped
//! to keep the design full rank. The kNN predictor keeps all dummies.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Role, Standardizer};
use crate::error::{Error, Result};
use crate::neighbors::KdTree;

pub const INTERCEPT: &str = "(intercept)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    /// Classification when every target value is 0 or 1.
    pub fn infer(d: &Dataset) -> Task {
        if d.target().iter().all(|&v| v == 0.0 || v == 1.0) {
            Task::Classification
        } else {
            Task::Regression
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub ridge_epsilon: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Neighbor count of the kNN baseline predictor.
    pub knn: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            ridge_epsilon: 1e-8,
            max_iterations: 100,
            tolerance: 1e-8,
            knn: 10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge_epsilon >= 0.0) {
            return Err(Error::InvalidParameter("ridge_epsilon must be >= 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Model columns: features then sensitive columns, dropping the first dummy
/// of each categorical group.
pub fn design_columns(d: &Dataset) -> Vec<String> {
    let mut seen_groups = BTreeSet::new();
    let mut out = Vec::new();
    for role in [Role::Feature, Role::Sensitive] {
        for c in d.columns_with_role(role) {
            if c.is_dummy() && seen_groups.insert(c.source.clone()) {
                continue;
            }
            out.push(c.name.clone());
        }
    }
    out
}

/// Design matrix with a leading intercept column.
pub fn design_matrix(d: &Dataset, columns: &[String]) -> Result<DMatrix<f64>> {
    let positions = d.column_positions(columns)?;
    let n = d.n_rows();
    Ok(DMatrix::from_fn(n, columns.len() + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            d.columns()[positions[c - 1]].values[r]
        }
    }))
}

/// Solves `(XᵀX + εI) β = Xᵀy` by Cholesky.
pub fn solve_normal_equations(x: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let xt = x.transpose();
    solve_spd(xt.clone() * x, xt * y, ridge)
}

fn solve_spd(mut a: DMatrix<f64>, b: DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..a.nrows() {
        a[(i, i)] += ridge;
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Singular("normal equations are not positive definite".into()))?;
    if ridge == 0.0 {
        let l = chol.l_dirty();
        let min_pivot = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if min_pivot <= 1e-12 * scale {
            return Err(Error::Singular(
                "design matrix is rank deficient; use ridge_epsilon > 0".into(),
            ));
        }
    }
    Ok(chol.solve(&b))
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// Bernoulli log-likelihood `Σ yᵢηᵢ − log(1 + e^{ηᵢ})` with `η = Xβ`.
pub fn logistic_log_likelihood(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y.iter()).map(|(e, yi)| yi * e - softplus(*e)).sum()
}

/// Gradient of [`logistic_log_likelihood`]: `Xᵀ(y − σ(Xβ))`.
pub fn logistic_gradient(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> DVector<f64> {
    let p = (x * beta).map(sigmoid);
    x.transpose() * (y - p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub task: Task,
    pub columns: Vec<String>,
    /// Intercept first, then one entry per column.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub separation: bool,
    /// Log-likelihood after each accepted step, starting with the initial value.
    pub log_likelihood: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub diagnostics: LogisticDiagnostics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub task: Task,
    pub k: usize,
    pub standardizer: Standardizer,
    pub targets: Vec<f64>,
    tree: KdTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalModel {
    pub task: Task,
    pub predictions: BTreeMap<usize, f64>,
}

/// A fitted predictor of `E(Y | X, S)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    Linear(LinearModel),
    Logistic(LogisticModel),
    Knn(KnnModel),
    External(ExternalModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Logistic,
    Knn,
}

pub fn fit_linear(train: &Dataset, config: &FitConfig) -> Result<Predictor> {
    config.validate()?;
    let columns = design_columns(train);
    let x = design_matrix(train, &columns)?;
    let y = DVector::from_column_slice(train.target());
    let beta = solve_normal_equations(&x, &y, config.ridge_epsilon)?;
    Ok(Predictor::Linear(LinearModel {
        task: Task::infer(train),
        columns,
        coefficients: beta.iter().copied().collect(),
    }))
}

pub fn fit_logistic(train: &Dataset, config: &FitConfig) -> Result<Predictor> {
    config.validate()?;
    let y_raw = train.target();
    if y_raw.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidParameter(
            "logistic regression needs a 0/1 target".into(),
        ));
    }
    let positives = y_raw.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == y_raw.len() {
        return Err(Error::InvalidParameter(
            "logistic regression needs at least one row per class".into(),
        ));
    }
    let columns = design_columns(train);
    let x = design_matrix(train, &columns)?;
    let y = DVector::from_column_slice(y_raw);
    let (beta, diagnostics) = irls(&x, &y, config)?;
    Ok(Predictor::Logistic(LogisticModel {
        columns,
        coefficients: beta.iter().copied().collect(),
        diagnostics,
    }))
}

const SEPARATION_NORM: f64 = 1e6;
/// Mean negative log-likelihood below which fitted probabilities are numerically 0 or 1.
const SEPARATION_LOSS: f64 = 1e-6;

/// Newton-Raphson (IRLS) with step halving so the log-likelihood never
/// decreases between accepted iterates.
fn irls(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    config: &FitConfig,
) -> Result<(DVector<f64>, LogisticDiagnostics)> {
    let n = x.nrows();
    let mut beta = DVector::zeros(x.ncols());
    let mean = y.mean();
    beta[0] = (mean / (1.0 - mean)).ln();
    let mut ll = logistic_log_likelihood(x, y, &beta);
    let mut diag = LogisticDiagnostics {
        iterations: 0,
        converged: false,
        separation: false,
        log_likelihood: vec![ll],
    };
    for _ in 0..config.max_iterations {
        diag.iterations += 1;
        let p = (x * &beta).map(sigmoid);
        let w = p.map(|pi| pi * (1.0 - pi));
        let mut xw = x.clone();
        for (r, wr) in w.iter().enumerate() {
            xw.row_mut(r).scale_mut(*wr);
        }
        let hessian = x.transpose() * xw;
        let grad = x.transpose() * (y - &p);
        let step = solve_spd(hessian, grad, config.ridge_epsilon.max(1e-12))?;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &beta + &step * t;
            let cand_ll = logistic_log_likelihood(x, y, &cand);
            if cand_ll >= ll {
                accepted = Some((cand, cand_ll));
                break;
            }
            t *= 0.5;
        }
        let Some((next, next_ll)) = accepted else {
            // no ascent direction left at machine precision
            diag.converged = true;
            break;
        };
        let change = (&next - &beta).amax();
        beta = next;
        ll = next_ll;
        diag.log_likelihood.push(ll);

        if beta.norm() > SEPARATION_NORM || -ll < SEPARATION_LOSS * n as f64 {
            log::warn!("logistic fit: perfect separation detected, stopping early");
            diag.separation = true;
            break;
        }
        if change < config.tolerance {
            diag.converged = true;
            break;
        }
    }
    if !diag.converged && !diag.separation {
        log::warn!(
            "logistic fit did not converge in {} iterations",
            config.max_iterations
        );
    }
    Ok((beta, diag))
}

/// Columns used by the kNN predictor: all features and all sensitive columns.
fn knn_columns(d: &Dataset) -> Vec<String> {
    let mut cols = d.names_with_role(Role::Feature);
    cols.extend(d.names_with_role(Role::Sensitive));
    cols
}

pub fn fit_knn_predictor(train: &Dataset, config: &FitConfig) -> Result<Predictor> {
    if config.knn == 0 {
        return Err(Error::InvalidParameter("knn neighbor count must be >= 1".into()));
    }
    if config.knn > train.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "knn neighbor count {} exceeds {} training rows",
            config.knn,
            train.n_rows()
        )));
    }
    let standardizer = Standardizer::fit(train, &knn_columns(train))?;
    let points = standardizer.transform(train)?;
    let tree = KdTree::build(points, standardizer.dim());
    Ok(Predictor::Knn(KnnModel {
        task: Task::infer(train),
        k: config.knn,
        standardizer,
        targets: train.target().to_vec(),
        tree,
    }))
}

pub fn fit(kind: ModelKind, train: &Dataset, config: &FitConfig) -> Result<Predictor> {
    match kind {
        ModelKind::Linear => fit_linear(train, config),
        ModelKind::Logistic => fit_logistic(train, config),
        ModelKind::Knn => fit_knn_predictor(train, config),
    }
}

/// Reads an `id,prediction` CSV. Ids are 0-based data-row indices.
pub fn load_external_predictions(
    path: impl AsRef<Path>,
    id_column: &str,
    task: Task,
) -> Result<Predictor> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    external_from_reader(file, id_column, task)
}

pub fn external_from_reader<R: std::io::Read>(
    reader: R,
    id_column: &str,
    task: Task,
) -> Result<Predictor> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let (id_pos, pred_pos) = (find(id_column)?, find("prediction")?);
    let mut predictions = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let id: usize = record[id_pos]
            .parse()
            .map_err(|_| Error::SchemaMismatch(format!("bad id `{}`", &record[id_pos])))?;
        let value: f64 = record[pred_pos].parse().map_err(|_| {
            Error::SchemaMismatch(format!("bad prediction `{}`", &record[pred_pos]))
        })?;
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("prediction for id {id}")));
        }
        if task == Task::Classification && !(0.0..=1.0).contains(&value) {
            return Err(Error::ProbabilityOutOfRange { id, value });
        }
        if predictions.insert(id, value).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    if predictions.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(Predictor::External(ExternalModel { task, predictions }))
}

/// Writes `id,prediction` rows.
pub fn write_predictions<W: std::io::Write>(writer: W, ids: &[usize], values: &[f64]) -> Result<()> {
    write_id_values(writer, "prediction", ids, values)
}

pub(crate) fn write_id_values<W: std::io::Write>(
    writer: W,
    value_header: &str,
    ids: &[usize],
    values: &[f64],
) -> Result<()> {
    if ids.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: ids.len(),
            actual: values.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", value_header])?;
    for (id, v) in ids.iter().zip(values) {
        w.write_record([id.to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

impl Predictor {
    pub fn task(&self) -> Task {
        match self {
            Predictor::Linear(m) => m.task,
            Predictor::Logistic(_) => Task::Classification,
            Predictor::Knn(m) => m.task,
            Predictor::External(m) => m.task,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Predictor::Linear(_) => "linear",
            Predictor::Logistic(_) => "logistic",
            Predictor::Knn(_) => "knn",
            Predictor::External(_) => "external",
        }
    }

    /// One finite value per row. Classification outputs lie in `[0,1]`; a
    /// linear model fit on a 0/1 target has its outputs clipped to that range.
    pub fn predict(&self, rows: &Dataset) -> Result<Vec<f64>> {
        let out = match self {
            Predictor::Linear(m) => {
                let x = design_matrix(rows, &m.columns)?;
                let eta = x * DVector::from_column_slice(&m.coefficients);
                let clip = m.task == Task::Classification;
                eta.iter()
                    .map(|&v| if clip { v.clamp(0.0, 1.0) } else { v })
                    .collect()
            }
            Predictor::Logistic(m) => {
                let x = design_matrix(rows, &m.columns)?;
                let eta = x * DVector::from_column_slice(&m.coefficients);
                eta.iter().map(|&v| sigmoid(v)).collect()
            }
            Predictor::Knn(m) => {
                let points = m.standardizer.transform(rows)?;
                let dim = m.standardizer.dim();
                points
                    .chunks(dim)
                    .map(|q| {
                        let hits = m.tree.knn(q, m.k);
                        hits.iter().map(|h| m.targets[h.index]).sum::<f64>() / hits.len() as f64
                    })
                    .collect()
            }
            Predictor::External(m) => rows
                .row_ids()
                .iter()
                .map(|id| m.predictions.get(id).copied().ok_or(Error::UnknownId(*id)))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(out)
    }

    /// Coefficient names and values for linear-family models.
    pub fn coefficients(&self) -> Option<Vec<(String, f64)>> {
        let (cols, coefs) = match self {
            Predictor::Linear(m) => (&m.columns, &m.coefficients),
            Predictor::Logistic(m) => (&m.columns, &m.coefficients),
            _ => return None,
        };
        Some(
            std::iter::once(INTERCEPT.to_string())
                .chain(cols.iter().cloned())
                .zip(coefs.iter().copied())
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
