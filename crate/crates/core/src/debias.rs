//! Sensitive-attribute removal by neighborhood averaging.
//!
//! A reference set carries black-box predictions of `E(Y | X, S)`. A query is
//! answered with the unweighted mean of the predictions of its `k` nearest
//! reference rows in standardized `X`-space, where `X` excludes every sensitive
//! column. Averaging over the `S` values found at (nearly) the same `X` yields
//! an estimate of `E(Y | X)`, which no longer depends on `S`.
//!
//! Neighbor search is exact. Equal distances are resolved in favor of the
//! lower reference index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Role, Standardizer};
use crate::error::{Error, Result};
use crate::neighbors::{KdTree, Neighbor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebiasConfig {
    pub k: usize,
    /// Clamp `k` to the reference size (with a warning) instead of failing.
    pub clamp: bool,
}

impl DebiasConfig {
    pub fn new(k: usize) -> Self {
        DebiasConfig { k, clamp: true }
    }

    /// Neighbor count actually used against `n` reference rows.
    pub fn effective_k(&self, n: usize) -> Result<usize> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if self.k > n {
            if !self.clamp {
                return Err(Error::InvalidParameter(format!(
                    "k = {} exceeds {n} reference rows",
                    self.k
                )));
            }
            log::warn!("k = {} exceeds {n} reference rows; using k = {n}", self.k);
            return Ok(n);
        }
        Ok(self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMetadata {
    pub reference_rows: usize,
    pub feature_names: Vec<String>,
}

/// Immutable neighbor index over reference features and their predictions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DebiasIndex {
    standardizer: Standardizer,
    tree: KdTree,
    predictions: Vec<f64>,
    reference_row_ids: Vec<usize>,
    metadata: IndexMetadata,
}

impl DebiasIndex {
    /// `standardizer` must cover exactly the feature columns of `reference`.
    pub fn build(reference: &Dataset, predictions: &[f64], standardizer: Standardizer) -> Result<Self> {
        if predictions.len() != reference.n_rows() {
            return Err(Error::LengthMismatch {
                expected: reference.n_rows(),
                actual: predictions.len(),
            });
        }
        if let Some(i) = predictions.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("reference prediction {i}")));
        }
        let features = reference.names_with_role(Role::Feature);
        let sensitive_sources: Vec<&str> = reference
            .columns_with_role(Role::Sensitive)
            .map(|c| c.source.as_str())
            .collect();
        for name in &standardizer.names {
            let col = reference
                .column(name)
                .ok_or_else(|| Error::SchemaMismatch(format!("missing column `{name}`")))?;
            if col.role == Role::Sensitive || sensitive_sources.contains(&col.source.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "sensitive column `{name}` cannot enter the neighbor index"
                )));
            }
        }
        if standardizer.names != features {
            return Err(Error::SchemaMismatch(format!(
                "standardizer columns {:?} differ from feature columns {:?}",
                standardizer.names, features
            )));
        }
        let points = standardizer.transform(reference)?;
        Ok(DebiasIndex {
            tree: KdTree::build(points, standardizer.dim()),
            predictions: predictions.to_vec(),
            reference_row_ids: reference.row_ids().to_vec(),
            metadata: IndexMetadata {
                reference_rows: reference.n_rows(),
                feature_names: features,
            },
            standardizer,
        })
    }

    /// Fits the standardizer on `reference` itself, then builds.
    pub fn build_with_fitted_standardizer(reference: &Dataset, predictions: &[f64]) -> Result<Self> {
        let standardizer = Standardizer::fit(reference, &reference.names_with_role(Role::Feature))?;
        Self::build(reference, predictions, standardizer)
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn metadata(&self) -> &IndexMetadata {
        &self.metadata
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn reference_predictions(&self) -> &[f64] {
        &self.predictions
    }

    /// Data-row ids of the reference rows.
    pub fn reference_row_ids(&self) -> &[usize] {
        &self.reference_row_ids
    }

    /// Standardized feature rows of `queries`, row-major.
    pub fn standardize(&self, queries: &Dataset) -> Result<Vec<f64>> {
        self.standardizer.transform(queries)
    }

    /// Nearest reference rows to a standardized query point, sorted by
    /// `(distance, index)`.
    pub fn neighbors(&self, point: &[f64], k: usize) -> Vec<Neighbor> {
        self.tree.knn(point, k)
    }

    fn average(&self, point: &[f64], k: usize) -> f64 {
        let mut hits: Vec<usize> = self.tree.knn(point, k).iter().map(|h| h.index).collect();
        // summing in reference order makes equal neighbor sets give equal means
        hits.sort_unstable();
        let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for &i in &hits {
            let v = self.predictions[i];
            sum += v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // rounding can push the mean one ulp outside the averaged values
        (sum / hits.len() as f64).clamp(lo, hi)
    }

    /// Debiased predictions for already-standardized points.
    pub fn debias_points(&self, points: &[f64], config: &DebiasConfig) -> Result<Vec<f64>> {
        let dim = self.tree.dim();
        if !points.len().is_multiple_of(dim) {
            return Err(Error::SchemaMismatch(format!(
                "query buffer length {} is not a multiple of {dim} features",
                points.len()
            )));
        }
        let k = config.effective_k(self.len())?;
        Ok(points
            .par_chunks(dim)
            .map(|q| self.average(q, k))
            .collect())
    }

    /// Estimates of `E(Y | X)` for every query row.
    pub fn debias_predict(&self, queries: &Dataset, config: &DebiasConfig) -> Result<Vec<f64>> {
        let points = self.standardize(queries)?;
        self.debias_points(&points, config)
    }
}

/// Writes `id,debiased_prediction` rows.
pub fn write_debiased<W: std::io::Write>(writer: W, ids: &[usize], values: &[f64]) -> Result<()> {
    crate::models::write_id_values(writer, "debiased_prediction", ids, values)
}

/// Label 1 iff probability >= threshold.
pub fn classify(probabilities: &[f64], threshold: f64) -> Result<Vec<u8>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside (0,1)"
        )));
    }
    probabilities
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{p} is not a probability")));
            }
            Ok(u8::from(p >= threshold))
        })
        .collect()
}
