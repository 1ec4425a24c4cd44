//! Fairness and utility metrics.
//!
//! `mape` follows the usage in the fairness literature this crate targets: it
//! is the mean *absolute* prediction error in target units, not a percentage.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Role};
use crate::debias::classify;
use crate::error::{Error, Result};
use crate::models::Task;

/// Sample variances below this are treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-24;

/// A Pearson correlation, or `Undefined` when either input is constant.
/// Serializes as a number or `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum Correlation {
    Defined(f64),
    Undefined,
}

impl Correlation {
    pub fn value(self) -> Option<f64> {
        match self {
            Correlation::Defined(v) => Some(v),
            Correlation::Undefined => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        matches!(self, Correlation::Undefined)
    }
}

impl From<Option<f64>> for Correlation {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Correlation::Undefined, Correlation::Defined)
    }
}

impl From<Correlation> for Option<f64> {
    fn from(c: Correlation) -> Self {
        c.value()
    }
}

/// Sample Pearson correlation, accumulated in one pass with running
/// co-moments.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<Correlation> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::InvalidParameter(
            "correlation needs at least 2 observations".into(),
        ));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    let (mut mu, mut mv) = (0.0, 0.0);
    let (mut suu, mut svv, mut suv) = (0.0, 0.0, 0.0);
    for (i, (&a, &b)) in u.iter().zip(v).enumerate() {
        let n = (i + 1) as f64;
        let du = a - mu;
        let dv = b - mv;
        mu += du / n;
        mv += dv / n;
        suu += du * (a - mu);
        svv += dv * (b - mv);
        suv += du * (b - mv);
    }
    let dof = (u.len() - 1) as f64;
    if suu / dof < VARIANCE_FLOOR || svv / dof < VARIANCE_FLOOR {
        return Ok(Correlation::Undefined);
    }
    let r = suv / (suu * svv).sqrt();
    Ok(Correlation::Defined(r.clamp(-1.0, 1.0)))
}

/// Mean absolute prediction error.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidParameter("mape of empty vectors".into()));
    }
    let total: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum();
    Ok(total / actual.len() as f64)
}

pub fn misclassification_rate(actual: &[u8], predicted: &[u8]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidParameter("misclassification rate of empty vectors".into()));
    }
    if actual.iter().chain(predicted).any(|&l| l > 1) {
        return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
    }
    let wrong = actual.iter().zip(predicted).filter(|(a, p)| a != p).count();
    Ok(wrong as f64 / actual.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityMetric {
    Mape,
    MisclassificationRate,
}

impl UtilityMetric {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Regression => UtilityMetric::Mape,
            Task::Classification => UtilityMetric::MisclassificationRate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UtilityMetric::Mape => "mape",
            UtilityMetric::MisclassificationRate => "misclassification_rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCorrelation {
    /// Sensitive column (or dummy) name.
    pub name: String,
    pub baseline: Correlation,
    pub debiased: Correlation,
    /// `|baseline| − |debiased|`, absent when either side is undefined.
    pub reduction: Option<f64>,
}

impl LevelCorrelation {
    pub fn new(name: String, baseline: Correlation, debiased: Correlation) -> Self {
        let reduction = match (baseline.value(), debiased.value()) {
            (Some(b), Some(d)) => Some(b.abs() - d.abs()),
            _ => None,
        };
        LevelCorrelation {
            name,
            baseline,
            debiased,
            reduction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Utility {
    pub metric: UtilityMetric,
    pub baseline: f64,
    pub debiased: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub k: usize,
    pub n_holdout: usize,
    pub correlations: Vec<LevelCorrelation>,
    pub utility: Utility,
}

/// Correlations of baseline and debiased predictions with every sensitive
/// column (all dummy levels), plus utility on the holdout target.
/// Classification correlations use probabilities; utility uses labels at
/// `threshold`.
pub fn fairness_report(
    holdout: &Dataset,
    baseline: &[f64],
    debiased: &[f64],
    k: usize,
    task: Task,
    threshold: f64,
) -> Result<FairnessReport> {
    let n = holdout.n_rows();
    for len in [baseline.len(), debiased.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let sensitive: Vec<_> = holdout.columns_with_role(Role::Sensitive).collect();
    if sensitive.is_empty() {
        return Err(Error::InvalidSchema("no sensitive columns".into()));
    }
    let correlations = sensitive
        .iter()
        .map(|c| {
            Ok(LevelCorrelation::new(
                c.name.clone(),
                pearson(baseline, &c.values)?,
                pearson(debiased, &c.values)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let y = holdout.target();
    let metric = UtilityMetric::for_task(task);
    let utility = match metric {
        UtilityMetric::Mape => Utility {
            metric,
            baseline: mape(y, baseline)?,
            debiased: mape(y, debiased)?,
        },
        UtilityMetric::MisclassificationRate => {
            let labels: Vec<u8> = y.iter().map(|&v| u8::from(v >= 0.5)).collect();
            Utility {
                metric,
                baseline: misclassification_rate(&labels, &classify(baseline, threshold)?)?,
                debiased: misclassification_rate(&labels, &classify(debiased, threshold)?)?,
            }
        }
    };
    Ok(FairnessReport {
        k,
        n_holdout: n,
        correlations,
        utility,
    })
}
