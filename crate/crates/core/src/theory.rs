//! Multivariate-Gaussian checks of the conditional-expectation algebra behind
//! neighborhood debiasing.
//!
//! Coordinates are ordered `(X_1, .., X_p, S, Y)` with a scalar `S`. Under
//! joint normality every conditional mean is linear:
//!
//! * `E(Y | X, S) = Xβ + αS`
//! * `E(Y | X)    = Xδ`
//! * `E(S | X)    = Xγ`, with residual variance `σ²`
//!
//! where `X` carries a leading constant 1, so `β`, `δ`, `γ` have length
//! `p + 1`. Averaging the first over `S` at fixed `X` gives `δ = β + αγ`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, Role};
use crate::debias::{DebiasConfig, DebiasIndex};
use crate::error::{Error, Result};
use crate::metrics::pearson;
use crate::models::{design_matrix, fit_linear, solve_normal_equations, FitConfig};

const SYMMETRY_TOL: f64 = 1e-12;

/// Mean and covariance of `(X_1..X_p, S, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, covariance: Vec<Vec<f64>>) -> Result<Self> {
        let spec = GaussianSpec { mean, covariance };
        spec.validate()?;
        Ok(spec)
    }

    /// Covariance `AᵀA + 0.1·I` with standard-normal `A`, zero mean.
    pub fn random(p: usize, seed: u64) -> Self {
        let d = p + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let cov = a.transpose() * &a + DMatrix::identity(d, d) * 0.1;
        GaussianSpec {
            mean: vec![0.0; d],
            covariance: (0..d).map(|i| cov.row(i).iter().copied().collect()).collect(),
        }
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: GaussianSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Dimension of `X`.
    pub fn p(&self) -> usize {
        self.mean.len().saturating_sub(2)
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn s_index(&self) -> usize {
        self.p()
    }

    fn y_index(&self) -> usize {
        self.p() + 1
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i][j]
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.covariance[i][j])
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d < 2 {
            return Err(Error::DegenerateSpec("need at least S and Y coordinates".into()));
        }
        if self.covariance.len() != d || self.covariance.iter().any(|r| r.len() != d) {
            return Err(Error::DegenerateSpec(format!("covariance must be {d}x{d}")));
        }
        if self.mean.iter().chain(self.covariance.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian spec".into()));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (self.covariance[i][j], self.covariance[j][i]);
                if (a - b).abs() > SYMMETRY_TOL * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::DegenerateSpec(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        self.covariance_matrix()
            .cholesky()
            .map(|_| ())
            .ok_or(Error::NotPositiveDefinite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationCoefficients {
    /// Intercept first.
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `Var(S | X)`, the residual variance of `S = Xγ + ε`.
    pub sigma2_eps: f64,
}

impl PopulationCoefficients {
    /// `max_j |δ_j − (β_j + αγ_j)|`.
    pub fn identity_gap(&self) -> f64 {
        self.delta
            .iter()
            .zip(self.beta.iter().zip(&self.gamma))
            .map(|(d, (b, g))| (d - (b + self.alpha * g)).abs())
            .fold(0.0, f64::max)
    }
}

/// Regression of coordinate `target` on coordinates `on`: `(intercept, slopes)`.
fn conditional_mean(spec: &GaussianSpec, on: &[usize], target: usize) -> Result<(f64, Vec<f64>)> {
    if on.is_empty() {
        return Ok((spec.mean[target], Vec::new()));
    }
    let m = on.len();
    let sigma = DMatrix::from_fn(m, m, |i, j| spec.cov(on[i], on[j]));
    let cross = DVector::from_fn(m, |i, _| spec.cov(on[i], target));
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("sub-covariance over {on:?}")))?;
    let slopes = chol.solve(&cross);
    let intercept = spec.mean[target]
        - on.iter().zip(slopes.iter()).map(|(&i, b)| spec.mean[i] * b).sum::<f64>();
    Ok((intercept, slopes.iter().copied().collect()))
}

/// Exact conditional-mean coefficients from the spec's moments.
pub fn population_coefficients(spec: &GaussianSpec) -> Result<PopulationCoefficients> {
    spec.validate()?;
    let p = spec.p();
    let xs: Vec<usize> = (0..p).collect();
    let mut xs_s = xs.clone();
    xs_s.push(spec.s_index());

    let (b0, b) = conditional_mean(spec, &xs_s, spec.y_index())?;
    let (d0, d) = conditional_mean(spec, &xs, spec.y_index())?;
    let (g0, g) = conditional_mean(spec, &xs, spec.s_index())?;

    let s = spec.s_index();
    let explained: f64 = (0..p).map(|i| spec.cov(s, i) * g[i]).sum();
    let mut beta = vec![b0];
    beta.extend(&b[..p]);
    let mut delta = vec![d0];
    delta.extend(&d);
    let mut gamma = vec![g0];
    gamma.extend(&g);
    Ok(PopulationCoefficients {
        beta,
        alpha: b[p],
        delta,
        gamma,
        sigma2_eps: (spec.cov(s, s) - explained).max(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoReduction {
    /// Correlation of `E(Y | X, S)` with `S`.
    pub rho1: f64,
    /// Correlation of `E(Y | X)` with `S`.
    pub rho2: f64,
    pub reduction: f64,
}

fn quad(cov_x: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let a = DVector::from_column_slice(a);
    let b = DVector::from_column_slice(b);
    a.dot(&(cov_x * b))
}

/// Closed-form correlations of both conditional means with `S`.
pub fn rho_reduc_closed_form(coeffs: &PopulationCoefficients, spec: &GaussianSpec) -> Result<RhoReduction> {
    let p = spec.p();
    let cov_x = DMatrix::from_fn(p, p, |i, j| spec.cov(i, j));
    let var_s = spec.cov(spec.s_index(), spec.s_index());
    let (beta, delta, gamma) = (&coeffs.beta[1..], &coeffs.delta[1..], &coeffs.gamma[1..]);
    let alpha = coeffs.alpha;

    let b_g = quad(&cov_x, beta, gamma);
    let var1 = quad(&cov_x, beta, beta) + alpha * alpha * var_s + 2.0 * alpha * b_g;
    let var2 = quad(&cov_x, delta, delta);
    let scale = spec.cov(spec.y_index(), spec.y_index()).max(1.0);
    if !(var_s > 0.0) {
        return Err(Error::DegenerateSpec("Var(S) is zero".into()));
    }
    if var1 <= 1e-14 * scale {
        return Err(Error::DegenerateSpec("Var(E[Y|X,S]) is zero".into()));
    }
    if var2 <= 1e-14 * scale {
        return Err(Error::DegenerateSpec("Var(E[Y|X]) is zero".into()));
    }
    let rho1 = (b_g + alpha * var_s) / (var1.sqrt() * var_s.sqrt());
    let rho2 = quad(&cov_x, delta, gamma) / (var2.sqrt() * var_s.sqrt());
    Ok(RhoReduction {
        rho1,
        rho2,
        reduction: rho1 - rho2,
    })
}

/// `n` draws as an `n × (p+2)` matrix, deterministic in `seed`.
pub fn sample_matrix(spec: &GaussianSpec, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    let d = spec.dim();
    let l = spec
        .covariance_matrix()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .unpack();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, d);
    let mut z = vec![0.0; d];
    for r in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for i in 0..d {
            let mut v = spec.mean[i];
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                v += l[(i, j)] * zj;
            }
            out[(r, i)] = v;
        }
    }
    Ok(out)
}

/// Column names used for sampled datasets.
pub fn column_names(p: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
    names.push("s".into());
    names.push("y".into());
    names
}

/// Samples a dataset with features `x1..xp`, sensitive `s` and target `y`.
pub fn sample(spec: &GaussianSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let p = spec.p();
    let m = sample_matrix(spec, n, seed)?;
    let names = column_names(p);
    let columns = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let role = if j < p {
                Role::Feature
            } else if j == p {
                Role::Sensitive
            } else {
                Role::Target
            };
            Column::numeric(name, role, m.column(j).iter().copied().collect())
        })
        .collect();
    Dataset::from_columns(columns)
}

/// Independent stream seeds derived from a base seed (splitmix64).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn column_vec(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1).max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub closed: RhoReduction,
    pub sample_rho1: f64,
    pub sample_rho2: f64,
    pub se_rho1: f64,
    pub se_rho2: f64,
    pub pass: bool,
}

/// Compares the closed form against sample correlations of the population
/// conditional means evaluated on `n` draws. Pass means both gaps are within
/// three standard errors `(1 − ρ²)/√n`.
pub fn closed_form_vs_monte_carlo(spec: &GaussianSpec, n: usize, seed: u64) -> Result<ClosedFormCheck> {
    let coeffs = population_coefficients(spec)?;
    let closed = rho_reduc_closed_form(&coeffs, spec)?;
    let m = sample_matrix(spec, n, seed)?;
    let p = spec.p();
    let s = column_vec(&m, p);
    let linear = |coefs: &[f64], with_s: Option<f64>| -> Vec<f64> {
        (0..n)
            .map(|r| {
                let mut v = coefs[0];
                for j in 0..p {
                    v += coefs[j + 1] * m[(r, j)];
                }
                if let Some(a) = with_s {
                    v += a * m[(r, p)];
                }
                v
            })
            .collect()
    };
    let y1 = linear(&coeffs.beta, Some(coeffs.alpha));
    let y2 = linear(&coeffs.delta, None);
    let defined = |c: crate::metrics::Correlation| {
        c.value()
            .ok_or_else(|| Error::DegenerateSpec("constant sampled prediction".into()))
    };
    let sample_rho1 = defined(pearson(&y1, &s)?)?;
    let sample_rho2 = defined(pearson(&y2, &s)?)?;
    let sqrt_n = (n as f64).sqrt();
    let se_rho1 = (1.0 - closed.rho1 * closed.rho1) / sqrt_n;
    let se_rho2 = (1.0 - closed.rho2 * closed.rho2) / sqrt_n;
    let pass = (sample_rho1 - closed.rho1).abs() <= 3.0 * se_rho1
        && (sample_rho2 - closed.rho2).abs() <= 3.0 * se_rho2;
    Ok(ClosedFormCheck {
        closed,
        sample_rho1,
        sample_rho2,
        se_rho1,
        se_rho2,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerCheck {
    pub n: usize,
    pub mean_y: f64,
    pub mean_y1: f64,
    pub mean_y2: f64,
    /// Largest pairwise gap among the three means.
    pub total_expectation_gap: f64,
    pub total_expectation_bound: f64,
    /// Coefficients of the regression of fitted `E(Y|X,S)` values on `X`.
    pub projected_y1_coefficients: Vec<f64>,
    /// Fitted `E(Y|X)` coefficients.
    pub delta_hat: Vec<f64>,
    pub tower_gap: f64,
    /// `max_j |β̂_j − δ̂_j|` over the intercept and `X` coefficients.
    pub beta_delta_gap: f64,
    pub var_y1: f64,
    pub var_y2: f64,
    pub pass: bool,
}

fn ols(x: &DMatrix<f64>, y: &[f64]) -> Result<DVector<f64>> {
    solve_normal_equations(x, &DVector::from_column_slice(y), 0.0)
}

/// Fits `E(Y|X,S)` and `E(Y|X)` by least squares on `n` draws and checks
/// the law of total expectation and the tower step at the linear-model level.
pub fn verify_tower(spec: &GaussianSpec, n: usize, seed: u64) -> Result<TowerCheck> {
    spec.validate()?;
    let p = spec.p();
    let m = sample_matrix(spec, n, seed)?;
    let y = column_vec(&m, p + 1);
    let x_only = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { m[(r, c - 1)] });
    let x_s = DMatrix::from_fn(n, p + 2, |r, c| if c == 0 { 1.0 } else { m[(r, c - 1)] });

    let beta_hat = ols(&x_s, &y)?;
    let y1: Vec<f64> = (&x_s * &beta_hat).iter().copied().collect();
    let (delta_hat, y2): (DVector<f64>, Vec<f64>) = if p == 0 {
        let my = mean(&y);
        (DVector::from_element(1, my), vec![my; n])
    } else {
        let d = ols(&x_only, &y)?;
        let fitted = (&x_only * &d).iter().copied().collect();
        (d, fitted)
    };
    let projected = if p == 0 {
        DVector::from_element(1, mean(&y1))
    } else {
        ols(&x_only, &y1)?
    };

    let (mean_y, mean_y1, mean_y2) = (mean(&y), mean(&y1), mean(&y2));
    let total_expectation_gap = (mean_y - mean_y1)
        .abs()
        .max((mean_y - mean_y2).abs())
        .max((mean_y1 - mean_y2).abs());
    let total_expectation_bound = 5.0 * variance(&y).sqrt() / (n as f64).sqrt() * 3.0;
    let tower_gap = (&projected - &delta_hat).amax();
    let coef_scale = 1.0 + delta_hat.amax();
    let beta_delta_gap = (0..=p)
        .map(|j| (beta_hat[j] - delta_hat[j]).abs())
        .fold(0.0, f64::max);
    Ok(TowerCheck {
        n,
        mean_y,
        mean_y1,
        mean_y2,
        total_expectation_gap,
        total_expectation_bound,
        projected_y1_coefficients: projected.iter().copied().collect(),
        delta_hat: delta_hat.iter().copied().collect(),
        tower_gap,
        beta_delta_gap,
        var_y1: variance(&y1),
        var_y2: variance(&y2),
        pass: total_expectation_gap < total_expectation_bound && tower_gap <= 1e-8 * coef_scale,
    })
}

/// Replaces every feature column with its least-squares residual on the
/// sensitive columns (plus intercept), so the result is uncorrelated with `S`.
pub fn residualize(d: &Dataset) -> Result<Dataset> {
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::InvalidParameter("residualize needs at least 2 rows".into()));
    }
    // the intercept absorbs one dummy per group and any constant column
    let mut seen = std::collections::BTreeSet::new();
    let s_cols: Vec<String> = d
        .columns_with_role(Role::Sensitive)
        .filter(|c| !(c.is_dummy() && seen.insert(c.source.clone())))
        .filter(|c| variance(&c.values) > 0.0)
        .map(|c| c.name.clone())
        .collect();
    if s_cols.is_empty() {
        return Err(Error::ConstantColumn(
            d.names_with_role(Role::Sensitive).join(","),
        ));
    }
    let design = design_matrix(d, &s_cols)?;
    let qr = design.clone().qr();
    let r = qr.r();
    let r_max = r.diagonal().amax();
    if r.diagonal().iter().any(|v| v.abs() <= 1e-10 * r_max) {
        return Err(Error::Singular("sensitive design is rank deficient".into()));
    }
    let q = qr.q();
    let mut out = d.clone();
    for name in d.names_with_role(Role::Feature) {
        let x = DVector::from_column_slice(&d.column(&name).expect("listed").values);
        let fitted = &q * (q.transpose() * &x);
        let u: Vec<f64> = (x - fitted).iter().copied().collect();
        out = out.with_column_values(&name, u)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub n: usize,
    pub k: usize,
    pub baseline_correlation: f64,
    pub debiased_correlation: f64,
    /// `3/√n` slack added to the baseline side.
    pub slack: f64,
    pub holds: bool,
    pub var_baseline: f64,
    pub var_debiased: f64,
    /// True when the debiased predictions have the smaller variance.
    pub debiased_variance_smaller: bool,
}

/// Fits `E(Y|X,S)` linearly on `n` draws, debiases an independent set of `n`
/// query draws with `k` neighbors and compares correlations with `S`.
pub fn verify_inequality(spec: &GaussianSpec, n: usize, k: usize, seed: u64) -> Result<InequalityCheck> {
    let train = sample(spec, n, derive_seed(seed, 0))?;
    let queries = sample(spec, n, derive_seed(seed, 1))?;
    let model = fit_linear(&train, &FitConfig::default())?;
    let reference = model.predict(&train)?;
    let baseline = model.predict(&queries)?;
    let index = DebiasIndex::build_with_fitted_standardizer(&train, &reference)?;
    let debiased = index.debias_predict(&queries, &DebiasConfig::new(k))?;
    let s = &queries.column("s").expect("sampled sensitive column").values;
    let corr = |v: &[f64]| -> Result<f64> { Ok(pearson(v, s)?.value().unwrap_or(0.0)) };
    let (rb, rd) = (corr(&baseline)?, corr(&debiased)?);
    let slack = 3.0 / (n as f64).sqrt();
    let (vb, vd) = (variance(&baseline), variance(&debiased));
    Ok(InequalityCheck {
        n,
        k,
        baseline_correlation: rb,
        debiased_correlation: rd,
        slack,
        holds: rd.abs() <= rb.abs() + slack,
        var_baseline: vb,
        var_debiased: vd,
        debiased_variance_smaller: vd <= vb,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryConfig {
    pub trials: usize,
    pub n: usize,
    pub seed: u64,
    /// Fixed `X` dimension; `None` cycles through 1, 2, 5.
    pub p: Option<usize>,
    pub k: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            trials: 10,
            n: 100_000,
            seed: 0,
            p: None,
            k: 25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub p: usize,
    pub spec_seed: u64,
    pub identity_gap: f64,
    pub identity_pass: bool,
    pub closed_form: Option<ClosedFormCheck>,
    pub tower: TowerCheck,
    pub inequality: InequalityCheck,
    pub residualization_max_abs_correlation: f64,
    pub residualization_pass: bool,
    /// Degenerate-spec message when the closed form does not apply.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSummary {
    pub passed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryReport {
    pub config: TheoryConfig,
    pub identity: CheckSummary,
    pub closed_form: CheckSummary,
    pub tower: CheckSummary,
    pub inequality: CheckSummary,
    /// Trials where `Var(E[Y|X])` came out below `Var(E[Y|X,S])`.
    pub debiased_variance_smaller: CheckSummary,
    pub residualization: CheckSummary,
    pub trials: Vec<TrialReport>,
}

pub const IDENTITY_TOL: f64 = 1e-10;
pub const RESIDUAL_CORRELATION_TOL: f64 = 1e-10;

/// Largest `|ρ̂(U_j, S_c)|` over feature and sensitive columns.
pub fn max_abs_feature_sensitive_correlation(d: &Dataset) -> Result<f64> {
    let mut worst = 0.0f64;
    for f in d.columns_with_role(Role::Feature) {
        for s in d.columns_with_role(Role::Sensitive) {
            if let Some(r) = pearson(&f.values, &s.values)?.value() {
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

fn run_trial(config: &TheoryConfig, trial: usize) -> Result<TrialReport> {
    const P_CYCLE: [usize; 3] = [1, 2, 5];
    let p = config.p.unwrap_or(P_CYCLE[trial % P_CYCLE.len()]);
    let spec_seed = derive_seed(config.seed, trial as u64);
    let spec = GaussianSpec::random(p, spec_seed);
    let coeffs = population_coefficients(&spec)?;
    let identity_gap = coeffs.identity_gap();

    let mc_seed = derive_seed(spec_seed, 1);
    let (closed_form, note) = match closed_form_vs_monte_carlo(&spec, config.n, mc_seed) {
        Ok(c) => (Some(c), None),
        Err(Error::DegenerateSpec(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let tower = verify_tower(&spec, config.n, derive_seed(spec_seed, 2))?;
    let inequality = verify_inequality(&spec, config.n, config.k, derive_seed(spec_seed, 3))?;

    let resid_sample = sample(&spec, config.n.clamp(2, 10_000), derive_seed(spec_seed, 4))?;
    let residualized = residualize(&resid_sample)?;
    let worst = max_abs_feature_sensitive_correlation(&residualized)?;
    Ok(TrialReport {
        trial,
        p,
        spec_seed,
        identity_gap,
        identity_pass: identity_gap <= IDENTITY_TOL,
        closed_form,
        tower,
        inequality,
        residualization_max_abs_correlation: worst,
        residualization_pass: worst < RESIDUAL_CORRELATION_TOL,
        note,
    })
}

fn summarize(trials: &[TrialReport], pass: impl Fn(&TrialReport) -> Option<bool>) -> CheckSummary {
    let outcomes: Vec<bool> = trials.iter().filter_map(pass).collect();
    CheckSummary {
        passed: outcomes.iter().filter(|&&b| b).count(),
        total: outcomes.len(),
    }
}

/// Runs every check on `trials` random specs; trials run concurrently and
/// are reported in trial order.
pub fn run_theory_suite(config: &TheoryConfig) -> Result<TheoryReport> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if config.n < 2 {
        return Err(Error::InvalidParameter("n must be >= 2".into()));
    }
    if config.k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(TheoryReport {
        config: config.clone(),
        identity: summarize(&trials, |t| Some(t.identity_pass)),
        closed_form: summarize(&trials, |t| t.closed_form.as_ref().map(|c| c.pass)),
        tower: summarize(&trials, |t| Some(t.tower.pass)),
        inequality: summarize(&trials, |t| Some(t.inequality.holds)),
        debiased_variance_smaller: summarize(&trials, |t| {
            Some(t.inequality.debiased_variance_smaller)
        }),
        residualization: summarize(&trials, |t| Some(t.residualization_pass)),
        trials,
    })
}
