//! Linear surrogate of the peak stress and the rank-and-refine pass.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::StressOracle;

const RANK_TOLERANCE: f64 = 1e-10;

/// Least-squares fit `σ* ≈ X β` on the training locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub beta: Vec<f64>,
    /// Zero unless the fit was asked for an intercept.
    pub intercept: f64,
    pub training: Vec<usize>,
    pub residual_norm: f64,
    /// Numerical rank of the training matrix (intercept column included).
    pub rank: usize,
    /// Number of fitted coefficients, intercept included.
    pub unknowns: usize,
}

impl SurrogateModel {
    /// The training data did not determine every coefficient; the fit is the
    /// minimum-norm solution.
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.unknowns
    }
}

/// Ordinary least squares via SVD; minimum-norm when `x_l` is rank deficient.
pub fn fit_ols(x_l: &DMatrix<f64>, sigma_l: &[f64], intercept: bool) -> Result<SurrogateModel> {
    let (m, p) = x_l.shape();
    if m == 0 {
        return Err(Error::Validation("cannot fit a surrogate without training data".into()));
    }
    if sigma_l.len() != m {
        return Err(Error::Validation(format!("{} targets for {m} training rows", sigma_l.len())));
    }
    let a = if intercept {
        let mut a = DMatrix::from_element(m, p + 1, 1.0);
        a.view_mut((0, 0), (m, p)).copy_from(x_l);
        a
    } else {
        x_l.clone()
    };
    let y = DVector::from_column_slice(sigma_l);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = if smax > 0.0 { RANK_TOLERANCE * smax } else { f64::MIN_POSITIVE };
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let coef = svd.solve(&y, eps).map_err(|e| Error::Singular(e.to_string()))?;
    let residual_norm = (&a * &coef - &y).norm();
    let (beta, b0) = if intercept {
        (coef.rows(0, p).iter().copied().collect(), coef[p])
    } else {
        (coef.iter().copied().collect(), 0.0)
    };
    Ok(SurrogateModel {
        beta,
        intercept: b0,
        training: Vec::new(),
        residual_norm,
        rank,
        unknowns: a.ncols(),
    })
}

/// Fits on the rows `training` of the full design matrix.
pub fn fit_on(x: &DMatrix<f64>, training: &[usize], sigma_l: &[f64], intercept: bool) -> Result<SurrogateModel> {
    if let Some(&i) = training.iter().find(|&&i| i >= x.nrows()) {
        return Err(Error::Validation(format!("training index {i} out of range")));
    }
    let x_l = x.select_rows(training);
    let mut model = fit_ols(&x_l, sigma_l, intercept)?;
    model.training = training.to_vec();
    Ok(model)
}

/// `σ̂* = X β̂ (+ β₀)` for every row.
pub fn predict(x: &DMatrix<f64>, model: &SurrogateModel) -> Result<Vec<f64>> {
    if x.ncols() != model.beta.len() {
        return Err(Error::Validation(format!(
            "design matrix has {} columns, model has {} coefficients",
            x.ncols(),
            model.beta.len()
        )));
    }
    let beta = DVector::from_column_slice(&model.beta);
    Ok((x * beta).iter().map(|v| v + model.intercept).collect())
}

/// Indices by descending prediction; equal predictions keep index order.
pub fn ranking(sigma_hat: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sigma_hat.len()).collect();
    order.sort_by(|&a, &b| sigma_hat[b].total_cmp(&sigma_hat[a]));
    order
}

/// Something that returns the true peak stress at a contact location.
pub trait PeakStress: Sync {
    fn peak_stress(&self, f: usize) -> Result<f64>;

    /// Whether a value is already known without a new solve.
    fn is_cached(&self, _f: usize) -> bool {
        false
    }
}

impl PeakStress for StressOracle {
    fn peak_stress(&self, f: usize) -> Result<f64> {
        Ok(self.max_stress(f)?.sigma_star)
    }

    fn is_cached(&self, f: usize) -> bool {
        self.cached(f).is_some()
    }
}

/// Known values, e.g. a completed sweep or a synthetic field.
impl PeakStress for [f64] {
    fn peak_stress(&self, f: usize) -> Result<f64> {
        self.get(f)
            .copied()
            .ok_or_else(|| Error::Validation(format!("contact index {f} out of range")))
    }

    fn is_cached(&self, _f: usize) -> bool {
        true
    }
}

impl PeakStress for Vec<f64> {
    fn peak_stress(&self, f: usize) -> Result<f64> {
        self.as_slice().peak_stress(f)
    }

    fn is_cached(&self, _f: usize) -> bool {
        true
    }
}

/// One refined location of the top-k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub index: usize,
    /// `None` if the oracle failed for this location.
    pub sigma_star: Option<f64>,
    /// The value was available before the pass (no new solve).
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub sigma_hat: Vec<f64>,
    pub ranking: Vec<usize>,
    /// Top-k prefix of `ranking`, in ranking order.
    pub refined: Vec<Refined>,
    /// Largest refined value.
    pub sigma_tilde: Option<f64>,
    /// Location of `sigma_tilde` (earliest in ranking order on ties).
    pub argmax_candidate: Option<usize>,
    pub failures: Vec<(usize, String)>,
}

impl RankedPrediction {
    pub fn k(&self) -> usize {
        self.refined.len()
    }

    /// Running best value after each refined location.
    pub fn sigma_tilde_curve(&self) -> Vec<Option<f64>> {
        let mut best: Option<f64> = None;
        self.refined
            .iter()
            .map(|r| {
                if let Some(v) = r.sigma_star {
                    best = Some(best.map_or(v, |b| b.max(v)));
                }
                best
            })
            .collect()
    }

    pub fn cache_hits(&self) -> usize {
        self.refined.iter().filter(|r| r.cached).count()
    }
}

/// Ranks the predictions and evaluates the oracle on the top `k`. Oracle
/// calls run in parallel; failures are recorded, not dropped from the count.
pub fn rank_and_refine(sigma_hat: &[f64], k: usize, oracle: &(impl PeakStress + ?Sized)) -> Result<RankedPrediction> {
    let n = sigma_hat.len();
    if k == 0 || k > n {
        return Err(Error::Validation(format!("top-k = {k} must lie in 1..={n}")));
    }
    let ranking = ranking(sigma_hat);
    let cached: Vec<bool> = ranking[..k].iter().map(|&f| oracle.is_cached(f)).collect();
    let values: Vec<Result<f64>> = ranking[..k].par_iter().map(|&f| oracle.peak_stress(f)).collect();
    let mut refined = Vec::with_capacity(k);
    let mut failures = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for ((&f, value), cached) in ranking[..k].iter().zip(values).zip(cached) {
        let sigma_star = match value {
            Ok(v) => {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((f, v));
                }
                Some(v)
            }
            Err(e) => {
                failures.push((f, e.to_string()));
                None
            }
        };
        refined.push(Refined {
            index: f,
            sigma_star,
            cached,
        });
    }
    Ok(RankedPrediction {
        sigma_hat: sigma_hat.to_vec(),
        ranking,
        refined,
        sigma_tilde: best.map(|b| b.1),
        argmax_candidate: best.map(|b| b.0),
        failures,
    })
}

/// Smallest `k` such that the best true value among the top `k` ranked
/// locations satisfies `σ* ≤ (1 + δ) · best`.
pub fn evaluate_k(ranking: &[usize], truth: &[f64], delta: f64) -> Result<usize> {
    if ranking.len() != truth.len() || truth.is_empty() {
        return Err(Error::Validation("ranking and ground truth must have the same non-zero length".into()));
    }
    if !(delta >= 0.0) {
        return Err(Error::Validation(format!("tolerance must be non-negative, got {delta}")));
    }
    let sigma_star = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut best = f64::NEG_INFINITY;
    for (k, &f) in ranking.iter().enumerate() {
        best = best.max(truth[f]);
        if sigma_star <= (1.0 + delta) * best {
            return Ok(k + 1);
        }
    }
    unreachable!("the full ranking always contains the maximum")
}
