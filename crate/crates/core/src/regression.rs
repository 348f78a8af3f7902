//! Dense least-squares machinery shared by all estimators: OLS, restricted
//! OLS, residual-variance estimation, standardization, and design spectral
//! statistics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve, symmetric_eigenvalues, Matrix};
use crate::{Error, Result};

/// Relative pivot tolerance for the gram factorization: the design is
/// declared singular when the smallest normalized eigenvalue falls below
/// this fraction of the largest (tested through the Cholesky pivots).
pub const SINGULARITY_REL_TOL: f64 = 1e-12;

/// A regression problem: `n x p` covariates and `n x d` responses
/// (`d > 1` for multi-equation discovery, fitted one column at a time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub covariates: Matrix,
    pub responses: Matrix,
    pub is_centered: bool,
    pub is_standardized: bool,
    pub column_names: Option<Vec<String>>,
    /// Present after standardization; allows coefficient back-transformation.
    pub transform: Option<StandardizeTransform>,
}

/// Shifts and scales applied by [`standardize_with`]. Covariate column `j`
/// was mapped to `(x - x_shift[j]) / x_scale[j]`; response column `k` to
/// `y - y_shift[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeTransform {
    pub x_shift: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_shift: Vec<f64>,
    /// Columns with zero variance, handled per [`ConstantColumnPolicy`].
    pub constant_columns: Vec<usize>,
}

/// What to do with a zero-variance covariate column during standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantColumnPolicy {
    /// Fail with [`Error::ConstantColumn`].
    Reject,
    /// Leave the column untouched (an intercept-style library column keeps
    /// its meaning); it is excluded from the centered/standardized guarantee.
    Exempt,
    /// Center it like any other column, which turns it into an all-zero
    /// column that no estimator can select.
    CenterToZero,
}

/// Spectral and columnwise statistics of the design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignStats {
    /// `XᵀX`.
    pub gram: Matrix,
    /// Inverse of the gram; `None` when the design is numerically singular.
    pub gram_inverse: Option<Matrix>,
    /// Smallest eigenvalue of `n⁻¹XᵀX`, clamped at 0.
    pub rho1: f64,
    /// Largest eigenvalue of `n⁻¹XᵀX`.
    pub rho2: f64,
    /// `XⱼᵀXⱼ` per column (the gram diagonal).
    pub column_norms_sq: Vec<f64>,
}

/// A fitted linear model on a (possibly restricted) support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Length-`p`; exactly zero outside `support`.
    pub coefficients: Vec<f64>,
    /// Sorted column indices that were fitted.
    pub support: Vec<usize>,
    /// `y - X·coefficients`.
    pub residuals: Vec<f64>,
    /// Unbiased residual variance `SSE / (n - |support|)`; 0 when the fit is
    /// saturated.
    pub sigma_hat_sq: f64,
    pub target_index: usize,
}

impl Dataset {
    /// Validates shapes and finiteness.
    pub fn new(
        covariates: Matrix,
        responses: Matrix,
        column_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = covariates.rows();
        let p = covariates.cols();
        if n == 0 || p == 0 || responses.cols() == 0 {
            return Err(Error::InvalidData("n, p and d must all be at least 1".into()));
        }
        if responses.rows() != n {
            return Err(Error::DimensionMismatch(alloc::format!(
                "covariates have {n} rows but responses have {}",
                responses.rows()
            )));
        }
        if let Some(names) = &column_names {
            if names.len() != p {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "{} column names for {p} columns",
                    names.len()
                )));
            }
        }
        if covariates.data().iter().chain(responses.data().iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Dataset {
            covariates,
            responses,
            is_centered: false,
            is_standardized: false,
            column_names,
            transform: None,
        })
    }

    pub fn n(&self) -> usize {
        self.covariates.rows()
    }

    pub fn p(&self) -> usize {
        self.covariates.cols()
    }

    pub fn d(&self) -> usize {
        self.responses.cols()
    }

    /// Maps coefficients fitted on this (standardized) dataset back to the
    /// raw covariate scale. Identity when no transform is recorded.
    pub fn unscale_coefficients(&self, coefficients: &[f64]) -> Vec<f64> {
        match &self.transform {
            None => coefficients.to_vec(),
            Some(t) => coefficients
                .iter()
                .zip(&t.x_scale)
                .map(|(c, s)| if *s != 0.0 { c / s } else { *c })
                .collect(),
        }
    }
}

/// Centers responses and covariates and scales each covariate column to
/// mean-square one. Fails on a zero-variance column.
pub fn standardize(raw: &Dataset) -> Result<Dataset> {
    standardize_with(raw, ConstantColumnPolicy::Reject)
}

/// [`standardize`] with an explicit constant-column policy.
pub fn standardize_with(raw: &Dataset, policy: ConstantColumnPolicy) -> Result<Dataset> {
    let n = raw.n();
    let p = raw.p();
    let d = raw.d();
    let nf = n as f64;

    let mut x = raw.covariates.clone();
    let mut x_shift = vec![0.0; p];
    let mut x_scale = vec![1.0; p];
    let mut constant_columns = Vec::new();

    for j in 0..p {
        let mean = (0..n).map(|i| x.get(i, j)).sum::<f64>() / nf;
        let msq = (0..n).map(|i| (x.get(i, j) - mean) * (x.get(i, j) - mean)).sum::<f64>() / nf;
        if msq <= 0.0 {
            match policy {
                ConstantColumnPolicy::Reject => return Err(Error::ConstantColumn(j)),
                ConstantColumnPolicy::Exempt => {
                    constant_columns.push(j);
                    continue;
                }
                ConstantColumnPolicy::CenterToZero => {
                    constant_columns.push(j);
                    for i in 0..n {
                        x.set(i, j, 0.0);
                    }
                    x_shift[j] = mean;
                    continue;
                }
            }
        }
        let scale = libm::sqrt(msq);
        x_shift[j] = mean;
        x_scale[j] = scale;
        for i in 0..n {
            x.set(i, j, (x.get(i, j) - mean) / scale);
        }
    }

    let mut y = raw.responses.clone();
    let mut y_shift = vec![0.0; d];
    for k in 0..d {
        let mean = (0..n).map(|i| y.get(i, k)).sum::<f64>() / nf;
        y_shift[k] = mean;
        for i in 0..n {
            y.set(i, k, y.get(i, k) - mean);
        }
    }

    Ok(Dataset {
        covariates: x,
        responses: y,
        is_centered: true,
        is_standardized: true,
        column_names: raw.column_names.clone(),
        transform: Some(StandardizeTransform { x_shift, x_scale, y_shift, constant_columns }),
    })
}

pub(crate) struct OlsCore {
    pub coefficients: Vec<f64>,
    pub gram_diag: Vec<f64>,
    pub sigma_hat_sq: f64,
}

/// Plain OLS on an explicit matrix/vector pair; used directly by the
/// ensemble replicate loop where building a `Dataset` per replicate would be
/// wasteful.
pub(crate) fn ols_core(x: &Matrix, y: &[f64]) -> Result<OlsCore> {
    let n = x.rows();
    let p = x.cols();
    let gram = x.gram();
    let l = cholesky(&gram, SINGULARITY_REL_TOL)?;
    let xty = x.tr_matvec(y);
    let coefficients = cholesky_solve(&l, &xty);
    let pred = x.matvec(&coefficients);
    let sse: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum();
    let dof = n.saturating_sub(p);
    let sigma_hat_sq = if dof > 0 { sse / dof as f64 } else { 0.0 };
    let gram_diag = (0..p).map(|j| gram.get(j, j)).collect();
    Ok(OlsCore { coefficients, gram_diag, sigma_hat_sq })
}

fn target_column(data: &Dataset, target_index: usize) -> Result<Vec<f64>> {
    if target_index >= data.d() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "target index {target_index} out of range for d = {}",
            data.d()
        )));
    }
    Ok(data.responses.column(target_index))
}

/// Ordinary least squares on all `p` columns.
pub fn fit_ols(data: &Dataset, target_index: usize) -> Result<LinearFit> {
    let y = target_column(data, target_index)?;
    let core = ols_core(&data.covariates, &y)?;
    let pred = data.covariates.matvec(&core.coefficients);
    let residuals: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
    Ok(LinearFit {
        coefficients: core.coefficients,
        support: (0..data.p()).collect(),
        residuals,
        sigma_hat_sq: core.sigma_hat_sq,
        target_index,
    })
}

/// OLS restricted to `support`; coefficients off the support are exactly 0.
pub fn fit_restricted_ols(data: &Dataset, target_index: usize, support: &[usize]) -> Result<LinearFit> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let p = data.p();
    let mut sorted: Vec<usize> = support.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if *sorted.last().expect("nonempty") >= p {
        return Err(Error::DimensionMismatch(alloc::format!(
            "support index {} out of range for p = {p}",
            sorted.last().expect("nonempty")
        )));
    }
    let y = target_column(data, target_index)?;
    let xs = data.covariates.select_cols(&sorted);
    let core = ols_core(&xs, &y)?;
    let mut coefficients = vec![0.0; p];
    for (k, &j) in sorted.iter().enumerate() {
        coefficients[j] = core.coefficients[k];
    }
    let pred = data.covariates.matvec(&coefficients);
    let residuals: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
    let n = data.n();
    let dof = n.saturating_sub(sorted.len());
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma_hat_sq = if dof > 0 { sse / dof as f64 } else { 0.0 };
    Ok(LinearFit { coefficients, support: sorted, residuals, sigma_hat_sq, target_index })
}

/// The all-zero fit (empty support); the conventional result when every
/// index is thresholded away.
pub fn zero_fit(data: &Dataset, target_index: usize) -> Result<LinearFit> {
    let y = target_column(data, target_index)?;
    let n = data.n();
    let sse: f64 = y.iter().map(|v| v * v).sum();
    Ok(LinearFit {
        coefficients: vec![0.0; data.p()],
        support: Vec::new(),
        residuals: y,
        sigma_hat_sq: sse / n as f64,
        target_index,
    })
}

/// Gram matrix, its inverse (when nonsingular), extreme eigenvalues of the
/// normalized gram, and per-column squared norms.
pub fn design_stats(data: &Dataset) -> Result<DesignStats> {
    let n = data.n() as f64;
    let gram = data.covariates.gram();
    let p = gram.rows();
    let mut scaled = gram.clone();
    for i in 0..p {
        for j in 0..p {
            scaled.set(i, j, gram.get(i, j) / n);
        }
    }
    let eig = symmetric_eigenvalues(&scaled)?;
    let rho1 = eig.first().copied().unwrap_or(0.0).max(0.0);
    let rho2 = eig.last().copied().unwrap_or(0.0);
    let gram_inverse = cholesky(&gram, SINGULARITY_REL_TOL).ok().map(|l| cholesky_inverse(&l));
    let column_norms_sq = (0..p).map(|j| gram.get(j, j)).collect();
    Ok(DesignStats { gram, gram_inverse, rho1, rho2, column_norms_sq })
}
