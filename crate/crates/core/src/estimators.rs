//! Single-shot sparse estimators: sequential thresholding least squares and
//! coordinate-descent LASSO, with the two interchangeable per-index
//! threshold rules (Gaussian-tail and gamma-scaled, equivalent under
//! `gamma = 2·ln(1/delta)`).

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::regression::{fit_ols, fit_restricted_ols, zero_fit, Dataset, DesignStats, LinearFit};
use crate::{Error, Result};

/// How the tail probability of a Gaussian-tail threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeltaSpec {
    Fixed(f64),
    /// `delta = 1/n` with `n` the sample count the thresholds are computed
    /// from (for ensemble replicates, the replicate sample size).
    InverseSampleSize,
}

/// Noise scale used inside a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SigmaSpec {
    Known(f64),
    /// Plug in the current fit's residual estimate `sqrt(sigma_hat_sq)`.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdKind {
    /// `t_j = sigma · sqrt(2·ln(1/delta) / (XⱼᵀXⱼ))`.
    GaussianTail { delta: DeltaSpec },
    /// `t_j = sigma · sqrt(gamma / (XⱼᵀXⱼ))`.
    GammaScaled { gamma: f64 },
}

/// Per-index coefficient threshold; `multiplier` rescales every `t_j` and
/// defaults to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub kind: ThresholdKind,
    pub sigma: SigmaSpec,
    pub multiplier: f64,
}

impl ThresholdRule {
    pub fn gaussian_tail(delta: f64, sigma: f64) -> Self {
        ThresholdRule {
            kind: ThresholdKind::GaussianTail { delta: DeltaSpec::Fixed(delta) },
            sigma: SigmaSpec::Known(sigma),
            multiplier: 1.0,
        }
    }

    pub fn gamma_scaled(gamma: f64, sigma: f64) -> Self {
        ThresholdRule {
            kind: ThresholdKind::GammaScaled { gamma },
            sigma: SigmaSpec::Known(sigma),
            multiplier: 1.0,
        }
    }

    pub fn with_estimated_sigma(mut self) -> Self {
        self.sigma = SigmaSpec::Estimated;
        self
    }

    pub fn with_multiplier(mut self, multiplier: f64) -> Self {
        self.multiplier = multiplier;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ThresholdKind::GaussianTail { delta: DeltaSpec::Fixed(d) } => {
                if !(d > 0.0 && d < 1.0) {
                    return Err(Error::InvalidConfig("delta must lie in (0,1)".into()));
                }
            }
            ThresholdKind::GaussianTail { delta: DeltaSpec::InverseSampleSize } => {}
            ThresholdKind::GammaScaled { gamma } => {
                if !(gamma > 0.0) {
                    return Err(Error::InvalidConfig("gamma must be positive".into()));
                }
            }
        }
        if let SigmaSpec::Known(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::InvalidConfig("sigma must be positive".into()));
            }
        }
        if !(self.multiplier > 0.0) {
            return Err(Error::InvalidConfig("threshold multiplier must be positive".into()));
        }
        Ok(())
    }

    /// Per-index thresholds for a design with the given column squared norms
    /// and sample count. `sigma_hat_sq` feeds `SigmaSpec::Estimated`. A
    /// zero-norm column gets an infinite threshold (it can never survive).
    pub fn thresholds(&self, column_norms_sq: &[f64], n_rows: usize, sigma_hat_sq: f64) -> Vec<f64> {
        let sigma = match self.sigma {
            SigmaSpec::Known(s) => s,
            SigmaSpec::Estimated => libm::sqrt(sigma_hat_sq.max(0.0)),
        };
        let scale = match self.kind {
            ThresholdKind::GaussianTail { delta } => {
                let d = match delta {
                    DeltaSpec::Fixed(v) => v,
                    DeltaSpec::InverseSampleSize => 1.0 / n_rows as f64,
                };
                2.0 * libm::log(1.0 / d)
            }
            ThresholdKind::GammaScaled { gamma } => gamma,
        };
        column_norms_sq
            .iter()
            .map(|&nj| {
                if nj > 0.0 {
                    self.multiplier * sigma * libm::sqrt(scale / nj)
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }
}

/// Result of a sparse fit: the restricted least-squares fit, the thresholded
/// (inactive) index set, and how many thresholding passes ran. `rule` is
/// `None` for estimators without a threshold rule (LASSO).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFit {
    pub fit: LinearFit,
    pub inactive_set: Vec<usize>,
    pub passes_used: usize,
    pub rule: Option<ThresholdRule>,
}

impl SparseFit {
    /// Active support (sorted).
    pub fn support(&self) -> &[usize] {
        &self.fit.support
    }
}

fn complement(sorted_support: &[usize], p: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(p - sorted_support.len());
    let mut it = sorted_support.iter().peekable();
    for j in 0..p {
        if it.peek() == Some(&&j) {
            it.next();
        } else {
            out.push(j);
        }
    }
    out
}

/// Indices whose coefficients fall at or below their thresholds (ties are
/// thresholded out), i.e. the inactive set.
pub fn threshold_support(fit: &LinearFit, rule: &ThresholdRule, stats: &DesignStats) -> Vec<usize> {
    let n = fit.residuals.len();
    let t = rule.thresholds(&stats.column_norms_sq, n, fit.sigma_hat_sq);
    (0..fit.coefficients.len())
        .filter(|&j| libm::fabs(fit.coefficients[j]) <= t[j])
        .collect()
}

/// Sequential thresholding least squares: OLS, threshold, then up to
/// `max_passes - 1` rounds of restricted refit + threshold (each pass
/// recomputes thresholds from the surviving fit), finishing with a
/// restricted refit on the final survivors. Stops early once the support is
/// stable; returns the zero fit if everything is thresholded away.
pub fn stls_fit(
    data: &Dataset,
    target_index: usize,
    rule: &ThresholdRule,
    max_passes: usize,
) -> Result<SparseFit> {
    rule.validate()?;
    if max_passes == 0 {
        return Err(Error::InvalidConfig("max_passes must be at least 1".into()));
    }
    let n = data.n();
    let p = data.p();
    let norms: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| data.covariates.get(i, j)).map(|v| v * v).sum())
        .collect();

    let mut fit = fit_ols(data, target_index)?;
    let mut working: Vec<usize> = (0..p).collect();
    let mut passes_used = 0;
    for _ in 0..max_passes {
        passes_used += 1;
        let t = rule.thresholds(&norms, n, fit.sigma_hat_sq);
        let survivors: Vec<usize> = working
            .iter()
            .copied()
            .filter(|&j| libm::fabs(fit.coefficients[j]) > t[j])
            .collect();
        if survivors.is_empty() {
            return Ok(SparseFit {
                fit: zero_fit(data, target_index)?,
                inactive_set: (0..p).collect(),
                passes_used,
                rule: Some(*rule),
            });
        }
        if survivors == working {
            break;
        }
        working = survivors;
        fit = fit_restricted_ols(data, target_index, &working)?;
    }
    let inactive_set = complement(&working, p);
    Ok(SparseFit { fit, inactive_set, passes_used, rule: Some(*rule) })
}

fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// The penalized objective `(1/(2n))·‖y − Xb‖² + lambda·‖b‖₁`.
pub fn lasso_objective(data: &Dataset, target_index: usize, b: &[f64], lambda: f64) -> f64 {
    let y = data.responses.column(target_index);
    let pred = data.covariates.matvec(b);
    let sse: f64 = y.iter().zip(&pred).map(|(a, p)| (a - p) * (a - p)).sum();
    let l1: f64 = b.iter().map(|v| libm::fabs(*v)).sum();
    sse / (2.0 * data.n() as f64) + lambda * l1
}

/// Cyclic coordinate-descent LASSO for the objective
/// `(1/(2n))·‖y − Xb‖² + lambda·‖b‖₁`. Converges when the largest
/// coefficient change in a sweep drops below `tol`. Zero-norm columns are
/// skipped and keep coefficient exactly 0.
pub fn lasso_fit(
    data: &Dataset,
    target_index: usize,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SparseFit> {
    if lambda < 0.0 {
        return Err(Error::InvalidConfig("lambda must be nonnegative".into()));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidConfig("tol must be positive and max_iter at least 1".into()));
    }
    let n = data.n();
    let p = data.p();
    let nf = n as f64;
    let y = data.responses.column(target_index);
    if target_index >= data.d() {
        return Err(Error::DimensionMismatch("target index out of range".into()));
    }
    // Column-major copy for the repeated column sweeps.
    let cols: Vec<Vec<f64>> = (0..p).map(|j| data.covariates.column(j)).collect();
    let cj: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();

    let mut b = vec![0.0; p];
    let mut r = y.clone();
    let mut converged = false;
    let mut sweeps = 0;
    let mut last_delta = f64::INFINITY;
    while sweeps < max_iter {
        sweeps += 1;
        let mut max_delta = 0.0f64;
        for j in 0..p {
            if cj[j] == 0.0 {
                continue;
            }
            let xj = &cols[j];
            let mut dot = 0.0;
            for i in 0..n {
                dot += xj[i] * r[i];
            }
            let rho = dot / nf + cj[j] * b[j];
            let b_new = soft_threshold(rho, lambda) / cj[j];
            let delta = b_new - b[j];
            if delta != 0.0 {
                for i in 0..n {
                    r[i] -= delta * xj[i];
                }
                b[j] = b_new;
            }
            max_delta = max_delta.max(libm::fabs(delta));
        }
        last_delta = max_delta;
        if max_delta < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: sweeps, last_delta });
    }

    let support: Vec<usize> = (0..p).filter(|&j| b[j] != 0.0).collect();
    let inactive_set = complement(&support, p);
    let sse: f64 = r.iter().map(|v| v * v).sum();
    let dof = n.saturating_sub(support.len());
    let sigma_hat_sq = if dof > 0 { sse / dof as f64 } else { 0.0 };
    Ok(SparseFit {
        fit: LinearFit {
            coefficients: b,
            support,
            residuals: r,
            sigma_hat_sq,
            target_index,
        },
        inactive_set,
        passes_used: sweeps,
        rule: None,
    })
}
