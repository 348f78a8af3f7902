//! Subsample/bootstrap replicate engine, bagging inclusion-probability
//! selection with optional out-of-bag reweighting, and residual-bootstrap
//! uncertainty quantification on a fixed support.
//!
//! Replicate `r` of a plan draws from the ChaCha12 stream seeded by
//! `mix([plan.seed, r])`, so replicates are order-independent and any single
//! replicate can be reproduced in isolation.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimators::{SparseFit, ThresholdRule};
use crate::linalg::{cholesky, cholesky_solve, Matrix};
use crate::metrics::quantile;
use crate::regression::{fit_restricted_ols, ols_core, zero_fit, Dataset, SINGULARITY_REL_TOL};
use crate::rng::{mix, sample_with_replacement, sample_without_replacement, stream};
use crate::{Error, Result};

/// Resampling scheme for an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResampleMode {
    /// Draw `ceil(fraction·n)` rows per replicate.
    Subsample { fraction: f64, with_replacement: bool },
    /// Residual bootstrap; only meaningful for [`residual_bootstrap_uq`].
    ResidualBootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub replicates: usize,
    pub mode: ResampleMode,
    pub seed: u64,
}

impl ResamplePlan {
    pub fn subsample(replicates: usize, fraction: f64, with_replacement: bool, seed: u64) -> Self {
        ResamplePlan {
            replicates,
            mode: ResampleMode::Subsample { fraction, with_replacement },
            seed,
        }
    }
}

/// Per-index inclusion probabilities aggregated over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionProfile {
    /// `probabilities[j] = Σ_b weights[b]·included[b][j]`.
    pub probabilities: Vec<f64>,
    /// Normalized replicate weights (uniform unless OOB-weighted).
    pub weights: Vec<f64>,
    pub per_replicate_included: Vec<Vec<bool>>,
    /// Held-out mean squared prediction errors; present only when the run
    /// produced them.
    pub per_replicate_oob_mse: Option<Vec<f64>>,
}

/// Raw per-replicate results from [`run_replicates`]. Replicates whose OLS
/// failed are listed in `excluded` and carry no rows here.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRuns {
    pub included: Vec<Vec<bool>>,
    pub coefficients: Vec<Vec<f64>>,
    pub oob_mse: Option<Vec<f64>>,
    pub excluded: Vec<usize>,
    pub total: usize,
}

/// Per-replicate coefficient samples on a fixed support plus the pooled
/// bootstrap summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDistribution {
    pub support: Vec<usize>,
    /// `B x p`; columns off the support are identically zero.
    pub coefficient_samples: Matrix,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `(level, per-index quantile)` pairs at 0.05, 0.5 and 0.95.
    pub quantiles: Vec<(f64, Vec<f64>)>,
    /// Pooled mean of the resampled residuals over all replicates and draws.
    pub mu_star: f64,
    /// Pooled variance of the resampled residuals (second moment minus
    /// squared mean).
    pub sigma_star_sq: f64,
    /// `sigma_star_sq · aᵀ(X_JᵀX_J)⁻¹a` for the supplied contrast, if any.
    pub s_hat: Option<f64>,
    pub replicate_count: usize,
    pub excluded_replicates: usize,
}

fn subsample_params(data: &Dataset, plan: &ResamplePlan) -> Result<(f64, bool)> {
    match plan.mode {
        ResampleMode::Subsample { fraction, with_replacement } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::InvalidConfig("subsample fraction must lie in (0,1]".into()));
            }
            if plan.replicates == 0 {
                return Err(Error::InvalidConfig("at least one replicate required".into()));
            }
            let n_b = libm::ceil(fraction * data.n() as f64) as usize;
            if n_b == 0 {
                return Err(Error::InvalidConfig("empty replicate sample".into()));
            }
            Ok((fraction, with_replacement))
        }
        ResampleMode::ResidualBootstrap => Err(Error::InvalidConfig(
            "residual-bootstrap plans drive residual_bootstrap_uq, not run_replicates".into(),
        )),
    }
}

/// Runs the replicate loop of the bagging selection algorithm: per replicate
/// draw rows, fit OLS on the sample, recompute per-index thresholds from the
/// sampled columns, and record which indices survive. When rows are held
/// out, their mean squared prediction error is recorded for OOB weighting.
/// Singular replicates are excluded (never silently); more than 20% excluded
/// aborts.
pub fn run_replicates(
    data: &Dataset,
    target_index: usize,
    rule: &ThresholdRule,
    plan: &ResamplePlan,
) -> Result<ReplicateRuns> {
    rule.validate()?;
    let (fraction, with_replacement) = subsample_params(data, plan)?;
    let n = data.n();
    let p = data.p();
    let n_b = libm::ceil(fraction * n as f64) as usize;
    let y = data.responses.column(target_index);
    if target_index >= data.d() {
        return Err(Error::DimensionMismatch("target index out of range".into()));
    }

    let b = plan.replicates;
    let mut included = Vec::with_capacity(b);
    let mut coefficients = Vec::with_capacity(b);
    let mut oob = Vec::with_capacity(b);
    let mut any_empty_oob = false;
    let mut excluded = Vec::new();

    let mut in_sample = vec![false; n];
    for r in 0..b {
        let mut rng = stream(mix(&[plan.seed, r as u64]));
        let rows = if with_replacement {
            sample_with_replacement(&mut rng, n, n_b)
        } else {
            sample_without_replacement(&mut rng, n, n_b)
        };
        let xb = data.covariates.select_rows(&rows);
        let yb: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let core = match ols_core(&xb, &yb) {
            Ok(c) => c,
            Err(_) => {
                excluded.push(r);
                continue;
            }
        };
        let t = rule.thresholds(&core.gram_diag, n_b, core.sigma_hat_sq);
        let inc: Vec<bool> = (0..p)
            .map(|j| libm::fabs(core.coefficients[j]) > t[j])
            .collect();

        in_sample.iter_mut().for_each(|v| *v = false);
        for &i in &rows {
            in_sample[i] = true;
        }
        let mut err_sq = 0.0;
        let mut held_out = 0usize;
        for i in 0..n {
            if !in_sample[i] {
                let pred: f64 = data
                    .covariates
                    .row(i)
                    .iter()
                    .zip(&core.coefficients)
                    .map(|(x, c)| x * c)
                    .sum();
                err_sq += (y[i] - pred) * (y[i] - pred);
                held_out += 1;
            }
        }
        if held_out > 0 {
            oob.push(err_sq / held_out as f64);
        } else {
            any_empty_oob = true;
        }

        included.push(inc);
        coefficients.push(core.coefficients);
    }

    if excluded.len() * 5 > b {
        return Err(Error::AllReplicatesFailed { failed: excluded.len(), total: b });
    }
    let oob_mse = if any_empty_oob || oob.len() != included.len() { None } else { Some(oob) };
    Ok(ReplicateRuns { included, coefficients, oob_mse, excluded, total: b })
}

/// Softmax of the negated MSEs, shifted by the minimum before
/// exponentiation (value-invariant, overflow-safe). Sums to one.
pub fn oob_weights(oob_mse: &[f64]) -> Vec<f64> {
    if oob_mse.is_empty() {
        return Vec::new();
    }
    let min = oob_mse.iter().copied().fold(f64::INFINITY, f64::min);
    let exps: Vec<f64> = oob_mse.iter().map(|&m| libm::exp(-(m - min))).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Aggregates replicate include vectors into inclusion probabilities.
/// Weights default to uniform; when given they are normalized to sum to one.
pub fn inclusion_probability(
    included: &[Vec<bool>],
    weights: Option<&[f64]>,
) -> Result<InclusionProfile> {
    let b = included.len();
    if b == 0 {
        return Err(Error::EmptySamples);
    }
    let p = included[0].len();
    if included.iter().any(|row| row.len() != p) {
        return Err(Error::DimensionMismatch("ragged include matrix".into()));
    }
    let weights: Vec<f64> = match weights {
        None => vec![1.0 / b as f64; b],
        Some(w) => {
            if w.len() != b {
                return Err(Error::DimensionMismatch("one weight per replicate required".into()));
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidConfig("weights must be finite and nonnegative".into()));
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidConfig("weights must not all be zero".into()));
            }
            w.iter().map(|v| v / total).collect()
        }
    };
    let mut probabilities = vec![0.0; p];
    for (row, &w) in included.iter().zip(&weights) {
        for j in 0..p {
            if row[j] {
                probabilities[j] += w;
            }
        }
    }
    for v in &mut probabilities {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(InclusionProfile {
        probabilities,
        weights,
        per_replicate_included: included.to_vec(),
        per_replicate_oob_mse: None,
    })
}

/// Active set `{ j : probabilities[j] > p_c }` (strict: a probability equal
/// to the cut is inactive).
pub fn select_support(profile: &InclusionProfile, p_c: f64) -> Vec<usize> {
    (0..profile.probabilities.len())
        .filter(|&j| profile.probabilities[j] > p_c)
        .collect()
}

/// Inclusion-probability gap. With the truth given: smallest probability
/// over true actives minus largest over true nulls (empty sides default to
/// 1 and 0 respectively). Without it: the largest gap between consecutive
/// sorted probabilities.
pub fn inclusion_gap(profile: &InclusionProfile, true_support: Option<&[usize]>) -> f64 {
    let probs = &profile.probabilities;
    match true_support {
        Some(actives) => {
            let mut min_active = 1.0f64;
            let mut max_null = 0.0f64;
            for (j, &pj) in probs.iter().enumerate() {
                if actives.contains(&j) {
                    min_active = min_active.min(pj);
                } else {
                    max_null = max_null.max(pj);
                }
            }
            min_active - max_null
        }
        None => {
            let mut sorted = probs.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).expect("probabilities are finite"));
            sorted.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
        }
    }
}

/// End-to-end bagging inclusion-probability fit: replicate runs, optional
/// OOB weighting, support selection at `p_c`, then a restricted OLS refit on
/// the full dataset (the zero fit when nothing is selected).
pub fn bip_fit(
    data: &Dataset,
    target_index: usize,
    rule: &ThresholdRule,
    plan: &ResamplePlan,
    p_c: f64,
    use_oob: bool,
) -> Result<(SparseFit, InclusionProfile)> {
    if !(p_c > 0.0 && p_c < 1.0) {
        return Err(Error::InvalidConfig("p_c must lie in (0,1)".into()));
    }
    let runs = run_replicates(data, target_index, rule, plan)?;
    if runs.included.is_empty() {
        return Err(Error::AllReplicatesFailed { failed: runs.excluded.len(), total: runs.total });
    }
    let weights = if use_oob {
        let mse = runs.oob_mse.as_ref().ok_or_else(|| {
            Error::InvalidConfig("OOB weighting requires held-out rows in every replicate".into())
        })?;
        Some(oob_weights(mse))
    } else {
        None
    };
    let mut profile = inclusion_probability(&runs.included, weights.as_deref())?;
    profile.per_replicate_oob_mse = runs.oob_mse.clone();

    let active = select_support(&profile, p_c);
    let p = data.p();
    let fit = if active.is_empty() {
        zero_fit(data, target_index)?
    } else {
        fit_restricted_ols(data, target_index, &active)?
    };
    let inactive_set: Vec<usize> = (0..p).filter(|j| !fit.support.contains(j)).collect();
    Ok((
        SparseFit { fit, inactive_set, passes_used: 1, rule: Some(*rule) },
        profile,
    ))
}

fn column_stats(samples: &Matrix) -> (Vec<f64>, Vec<f64>, Vec<(f64, Vec<f64>)>) {
    let b = samples.rows();
    let p = samples.cols();
    let bf = b as f64;
    let mut mean = vec![0.0; p];
    let mut std = vec![0.0; p];
    let levels = [0.05, 0.5, 0.95];
    let mut quantiles: Vec<(f64, Vec<f64>)> =
        levels.iter().map(|&l| (l, vec![0.0; p])).collect();
    let mut col = vec![0.0; b];
    for j in 0..p {
        for i in 0..b {
            col[i] = samples.get(i, j);
        }
        let m = col.iter().sum::<f64>() / bf;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / bf;
        mean[j] = m;
        std[j] = libm::sqrt(var);
        col.sort_by(|a, b| a.partial_cmp(b).expect("samples are finite"));
        for (k, &l) in levels.iter().enumerate() {
            quantiles[k].1[j] = quantile(&col, l);
        }
    }
    (mean, std, quantiles)
}

/// Residual-bootstrap uncertainty quantification on a fixed support: fit
/// restricted OLS, resample its residuals with replacement to synthesize
/// responses, refit per replicate, and summarize. `mu_star`/`sigma_star_sq`
/// pool every resampled residual across all replicates. With a contrast `a`,
/// `s_hat = sigma_star_sq · a_Jᵀ(X_JᵀX_J)⁻¹a_J`.
pub fn residual_bootstrap_uq(
    data: &Dataset,
    target_index: usize,
    support: &[usize],
    b_uq: usize,
    seed: u64,
    contrast: Option<&[f64]>,
) -> Result<EnsembleDistribution> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if b_uq == 0 {
        return Err(Error::InvalidConfig("at least one bootstrap replicate required".into()));
    }
    let n = data.n();
    let p = data.p();
    let base = fit_restricted_ols(data, target_index, support)?;
    let support = base.support.clone();
    let y = data.responses.column(target_index);
    let fitted: Vec<f64> = y.iter().zip(&base.residuals).map(|(yi, r)| yi - r).collect();

    // The restricted design is fixed across replicates; factor once.
    let xs = data.covariates.select_cols(&support);
    let gram = xs.gram();
    let l = cholesky(&gram, SINGULARITY_REL_TOL)?;

    let mut samples = Matrix::zeros(b_uq, p);
    let mut sum_e = 0.0;
    let mut sum_e_sq = 0.0;
    let mut y_star = vec![0.0; n];
    for r in 0..b_uq {
        let mut rng = stream(mix(&[seed, r as u64]));
        for i in 0..n {
            let e = base.residuals[rng.gen_range(0..n)];
            sum_e += e;
            sum_e_sq += e * e;
            y_star[i] = fitted[i] + e;
        }
        let xty = xs.tr_matvec(&y_star);
        let beta_s = cholesky_solve(&l, &xty);
        for (idx, &j) in support.iter().enumerate() {
            samples.set(r, j, beta_s[idx]);
        }
    }
    let m = (b_uq * n) as f64;
    let mu_star = sum_e / m;
    let sigma_star_sq = sum_e_sq / m - mu_star * mu_star;

    let s_hat = match contrast {
        None => None,
        Some(a) => {
            if a.len() != p {
                return Err(Error::DimensionMismatch("contrast must have length p".into()));
            }
            let a_s: Vec<f64> = support.iter().map(|&j| a[j]).collect();
            let v = cholesky_solve(&l, &a_s);
            let quad: f64 = a_s.iter().zip(&v).map(|(ai, vi)| ai * vi).sum();
            Some(sigma_star_sq * quad)
        }
    };

    let (mean, std, quantiles) = column_stats(&samples);
    Ok(EnsembleDistribution {
        support,
        coefficient_samples: samples,
        mean,
        std,
        quantiles,
        mu_star,
        sigma_star_sq,
        s_hat,
        replicate_count: b_uq,
        excluded_replicates: 0,
    })
}
