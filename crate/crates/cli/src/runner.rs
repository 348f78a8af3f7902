//! Shared fitting machinery for the experiment runners: per-trial seed
//! derivation, preprocessing, the four estimators behind one interface, and
//! the bagged-LASSO replicate loop (the core crate carries the OLS-threshold
//! one).

use bipstls::ensemble::{
    bip_fit, inclusion_probability, oob_weights, InclusionProfile, ResampleMode, ResamplePlan,
};
use bipstls::estimators::{lasso_fit, stls_fit, SparseFit};
use bipstls::linalg::Matrix;
use bipstls::regression::{
    fit_restricted_ols, standardize_with, zero_fit, ConstantColumnPolicy, Dataset,
};
use bipstls::rng::{mix, sample_with_replacement, sample_without_replacement, standard_normal, stream};
use bipstls::{Error, Result};

use crate::config::{
    resolve_replicates, BlassoConfig, BstlsConfig, EstimatorKind, ExperimentConfig, LassoConfig,
    Preprocess, StlsConfig, ThresholdConfig,
};
use crate::error::{CliError, CliResult};

/// Trial seed: a keyed chain over (seed, experiment, setting, n, trial), so
/// extending any grid never perturbs existing trials.
pub fn trial_seed(seed: u64, experiment_tag: u64, setting_tag: u64, n: usize, trial: usize) -> u64 {
    mix(&[seed, experiment_tag, setting_tag, n as u64, trial as u64])
}

/// Substream for one estimator (and target equation) inside a trial.
pub fn estimator_seed(trial_seed: u64, estimator: EstimatorKind, target: usize) -> u64 {
    mix(&[trial_seed, estimator.tag(), target as u64])
}

pub fn prepare(raw: &Dataset, mode: Preprocess) -> Result<Dataset> {
    match mode {
        Preprocess::None => Ok(raw.clone()),
        Preprocess::Standardize => standardize_with(raw, ConstantColumnPolicy::Reject),
        Preprocess::StandardizeCenterConstant => {
            standardize_with(raw, ConstantColumnPolicy::CenterToZero)
        }
    }
}

/// Everything one estimator produced on one (trial, target).
pub struct FitOut {
    pub fit: SparseFit,
    /// Coefficients mapped back to the raw covariate scale.
    pub raw_coefficients: Vec<f64>,
    pub profile: Option<InclusionProfile>,
    pub excluded: usize,
}

/// A config's estimator settings, resolved once per run.
#[derive(Debug, Clone)]
pub enum ResolvedEstimator {
    Lasso(LassoConfig),
    Stls { cfg: StlsConfig, threshold: ThresholdConfig },
    Blasso(BlassoConfig),
    Bstls { cfg: BstlsConfig, threshold: ThresholdConfig },
}

impl ResolvedEstimator {
    pub fn from_config(config: &ExperimentConfig, kind: EstimatorKind) -> CliResult<Self> {
        let missing = |path: &str| CliError::config(path, "estimator block missing");
        Ok(match kind {
            EstimatorKind::Lasso => {
                ResolvedEstimator::Lasso(config.lasso.ok_or_else(|| missing("lasso"))?)
            }
            EstimatorKind::Stls => ResolvedEstimator::Stls {
                cfg: config.stls.ok_or_else(|| missing("stls"))?,
                threshold: config.threshold.ok_or_else(|| missing("threshold"))?,
            },
            EstimatorKind::Blasso => {
                ResolvedEstimator::Blasso(config.blasso.ok_or_else(|| missing("blasso"))?)
            }
            EstimatorKind::Bstls => ResolvedEstimator::Bstls {
                cfg: config.bstls.ok_or_else(|| missing("bstls"))?,
                threshold: config.threshold.ok_or_else(|| missing("threshold"))?,
            },
        })
    }

    pub fn preprocess(&self) -> Preprocess {
        match self {
            ResolvedEstimator::Lasso(c) => c.preprocess,
            ResolvedEstimator::Stls { cfg, .. } => cfg.preprocess,
            ResolvedEstimator::Blasso(c) => c.preprocess,
            ResolvedEstimator::Bstls { cfg, .. } => cfg.preprocess,
        }
    }

    /// Fits one target of an already-preprocessed dataset. `model_sigma`
    /// feeds the `from_model` threshold sigma; `est_seed` drives all
    /// resampling.
    pub fn fit(
        &self,
        prepared: &Dataset,
        target: usize,
        model_sigma: Option<f64>,
        est_seed: u64,
    ) -> CliResult<FitOut> {
        let n = prepared.n();
        let out = match self {
            ResolvedEstimator::Lasso(c) => {
                let fit = lasso_fit(prepared, target, c.lambda, c.tol, c.max_iter)?;
                FitOut {
                    raw_coefficients: prepared.unscale_coefficients(&fit.fit.coefficients),
                    fit,
                    profile: None,
                    excluded: 0,
                }
            }
            ResolvedEstimator::Stls { cfg, threshold } => {
                let rule = threshold.resolve(model_sigma)?;
                let fit = stls_fit(prepared, target, &rule, cfg.max_passes)?;
                FitOut {
                    raw_coefficients: prepared.unscale_coefficients(&fit.fit.coefficients),
                    fit,
                    profile: None,
                    excluded: 0,
                }
            }
            ResolvedEstimator::Bstls { cfg, threshold } => {
                let rule = threshold.resolve(model_sigma)?;
                let plan = ResamplePlan::subsample(
                    resolve_replicates(cfg.replicates, n),
                    cfg.subsample_fraction,
                    cfg.with_replacement,
                    est_seed,
                );
                let (fit, profile) = bip_fit(prepared, target, &rule, &plan, cfg.p_c, cfg.use_oob)?;
                let excluded = plan.replicates - profile.per_replicate_included.len();
                FitOut {
                    raw_coefficients: prepared.unscale_coefficients(&fit.fit.coefficients),
                    fit,
                    profile: Some(profile),
                    excluded,
                }
            }
            ResolvedEstimator::Blasso(c) => {
                let plan = ResamplePlan::subsample(
                    resolve_replicates(c.replicates, n),
                    c.subsample_fraction,
                    c.with_replacement,
                    est_seed,
                );
                let (fit, profile, excluded) = bagged_lasso_fit(
                    prepared, target, c.lambda, c.tol, c.max_iter, &plan, c.p_c, c.use_oob,
                )?;
                FitOut {
                    raw_coefficients: prepared.unscale_coefficients(&fit.fit.coefficients),
                    fit,
                    profile: Some(profile),
                    excluded,
                }
            }
        };
        Ok(out)
    }
}

/// Ensemble selection with LASSO replicate fits: subsample rows, fit the
/// coordinate-descent LASSO on each replicate, mark nonzero coefficients as
/// included, then aggregate exactly like the OLS-threshold ensemble
/// (optional OOB softmax weights, cut at `p_c`, restricted refit on the full
/// data). Replicates that fail to converge are excluded; more than 20%
/// excluded aborts.
#[allow(clippy::too_many_arguments)]
pub fn bagged_lasso_fit(
    data: &Dataset,
    target_index: usize,
    lambda: f64,
    tol: f64,
    max_iter: usize,
    plan: &ResamplePlan,
    p_c: f64,
    use_oob: bool,
) -> Result<(SparseFit, InclusionProfile, usize)> {
    if !(p_c > 0.0 && p_c < 1.0) {
        return Err(Error::InvalidConfig("p_c must lie in (0,1)".into()));
    }
    let (fraction, with_replacement) = match plan.mode {
        ResampleMode::Subsample { fraction, with_replacement } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::InvalidConfig("subsample fraction must lie in (0,1]".into()));
            }
            (fraction, with_replacement)
        }
        ResampleMode::ResidualBootstrap => {
            return Err(Error::InvalidConfig("subsample plans only".into()))
        }
    };
    if plan.replicates == 0 {
        return Err(Error::InvalidConfig("at least one replicate required".into()));
    }
    let n = data.n();
    let p = data.p();
    let n_b = (fraction * n as f64).ceil() as usize;
    let y = data.responses.column(target_index);

    let b = plan.replicates;
    let mut included = Vec::with_capacity(b);
    let mut oob = Vec::with_capacity(b);
    let mut excluded = 0usize;
    let mut any_empty_oob = false;
    for r in 0..b {
        let mut rng = stream(mix(&[plan.seed, r as u64]));
        let rows = if with_replacement {
            sample_with_replacement(&mut rng, n, n_b)
        } else {
            sample_without_replacement(&mut rng, n, n_b)
        };
        let sub = Dataset {
            covariates: data.covariates.select_rows(&rows),
            responses: data.responses.select_rows(&rows),
            is_centered: data.is_centered,
            is_standardized: data.is_standardized,
            column_names: None,
            transform: None,
        };
        let fit = match lasso_fit(&sub, target_index, lambda, tol, max_iter) {
            Ok(f) => f,
            Err(Error::NoConvergence { .. }) | Err(Error::SingularDesign) => {
                excluded += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        included.push((0..p).map(|j| fit.fit.coefficients[j] != 0.0).collect::<Vec<bool>>());

        let mut in_sample = vec![false; n];
        for &i in &rows {
            in_sample[i] = true;
        }
        let held_out: Vec<usize> = (0..n).filter(|&i| !in_sample[i]).collect();
        if held_out.is_empty() {
            any_empty_oob = true;
        } else {
            let mse = held_out
                .iter()
                .map(|&i| {
                    let pred: f64 = (0..p)
                        .map(|j| data.covariates.get(i, j) * fit.fit.coefficients[j])
                        .sum();
                    (y[i] - pred) * (y[i] - pred)
                })
                .sum::<f64>()
                / held_out.len() as f64;
            oob.push(mse);
        }
    }
    if excluded * 5 > b {
        return Err(Error::AllReplicatesFailed { failed: excluded, total: b });
    }
    if included.is_empty() {
        return Err(Error::AllReplicatesFailed { failed: excluded, total: b });
    }
    let oob_mse = if any_empty_oob || oob.len() != included.len() { None } else { Some(oob) };

    let weights = if use_oob {
        let mse = oob_mse.as_ref().ok_or_else(|| {
            Error::InvalidConfig("OOB weighting requires held-out rows in every replicate".into())
        })?;
        Some(oob_weights(mse))
    } else {
        None
    };
    let mut profile = inclusion_probability(&included, weights.as_deref())?;
    profile.per_replicate_oob_mse = oob_mse;

    let active: Vec<usize> =
        (0..p).filter(|&j| profile.probabilities[j] > p_c).collect();
    let fit = if active.is_empty() {
        zero_fit(data, target_index)?
    } else {
        fit_restricted_ols(data, target_index, &active)?
    };
    let inactive_set: Vec<usize> = (0..p).filter(|j| !fit.support.contains(j)).collect();
    Ok((
        SparseFit { fit, inactive_set, passes_used: 1, rule: None },
        profile,
        excluded,
    ))
}

/// An i.i.d. standard-normal design with the last `q` of `p` coefficients
/// set to one; the generator behind the robustness sweeps.
pub fn generate_iid_sparse(
    n: usize,
    p: usize,
    q: usize,
    sigma: f64,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidData("n and p must be at least 1".into()));
    }
    if q > p {
        return Err(Error::InvalidConfig("q must not exceed p".into()));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidConfig("noise sd must be nonnegative".into()));
    }
    let mut rng = stream(seed);
    let mut x = Matrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x.set(i, j, standard_normal(&mut rng));
        }
    }
    let support: Vec<usize> = (p - q..p).collect();
    let mut y = Matrix::zeros(n, 1);
    for i in 0..n {
        let mut v: f64 = support.iter().map(|&j| x.get(i, j)).sum();
        if sigma > 0.0 {
            v += sigma * standard_normal(&mut rng);
        }
        y.set(i, 0, v);
    }
    let data = Dataset::new(x, y, None)?;
    Ok((data, support))
}

/// Runs independent trial closures in parallel and lifts the first error,
/// keeping results in trial order regardless of scheduling.
pub fn run_trials<T, F>(trials: usize, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> CliResult<T> + Sync + Send,
{
    use rayon::prelude::*;
    let results: Vec<CliResult<T>> = (0..trials).into_par_iter().map(f).collect();
    let mut out = Vec::with_capacity(trials);
    for r in results {
        out.push(r?);
    }
    Ok(out)
}
