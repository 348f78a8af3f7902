//! Spike-and-slab Gibbs sampler for the Gaussian linear model. This is the
//! Bayesian reference the ensemble selector is compared against, not a
//! general-purpose MCMC engine: one chain, systematic scan, block update of
//! the coefficient vector.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky, cholesky_solve, Matrix};
use crate::regression::Dataset;
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    KnownSigma(f64),
    /// Conjugate inverse-gamma prior on the noise variance.
    InverseGamma { shape: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeSlabConfig {
    /// Slab standard deviation `c`.
    pub slab_sd: f64,
    /// Spike standard deviation, strictly below `slab_sd`.
    pub spike_sd: f64,
    /// Prior inclusion probability; 1.0 forces every index into the slab,
    /// which reduces the model to ridge regression.
    pub prior_inclusion: f64,
    pub noise: NoiseModel,
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in draw.
    pub thin: usize,
    pub seed: u64,
}

impl Default for SpikeSlabConfig {
    fn default() -> Self {
        SpikeSlabConfig {
            slab_sd: 10.0,
            spike_sd: 0.01,
            prior_inclusion: 0.5,
            noise: NoiseModel::InverseGamma { shape: 1.0, scale: 1.0 },
            iterations: 3000,
            burn_in: 1000,
            thin: 1,
            seed: 0,
        }
    }
}

impl SpikeSlabConfig {
    pub fn validate(&self) -> Result<()> {
        use Error::InvalidConfig;
        if !(self.slab_sd > 0.0 && self.spike_sd > 0.0) {
            return Err(InvalidConfig("spike and slab sds must be positive".into()));
        }
        if self.spike_sd >= self.slab_sd {
            return Err(InvalidConfig("spike sd must be below slab sd".into()));
        }
        if !(self.prior_inclusion > 0.0 && self.prior_inclusion <= 1.0) {
            return Err(InvalidConfig("prior inclusion must lie in (0,1]".into()));
        }
        match self.noise {
            NoiseModel::KnownSigma(s) if !(s > 0.0) => {
                return Err(InvalidConfig("known sigma must be positive".into()))
            }
            NoiseModel::InverseGamma { shape, scale } if !(shape > 0.0 && scale > 0.0) => {
                return Err(InvalidConfig("inverse-gamma parameters must be positive".into()))
            }
            _ => {}
        }
        if self.burn_in >= self.iterations {
            return Err(InvalidConfig("burn-in must be below the iteration count".into()));
        }
        if self.thin == 0 {
            return Err(InvalidConfig("thinning stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Post-burn-in, thinned draws. `S = (iterations - burn_in) / thin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    /// `S x p`.
    pub beta_samples: Matrix,
    pub lambda_samples: Vec<Vec<bool>>,
    /// Constant when the noise variance is known.
    pub sigma_sq_samples: Vec<f64>,
    /// Column means of `lambda_samples`.
    pub inclusion_posterior: Vec<f64>,
}

/// Systematic-scan Gibbs for the hierarchical model
/// `beta_j | lambda_j ~ lambda_j·N(0,c²) + (1-lambda_j)·N(0,eps²)`,
/// `lambda_j ~ Bernoulli(pi)`, Gaussian likelihood. Per iteration: one block
/// draw of the full coefficient vector (a p×p solve), per-index
/// log-space Bernoulli updates of the slab indicators, then the conjugate
/// noise-variance draw when the noise model is inverse-gamma.
pub fn gibbs_sample(
    data: &Dataset,
    target_index: usize,
    config: &SpikeSlabConfig,
) -> Result<PosteriorSamples> {
    config.validate()?;
    let n = data.n();
    let p = data.p();
    if n < 2 {
        return Err(Error::InvalidData("at least two rows required".into()));
    }
    if target_index >= data.d() {
        return Err(Error::DimensionMismatch("target index out of range".into()));
    }
    let x = &data.covariates;
    let y = data.responses.column(target_index);
    let gram = x.gram();
    let xty = x.tr_matvec(&y);

    let c_sq = config.slab_sd * config.slab_sd;
    let eps_sq = config.spike_sd * config.spike_sd;
    let pi = config.prior_inclusion;
    let forced_slab = pi >= 1.0;
    // ln(pi/(1-pi)) + ln(eps/c); the beta-dependent part is added per index.
    let log_odds_base = if forced_slab {
        f64::INFINITY
    } else {
        libm::log(pi / (1.0 - pi)) + libm::log(config.spike_sd / config.slab_sd)
    };
    let precision_gap = 1.0 / eps_sq - 1.0 / c_sq;

    let mut rng = stream(config.seed);
    let mut beta = vec![0.0; p];
    let mut lambda = vec![true; p];
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let y_var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64;
    let mut sigma_sq = match config.noise {
        NoiseModel::KnownSigma(s) => s * s,
        NoiseModel::InverseGamma { .. } => y_var.max(1e-12),
    };

    let kept = (config.iterations - config.burn_in) / config.thin;
    let mut beta_samples = Matrix::zeros(kept, p);
    let mut lambda_samples = Vec::with_capacity(kept);
    let mut sigma_sq_samples = Vec::with_capacity(kept);
    let mut inclusion_sums = vec![0.0; p];

    let mut a = Matrix::zeros(p, p);
    let mut z = vec![0.0; p];
    let mut kept_so_far = 0usize;
    for iter in 1..=config.iterations {
        // beta | lambda, sigma_sq: N(A⁻¹ Xᵀy/σ², A⁻¹).
        for i in 0..p {
            for j in 0..p {
                a.set(i, j, gram.get(i, j) / sigma_sq);
            }
            let prior_var = if lambda[i] { c_sq } else { eps_sq };
            a.set(i, i, a.get(i, i) + 1.0 / prior_var);
        }
        let l = cholesky(&a, 0.0).map_err(|_| {
            Error::NumericalBreakdown("posterior precision factorization failed".into())
        })?;
        let b: Vec<f64> = xty.iter().map(|v| v / sigma_sq).collect();
        let mean = cholesky_solve(&l, &b);
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        // Solve Lᵀ w = z so that w ~ N(0, A⁻¹).
        for i in (0..p).rev() {
            let mut s = z[i];
            for k in i + 1..p {
                s -= l.get(k, i) * beta[k];
            }
            beta[i] = s / l.get(i, i);
        }
        for i in 0..p {
            beta[i] += mean[i];
        }

        // lambda_j | beta_j, log-space Bernoulli odds.
        if forced_slab {
            lambda.iter_mut().for_each(|v| *v = true);
        } else {
            for j in 0..p {
                let lo = log_odds_base + 0.5 * beta[j] * beta[j] * precision_gap;
                let prob = if lo >= 0.0 {
                    1.0 / (1.0 + libm::exp(-lo))
                } else {
                    let e = libm::exp(lo);
                    e / (1.0 + e)
                };
                lambda[j] = rng.gen::<f64>() < prob;
            }
        }

        // sigma_sq | beta from the conjugate inverse-gamma update.
        if let NoiseModel::InverseGamma { shape, scale } = config.noise {
            let pred = x.matvec(&beta);
            let sse: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum();
            let g_shape = shape + n as f64 / 2.0;
            let g = Gamma::new(g_shape, 1.0)
                .map_err(|_| Error::InvalidConfig("bad inverse-gamma update shape".into()))?
                .sample(&mut rng);
            sigma_sq = (scale + sse / 2.0) / g;
        }

        if iter > config.burn_in && (iter - config.burn_in) % config.thin == 0 && kept_so_far < kept
        {
            for j in 0..p {
                beta_samples.set(kept_so_far, j, beta[j]);
                if lambda[j] {
                    inclusion_sums[j] += 1.0;
                }
            }
            lambda_samples.push(lambda.clone());
            sigma_sq_samples.push(sigma_sq);
            kept_so_far += 1;
        }
    }

    let s = kept.max(1) as f64;
    let inclusion_posterior = inclusion_sums.iter().map(|v| v / s).collect();
    Ok(PosteriorSamples { beta_samples, lambda_samples, sigma_sq_samples, inclusion_posterior })
}

/// Dominant-term operation counts for one MCMC pipeline versus one ensemble
/// pipeline on the same instance: `n²p` per sampler iteration against `np²`
/// per replicate. Wall time is a presentation concern layered on top by
/// callers that can measure it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub mcmc_ops: f64,
    pub ensemble_ops: f64,
    /// `mcmc_ops / ensemble_ops`; infinite when the ensemble count is zero.
    pub ratio: f64,
}

pub fn complexity_report(n: usize, p: usize, b: usize, iterations: usize) -> ComplexityReport {
    let (n, p, b, iters) = (n as f64, p as f64, b as f64, iterations as f64);
    let mcmc_ops = n * n * p * iters;
    let ensemble_ops = n * p * p * b;
    ComplexityReport { mcmc_ops, ensemble_ops, ratio: mcmc_ops / ensemble_ops }
}
