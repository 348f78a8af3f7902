//! Experiment configuration: a TOML file that round-trips losslessly and is
//! echoed verbatim into every report, so any knob that influenced a run is
//! part of the report's content hash.

use std::path::Path;

use bipstls::datagen::ModelKind;
use bipstls::estimators::{DeltaSpec, SigmaSpec, ThresholdKind, ThresholdRule};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ModelSweep,
    RobustnessSweep,
    LotkaVolterra,
    BoundsOverlay,
    BayesCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ModelSweep => "model_sweep",
            ExperimentKind::RobustnessSweep => "robustness_sweep",
            ExperimentKind::LotkaVolterra => "lotka_volterra",
            ExperimentKind::BoundsOverlay => "bounds_overlay",
            ExperimentKind::BayesCompare => "bayes_compare",
        }
    }

    /// Seed-derivation tag; stable forever.
    pub fn tag(self) -> u64 {
        match self {
            ExperimentKind::ModelSweep => 1,
            ExperimentKind::RobustnessSweep => 2,
            ExperimentKind::LotkaVolterra => 3,
            ExperimentKind::BoundsOverlay => 4,
            ExperimentKind::BayesCompare => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Lasso,
    Stls,
    Blasso,
    Bstls,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Lasso => "lasso",
            EstimatorKind::Stls => "stls",
            EstimatorKind::Blasso => "blasso",
            EstimatorKind::Bstls => "bstls",
        }
    }

    pub fn tag(self) -> u64 {
        match self {
            EstimatorKind::Lasso => 11,
            EstimatorKind::Stls => 12,
            EstimatorKind::Blasso => 13,
            EstimatorKind::Bstls => 14,
        }
    }
}

/// Per-estimator preprocessing of the raw dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    /// Fit on the raw data.
    None,
    /// Center responses/covariates and scale covariates to mean-square one;
    /// a constant column is an error.
    Standardize,
    /// Like `standardize`, but a constant column is centered to all-zero
    /// (it can then never be selected).
    StandardizeCenterConstant,
}

fn default_preprocess() -> Preprocess {
    Preprocess::None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Model1,
    Model2,
    Model3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelName,
    /// Toeplitz correlation; model2 only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub sigma_noise: f64,
}

impl ModelConfig {
    pub fn to_kind(&self) -> CliResult<ModelKind> {
        match (self.kind, self.r) {
            (ModelName::Model1, None) => Ok(ModelKind::Model1),
            (ModelName::Model2, Some(r)) => Ok(ModelKind::Model2 { r }),
            (ModelName::Model3, None) => Ok(ModelKind::Model3),
            (ModelName::Model2, None) => {
                Err(CliError::config("models.r", "model2 requires the correlation r"))
            }
            _ => Err(CliError::config("models.r", "r is only meaningful for model2")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelName::Model1 => "model1",
            ModelName::Model2 => "model2",
            ModelName::Model3 => "model3",
        }
    }

    pub fn tag(&self) -> u64 {
        match self.kind {
            ModelName::Model1 => 1,
            ModelName::Model2 => 2,
            ModelName::Model3 => 3,
        }
    }
}

/// Noise scale fed into the threshold rule: a number pins it, `"estimated"`
/// plugs in the current fit's residual scale, `"from_model"` copies the
/// generating model's noise sd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSetting {
    Value(f64),
    Mode(SigmaMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    Estimated,
    FromModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSetting {
    Value(f64),
    Mode(DeltaMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    InverseSampleSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    GammaScaled,
    GaussianTail,
}

fn one() -> f64 {
    1.0
}

/// The threshold rule shared by stls and bstls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub rule: RuleName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSetting>,
    pub sigma: SigmaSetting,
    #[serde(default = "one")]
    pub multiplier: f64,
}

impl ThresholdConfig {
    /// Materializes the rule; `model_sigma` backs the `from_model` mode.
    pub fn resolve(&self, model_sigma: Option<f64>) -> CliResult<ThresholdRule> {
        let kind = match self.rule {
            RuleName::GammaScaled => {
                let gamma = self.gamma.ok_or_else(|| {
                    CliError::config("threshold.gamma", "required by the gamma_scaled rule")
                })?;
                ThresholdKind::GammaScaled { gamma }
            }
            RuleName::GaussianTail => {
                let delta = self.delta.ok_or_else(|| {
                    CliError::config("threshold.delta", "required by the gaussian_tail rule")
                })?;
                ThresholdKind::GaussianTail {
                    delta: match delta {
                        DeltaSetting::Value(v) => DeltaSpec::Fixed(v),
                        DeltaSetting::Mode(DeltaMode::InverseSampleSize) => {
                            DeltaSpec::InverseSampleSize
                        }
                    },
                }
            }
        };
        let sigma = match self.sigma {
            SigmaSetting::Value(v) => SigmaSpec::Known(v),
            SigmaSetting::Mode(SigmaMode::Estimated) => SigmaSpec::Estimated,
            SigmaSetting::Mode(SigmaMode::FromModel) => match model_sigma {
                Some(s) => SigmaSpec::Known(s),
                None => {
                    return Err(CliError::config(
                        "threshold.sigma",
                        "from_model needs a generating model with a noise sd",
                    ))
                }
            },
        };
        let rule = ThresholdRule { kind, sigma, multiplier: self.multiplier };
        rule.validate().map_err(|e| CliError::config("threshold", e))?;
        Ok(rule)
    }

    /// Threshold scale as a plain gamma value (for the bound evaluators).
    pub fn gamma_equivalent(&self, n: usize) -> f64 {
        match (self.rule, self.gamma, self.delta) {
            (RuleName::GammaScaled, Some(g), _) => g,
            (RuleName::GaussianTail, _, Some(DeltaSetting::Value(d))) => 2.0 * (1.0 / d).ln(),
            (RuleName::GaussianTail, _, Some(DeltaSetting::Mode(_))) => 2.0 * (n as f64).ln(),
            _ => f64::NAN,
        }
    }
}

fn default_tol() -> f64 {
    1e-7
}

fn default_max_iter() -> usize {
    50_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoConfig {
    pub lambda: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_preprocess")]
    pub preprocess: Preprocess,
}

fn default_max_passes() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StlsConfig {
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
    #[serde(default = "default_preprocess")]
    pub preprocess: Preprocess,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BstlsConfig {
    /// Inclusion-probability cut.
    pub p_c: f64,
    pub subsample_fraction: f64,
    /// Replicate count; defaults to `max(n, 100)` at run time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub with_replacement: bool,
    #[serde(default = "default_true")]
    pub use_oob: bool,
    #[serde(default = "default_preprocess")]
    pub preprocess: Preprocess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlassoConfig {
    pub lambda: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub p_c: f64,
    pub subsample_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub with_replacement: bool,
    #[serde(default = "default_true")]
    pub use_oob: bool,
    #[serde(default = "default_preprocess")]
    pub preprocess: Preprocess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessAxis {
    Sigma,
    Q,
}

fn default_sigma_grid() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}

fn default_q_grid() -> Vec<usize> {
    vec![1, 5, 10, 15]
}

fn default_fixed_sigma() -> f64 {
    0.5
}

fn default_fixed_q() -> usize {
    15
}

fn default_p() -> usize {
    30
}

/// One-axis sweep around the i.i.d. design: vary the noise sd at a fixed
/// active count, or vary the active count at a fixed noise sd. Active
/// indices are always the last `q` of `p`, all with coefficient one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    pub axis: RobustnessAxis,
    #[serde(default = "default_sigma_grid")]
    pub sigma_grid: Vec<f64>,
    #[serde(default = "default_q_grid")]
    pub q_grid: Vec<usize>,
    #[serde(default = "default_fixed_sigma")]
    pub fixed_sigma: f64,
    #[serde(default = "default_fixed_q")]
    pub fixed_q: usize,
    #[serde(default = "default_p")]
    pub p: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingName {
    Grid,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeName {
    FiniteDifference,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSetting {
    Known(f64),
    InverseGamma { shape: f64, scale: f64 },
}

fn default_noise() -> NoiseSetting {
    NoiseSetting::InverseGamma { shape: 1.0, scale: 1.0 }
}

fn default_iterations() -> usize {
    3000
}

fn default_burn_in() -> usize {
    1000
}

fn default_thin() -> usize {
    1
}

fn default_slab_sd() -> f64 {
    10.0
}

fn default_spike_sd() -> f64 {
    0.01
}

fn default_prior_inclusion() -> f64 {
    0.5
}

/// Spike-and-slab sampler settings (seeds are derived per trial, not here).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default = "default_slab_sd")]
    pub slab_sd: f64,
    #[serde(default = "default_spike_sd")]
    pub spike_sd: f64,
    #[serde(default = "default_prior_inclusion")]
    pub prior_inclusion: f64,
    #[serde(default = "default_noise")]
    pub noise: NoiseSetting,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            iterations: default_iterations(),
            burn_in: default_burn_in(),
            thin: default_thin(),
            slab_sd: default_slab_sd(),
            spike_sd: default_spike_sd(),
            prior_inclusion: default_prior_inclusion(),
            noise: default_noise(),
        }
    }
}

impl GibbsConfig {
    pub fn to_core(&self, seed: u64) -> bipstls::bayes::SpikeSlabConfig {
        bipstls::bayes::SpikeSlabConfig {
            slab_sd: self.slab_sd,
            spike_sd: self.spike_sd,
            prior_inclusion: self.prior_inclusion,
            noise: match self.noise {
                NoiseSetting::Known(s) => bipstls::bayes::NoiseModel::KnownSigma(s),
                NoiseSetting::InverseGamma { shape, scale } => {
                    bipstls::bayes::NoiseModel::InverseGamma { shape, scale }
                }
            },
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed,
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    -0.1
}

fn default_gamma_lv() -> f64 {
    -1.5
}

fn default_delta_lv() -> f64 {
    0.075
}

fn default_x0() -> [f64; 2] {
    [10.0, 5.0]
}

fn default_t_span() -> [f64; 2] {
    [0.0, 24.0]
}

fn default_sampling() -> SamplingName {
    SamplingName::Grid
}

fn default_noise_sd() -> f64 {
    0.005
}

fn default_max_degree() -> usize {
    2
}

fn default_derivatives() -> DerivativeName {
    DerivativeName::FiniteDifference
}

fn default_b_uq() -> usize {
    2000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma_lv")]
    pub gamma: f64,
    #[serde(default = "default_delta_lv")]
    pub delta: f64,
    #[serde(default = "default_x0")]
    pub x0: [f64; 2],
    #[serde(default = "default_t_span")]
    pub t_span: [f64; 2],
    #[serde(default = "default_sampling")]
    pub sampling: SamplingName,
    /// Multiplicative lognormal measurement noise sd.
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    #[serde(default = "default_derivatives")]
    pub derivatives: DerivativeName,
    /// Residual-bootstrap replicate count for the coefficient distributions.
    #[serde(default = "default_b_uq")]
    pub b_uq: usize,
    #[serde(default = "default_true")]
    pub run_gibbs: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gibbs: Option<GibbsConfig>,
}

impl Default for LvConfig {
    fn default() -> Self {
        LvConfig {
            alpha: default_alpha(),
            beta: default_beta(),
            gamma: default_gamma_lv(),
            delta: default_delta_lv(),
            x0: default_x0(),
            t_span: default_t_span(),
            sampling: default_sampling(),
            noise_sd: default_noise_sd(),
            max_degree: default_max_degree(),
            derivatives: default_derivatives(),
            b_uq: default_b_uq(),
            run_gibbs: true,
            gibbs: None,
        }
    }
}

fn default_eps() -> f64 {
    0.2
}

fn default_rho() -> f64 {
    1.0
}

fn default_r0() -> f64 {
    0.5
}

/// Inputs the closed-form bound evaluators need beyond what the experiment
/// already pins (n, p, q, p_c, sigma, gamma all come from the run itself).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_rho")]
    pub rho1: f64,
    #[serde(default = "default_rho")]
    pub rho2: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Alternative reading of the small-sample exponent's `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tdp_small_p: Option<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            eps: default_eps(),
            rho1: default_rho(),
            rho2: default_rho(),
            r0: default_r0(),
            tdp_small_p: None,
        }
    }
}

fn default_bayes_b_uq() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesCompareConfig {
    #[serde(default = "default_bayes_b_uq")]
    pub b_uq: usize,
}

impl Default for BayesCompareConfig {
    fn default() -> Self {
        BayesCompareConfig { b_uq: default_bayes_b_uq() }
    }
}

fn default_trials() -> usize {
    200
}

/// The whole experiment description. Everything that can influence a result
/// lives here; runtime-only knobs (thread count) deliberately do not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub estimators: Vec<EstimatorKind>,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    pub output_dir: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lasso: Option<LassoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stls: Option<StlsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blasso: Option<BlassoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bstls: Option<BstlsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lv: Option<LvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes: Option<BayesCompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gibbs: Option<GibbsConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Drops trial and replicate counts to desk scale.
    pub fn apply_desk(&mut self) {
        self.trials = self.trials.min(50);
        if let Some(b) = &mut self.bstls {
            b.replicates = Some(100);
        }
        if let Some(b) = &mut self.blasso {
            b.replicates = Some(100);
        }
    }

    fn require_block<T>(block: &Option<T>, path: &str) -> CliResult<()> {
        if block.is_none() {
            return Err(CliError::config(path, "block required by the named estimators"));
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n_grid.is_empty() {
            return Err(CliError::config("n_grid", "must not be empty"));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(CliError::config("n_grid", "entries must be at least 2"));
        }
        if self.trials == 0 {
            return Err(CliError::config("trials", "must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(CliError::config("estimators", "must not be empty"));
        }
        let mut seen = Vec::new();
        for e in &self.estimators {
            if seen.contains(e) {
                return Err(CliError::config("estimators", format!("{} listed twice", e.name())));
            }
            seen.push(*e);
        }

        let needs_threshold = self.estimators.iter().any(|e| {
            matches!(e, EstimatorKind::Stls | EstimatorKind::Bstls)
        });
        for e in &self.estimators {
            match e {
                EstimatorKind::Lasso => Self::require_block(&self.lasso, "lasso")?,
                EstimatorKind::Stls => Self::require_block(&self.stls, "stls")?,
                EstimatorKind::Blasso => Self::require_block(&self.blasso, "blasso")?,
                EstimatorKind::Bstls => Self::require_block(&self.bstls, "bstls")?,
            }
        }
        if needs_threshold && self.threshold.is_none() {
            return Err(CliError::config("threshold", "required by stls/bstls"));
        }

        if let Some(t) = &self.threshold {
            match t.rule {
                RuleName::GammaScaled => {
                    match t.gamma {
                        None => {
                            return Err(CliError::config("threshold.gamma", "required by gamma_scaled"))
                        }
                        Some(g) if !(g > 0.0) => {
                            return Err(CliError::config("threshold.gamma", "must be positive"))
                        }
                        _ => {}
                    }
                }
                RuleName::GaussianTail => match t.delta {
                    None => {
                        return Err(CliError::config("threshold.delta", "required by gaussian_tail"))
                    }
                    Some(DeltaSetting::Value(d)) if !(d > 0.0 && d < 1.0) => {
                        return Err(CliError::config("threshold.delta", "must lie in (0,1)"))
                    }
                    _ => {}
                },
            }
            if let SigmaSetting::Value(s) = t.sigma {
                if !(s > 0.0) {
                    return Err(CliError::config("threshold.sigma", "must be positive"));
                }
            }
            if !(t.multiplier > 0.0) {
                return Err(CliError::config("threshold.multiplier", "must be positive"));
            }
        }

        if let Some(l) = &self.lasso {
            validate_lasso_params("lasso", l.lambda, l.tol, l.max_iter)?;
        }
        if let Some(s) = &self.stls {
            if s.max_passes == 0 {
                return Err(CliError::config("stls.max_passes", "must be at least 1"));
            }
        }
        if let Some(b) = &self.bstls {
            validate_bagging("bstls", b.p_c, b.subsample_fraction, b.replicates)?;
        }
        if let Some(b) = &self.blasso {
            validate_lasso_params("blasso", b.lambda, b.tol, b.max_iter)?;
            validate_bagging("blasso", b.p_c, b.subsample_fraction, b.replicates)?;
        }

        for m in &self.models {
            if m.sigma_noise < 0.0 {
                return Err(CliError::config("models.sigma_noise", "must be nonnegative"));
            }
            m.to_kind()?;
        }

        match self.experiment {
            ExperimentKind::ModelSweep => {
                if self.models.is_empty() {
                    return Err(CliError::config("models", "model_sweep needs at least one model"));
                }
            }
            ExperimentKind::RobustnessSweep => {
                let r = self.robustness.as_ref().ok_or_else(|| {
                    CliError::config("robustness", "block required by robustness_sweep")
                })?;
                if r.sigma_grid.is_empty() || r.q_grid.is_empty() {
                    return Err(CliError::config("robustness", "sweep grids must not be empty"));
                }
                if r.sigma_grid.iter().any(|&s| s < 0.0) || r.fixed_sigma < 0.0 {
                    return Err(CliError::config("robustness", "noise sds must be nonnegative"));
                }
                let max_q = r.q_grid.iter().copied().max().unwrap_or(0).max(r.fixed_q);
                if max_q > r.p {
                    return Err(CliError::config("robustness", "active count q exceeds p"));
                }
            }
            ExperimentKind::LotkaVolterra => {
                let lv = self.lv.unwrap_or_default();
                if !(lv.t_span[1] > lv.t_span[0]) {
                    return Err(CliError::config("lv.t_span", "must have positive length"));
                }
                if lv.noise_sd < 0.0 {
                    return Err(CliError::config("lv.noise_sd", "must be nonnegative"));
                }
                if lv.max_degree == 0 {
                    return Err(CliError::config("lv.max_degree", "must be at least 1"));
                }
                if lv.b_uq == 0 {
                    return Err(CliError::config("lv.b_uq", "must be at least 1"));
                }
                if !self.estimators.contains(&EstimatorKind::Bstls) {
                    return Err(CliError::config("estimators", "lotka_volterra runs bstls"));
                }
                if lv.run_gibbs {
                    let g = lv.gibbs.unwrap_or_default();
                    g.to_core(0).validate().map_err(|e| CliError::config("lv.gibbs", e))?;
                }
            }
            ExperimentKind::BoundsOverlay => {
                if self.models.is_empty() {
                    return Err(CliError::config("models", "bounds_overlay needs a model"));
                }
                if !self.estimators.contains(&EstimatorKind::Bstls) {
                    return Err(CliError::config("estimators", "bounds_overlay needs bstls"));
                }
                let b = self.bounds.unwrap_or_default();
                if !(b.eps > 0.0 && b.eps < 0.5) {
                    return Err(CliError::config("bounds.eps", "must lie in (0,0.5)"));
                }
                if b.rho1 > b.rho2 {
                    return Err(CliError::config("bounds.rho1", "must not exceed rho2"));
                }
                if !(b.r0 > 0.0) {
                    return Err(CliError::config("bounds.r0", "must be positive"));
                }
            }
            ExperimentKind::BayesCompare => {
                if self.models.is_empty() {
                    return Err(CliError::config("models", "bayes_compare needs a model"));
                }
                if !self.estimators.contains(&EstimatorKind::Bstls) {
                    return Err(CliError::config("estimators", "bayes_compare needs bstls"));
                }
                let g = self.gibbs.unwrap_or_default();
                g.to_core(0).validate().map_err(|e| CliError::config("gibbs", e))?;
                if let Some(b) = &self.bayes {
                    if b.b_uq == 0 {
                        return Err(CliError::config("bayes.b_uq", "must be at least 1"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn validate_lasso_params(path: &str, lambda: f64, tol: f64, max_iter: usize) -> CliResult<()> {
    if lambda < 0.0 {
        return Err(CliError::config(&format!("{path}.lambda"), "must be nonnegative"));
    }
    if !(tol > 0.0) {
        return Err(CliError::config(&format!("{path}.tol"), "must be positive"));
    }
    if max_iter == 0 {
        return Err(CliError::config(&format!("{path}.max_iter"), "must be at least 1"));
    }
    Ok(())
}

fn validate_bagging(path: &str, p_c: f64, fraction: f64, replicates: Option<usize>) -> CliResult<()> {
    if !(p_c > 0.0 && p_c < 1.0) {
        return Err(CliError::config(&format!("{path}.p_c"), "must lie in (0,1)"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CliError::config(&format!("{path}.subsample_fraction"), "must lie in (0,1]"));
    }
    if replicates == Some(0) {
        return Err(CliError::config(&format!("{path}.replicates"), "must be at least 1"));
    }
    Ok(())
}

/// Replicate count rule: explicit wins, otherwise `max(n, 100)`.
pub fn resolve_replicates(explicit: Option<usize>, n: usize) -> usize {
    explicit.unwrap_or_else(|| n.max(100))
}
