pub mod bayes_compare;
pub mod bounds_overlay;
pub mod lv;
pub mod model_sweep;
pub mod robustness;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliResult;
use crate::report::Report;

/// Dispatches on the config's experiment kind.
pub fn run(config: &ExperimentConfig) -> CliResult<Report> {
    match config.experiment {
        ExperimentKind::ModelSweep => model_sweep::run(config),
        ExperimentKind::RobustnessSweep => robustness::run(config),
        ExperimentKind::LotkaVolterra => lv::run(config),
        ExperimentKind::BoundsOverlay => bounds_overlay::run(config),
        ExperimentKind::BayesCompare => bayes_compare::run(config),
    }
}
