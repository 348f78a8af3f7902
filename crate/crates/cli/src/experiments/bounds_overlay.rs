//! Empirical selection error rates side by side with the closed-form
//! certificates, plus the regularity conditions those certificates assume.

use std::time::Instant;

use bipstls::bounds::{
    bip_fdp_bound, bip_tdp_bound_large, bip_tdp_bound_small, bip_tdp_bound_small_with_p,
    check_conditions, gap_bound, stls_bounds, Bound, BoundInputs,
};
use bipstls::datagen::{generate, SyntheticSpec};
use bipstls::metrics::{empirical_fdp, empirical_tdp, TrialOutcome};

use crate::config::{EstimatorKind, ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Report, Table};
use crate::runner::{estimator_seed, prepare, run_trials, trial_seed, ResolvedEstimator};

struct TrialRow {
    /// Outcomes per estimator, one per target.
    outcomes: Vec<Vec<TrialOutcome>>,
    excluded: Vec<usize>,
}

pub fn run(config: &ExperimentConfig) -> CliResult<Report> {
    config.validate()?;
    if config.experiment != ExperimentKind::BoundsOverlay {
        return Err(CliError::config("experiment", "expected bounds_overlay"));
    }
    let model = &config.models[0];
    let kind = model.to_kind()?;
    let bounds = config.bounds.unwrap_or_default();
    let threshold = config.threshold.as_ref().ok_or_else(|| {
        CliError::config("threshold", "bounds_overlay requires a threshold block")
    })?;
    let bstls = config.bstls.as_ref().expect("validated");
    let estimators: Vec<(EstimatorKind, ResolvedEstimator)> = config
        .estimators
        .iter()
        .map(|&k| ResolvedEstimator::from_config(config, k).map(|e| (k, e)))
        .collect::<CliResult<_>>()?;

    let start = Instant::now();
    let mut report = Report::new(config);
    report.notes.push(
        "The separation certificate (gap_probability) stays vacuous until n reaches \
         the tens of thousands at these eps values; at experiment scale the vacuity \
         flag is the informative output, and the empirical inclusion gap is reported \
         alongside it."
            .to_string(),
    );
    let mut empirical = Table::new(&["n", "estimator", "metric", "value", "n_trials"]);
    let mut theory = Table::new(&["n", "metric", "value", "vacuous"]);
    let mut conditions = Table::new(&["n", "name", "value", "threshold", "satisfied"]);
    let mut excluded_total = 0u64;

    for &n in &config.n_grid {
        let rows = run_trials(config.trials, |s| -> CliResult<TrialRow> {
            let t_seed = trial_seed(config.seed, config.experiment.tag(), model.tag(), n, s);
            let spec =
                SyntheticSpec { model: kind, n, sigma_noise: model.sigma_noise, seed: t_seed };
            let (raw, truth) = generate(&spec)?;
            let mut outcomes = Vec::with_capacity(estimators.len());
            let mut excluded = Vec::with_capacity(estimators.len());
            for (ek, est) in &estimators {
                let prepared = prepare(&raw, est.preprocess())?;
                let mut per_target = Vec::with_capacity(raw.d());
                let mut ex = 0usize;
                for target in 0..raw.d() {
                    let seed = estimator_seed(t_seed, *ek, target);
                    let out = est.fit(&prepared, target, Some(model.sigma_noise), seed)?;
                    per_target
                        .push(TrialOutcome::from_sparse_fit(&out.fit, &truth.support[target])?);
                    ex += out.excluded;
                }
                outcomes.push(per_target);
                excluded.push(ex);
            }
            Ok(TrialRow { outcomes, excluded })
        })?;

        for (ei, (ek, _)) in estimators.iter().enumerate() {
            let pooled: Vec<TrialOutcome> = rows
                .iter()
                .flat_map(|r| r.outcomes[ei].iter().cloned())
                .collect();
            let ex: usize = rows.iter().map(|r| r.excluded[ei]).sum();
            excluded_total += ex as u64;
            let exact_rate = pooled
                .iter()
                .filter(|o| o.estimated_support == o.true_support)
                .count() as f64
                / pooled.len() as f64;
            let metrics = [
                ("efdp", empirical_fdp(&pooled)?),
                ("etdp", empirical_tdp(&pooled)?),
                ("exact_support_rate", exact_rate),
                ("excluded_replicates", ex as f64),
            ];
            for (name, value) in metrics {
                empirical.push(vec![
                    Cell::int(n),
                    Cell::text(ek.name()),
                    Cell::text(name),
                    Cell::num(value),
                    Cell::int(pooled.len()),
                ]);
            }
        }

        // The certificates depend only on the deterministic design geometry,
        // so a single draw of the truth metadata per n suffices.
        let spec = SyntheticSpec {
            model: kind,
            n,
            sigma_noise: model.sigma_noise,
            seed: trial_seed(config.seed, config.experiment.tag(), model.tag(), n, 0),
        };
        let (raw, truth) = generate(&spec)?;
        let support = &truth.support[0];
        let beta_min = support
            .iter()
            .map(|&j| truth.beta.get(j, 0).abs())
            .fold(f64::INFINITY, f64::min);
        let inp = BoundInputs {
            n,
            p: raw.p(),
            q: support.len(),
            p_c: bstls.p_c,
            eps: bounds.eps,
            sigma: model.sigma_noise,
            rho1: bounds.rho1,
            rho2: bounds.rho2,
            beta_min,
            gamma: threshold.gamma_equivalent(n),
            r0: bounds.r0,
            threshold_multiplier: threshold.multiplier,
        };
        inp.validate()?;
        let (stls_fdp, stls_tdp) = stls_bounds(&inp);
        let mut named: Vec<(&str, Bound)> = vec![
            ("bip_fdp", bip_fdp_bound(&inp)),
            ("bip_tdp_large", bip_tdp_bound_large(&inp)),
            ("bip_tdp_small", bip_tdp_bound_small(&inp)),
            ("gap_probability", gap_bound(&inp)),
            ("stls_fdp", stls_fdp),
            ("stls_tdp", stls_tdp),
        ];
        if let Some(pf) = bounds.tdp_small_p {
            named.insert(3, ("bip_tdp_small_p", bip_tdp_bound_small_with_p(&inp, pf)));
        }
        for (name, b) in named {
            theory.push(vec![
                Cell::int(n),
                Cell::text(name),
                Cell::num(b.value),
                Cell::Bool(b.vacuous),
            ]);
        }
        for c in check_conditions(&inp, None) {
            conditions.push(vec![
                Cell::int(n),
                Cell::text(c.name),
                Cell::num(c.value),
                c.threshold.map(Cell::num).unwrap_or(Cell::Null),
                c.satisfied.map(Cell::Bool).unwrap_or(Cell::Null),
            ]);
        }
    }

    report.insert_table("bounds_empirical", empirical);
    report.insert_table("bounds_theory", theory);
    report.insert_table("conditions", conditions);
    report.excluded_replicates = excluded_total;
    report.runtime.total_seconds = start.elapsed().as_secs_f64();
    report.runtime.sections.insert("trials_seconds".into(), start.elapsed().as_secs_f64());
    report.finalize();
    Ok(report)
}
