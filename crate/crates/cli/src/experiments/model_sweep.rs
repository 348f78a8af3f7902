//! Relative-frequency and FDP/TDP sweep over the synthetic models: for each
//! (model, estimator, n, trial) generate, fit, and score; reduce in that
//! order.

use std::time::Instant;

use bipstls::datagen::{generate, SyntheticSpec};
use bipstls::ensemble::inclusion_gap;
use bipstls::metrics::{empirical_fdp, empirical_tdp, relative_frequency, TrialOutcome};

use crate::config::{EstimatorKind, ExperimentConfig, ExperimentKind, ModelConfig};
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Report, Table};
use crate::runner::{estimator_seed, prepare, run_trials, trial_seed, ResolvedEstimator};

struct EstimatorTrial {
    outcomes: Vec<TrialOutcome>,
    probabilities: Option<Vec<f64>>,
    gap: Option<f64>,
    exact: bool,
    excluded: usize,
}

struct TrialRow {
    per_estimator: Vec<EstimatorTrial>,
}

fn run_one_trial(
    model: &ModelConfig,
    n: usize,
    t_seed: u64,
    estimators: &[(EstimatorKind, ResolvedEstimator)],
) -> CliResult<TrialRow> {
    let kind = model.to_kind()?;
    let spec = SyntheticSpec { model: kind, n, sigma_noise: model.sigma_noise, seed: t_seed };
    let (raw, truth) = generate(&spec)?;
    let d = raw.d();
    let p = raw.p();

    let mut per_estimator = Vec::with_capacity(estimators.len());
    for (ekind, est) in estimators {
        let prepared = prepare(&raw, est.preprocess())?;
        let mut outcomes = Vec::with_capacity(d);
        let mut probabilities: Option<Vec<f64>> = None;
        let mut gap_sum = 0.0;
        let mut has_gap = false;
        let mut exact = true;
        let mut excluded = 0;
        for target in 0..d {
            let seed = estimator_seed(t_seed, *ekind, target);
            let out = est.fit(&prepared, target, Some(model.sigma_noise), seed)?;
            exact &= out.fit.support() == truth.support[target].as_slice();
            excluded += out.excluded;
            if let Some(profile) = &out.profile {
                let acc = probabilities.get_or_insert_with(|| vec![0.0; p]);
                for (a, v) in acc.iter_mut().zip(&profile.probabilities) {
                    *a += v / d as f64;
                }
                gap_sum += inclusion_gap(profile, Some(&truth.support[target]));
                has_gap = true;
            }
            outcomes.push(TrialOutcome::from_sparse_fit(&out.fit, &truth.support[target])?);
        }
        per_estimator.push(EstimatorTrial {
            outcomes,
            probabilities,
            gap: if has_gap { Some(gap_sum / d as f64) } else { None },
            exact,
            excluded,
        });
    }
    Ok(TrialRow { per_estimator })
}

pub fn run(config: &ExperimentConfig) -> CliResult<Report> {
    config.validate()?;
    if config.experiment != ExperimentKind::ModelSweep {
        return Err(CliError::config("experiment", "expected model_sweep"));
    }
    let estimators: Vec<(EstimatorKind, ResolvedEstimator)> = config
        .estimators
        .iter()
        .map(|&k| ResolvedEstimator::from_config(config, k).map(|r| (k, r)))
        .collect::<CliResult<_>>()?;

    let start = Instant::now();
    let mut report = Report::new(config);
    let mut relfreq = Table::new(&["model", "estimator", "n", "index", "value", "n_trials"]);
    let mut set_metrics = Table::new(&["model", "estimator", "n", "metric", "value", "n_trials"]);
    let mut inclusion = Table::new(&["model", "estimator", "n", "index", "value", "n_trials"]);
    let mut excluded_total = 0u64;

    for model in &config.models {
        for &n in &config.n_grid {
            let rows = run_trials(config.trials, |s| {
                let t_seed =
                    trial_seed(config.seed, config.experiment.tag(), model.tag(), n, s);
                run_one_trial(model, n, t_seed, &estimators)
            })?;

            for (ei, (ekind, _)) in estimators.iter().enumerate() {
                let owned: Vec<TrialOutcome> = rows
                    .iter()
                    .flat_map(|r| r.per_estimator[ei].outcomes.iter().cloned())
                    .collect();
                let n_outcomes = owned.len();
                let freq = relative_frequency(&owned)?;
                let efdp = empirical_fdp(&owned)?;
                let etdp = empirical_tdp(&owned)?;
                let exact_rate = rows
                    .iter()
                    .filter(|r| r.per_estimator[ei].exact)
                    .count() as f64
                    / rows.len() as f64;
                let mean_support = owned
                    .iter()
                    .map(|o| o.estimated_support.len() as f64)
                    .sum::<f64>()
                    / n_outcomes as f64;
                let excluded: usize = rows.iter().map(|r| r.per_estimator[ei].excluded).sum();
                excluded_total += excluded as u64;

                let key = |table: &mut Table, metric: &str, value: f64| {
                    table.push(vec![
                        Cell::text(model.name()),
                        Cell::text(ekind.name()),
                        Cell::int(n),
                        Cell::text(metric),
                        Cell::num(value),
                        Cell::int(rows.len()),
                    ]);
                };
                key(&mut set_metrics, "efdp", efdp);
                key(&mut set_metrics, "etdp", etdp);
                key(&mut set_metrics, "exact_support_rate", exact_rate);
                key(&mut set_metrics, "mean_support_size", mean_support);
                key(&mut set_metrics, "excluded_replicates", excluded as f64);

                for (j, &v) in freq.iter().enumerate() {
                    relfreq.push(vec![
                        Cell::text(model.name()),
                        Cell::text(ekind.name()),
                        Cell::int(n),
                        Cell::int(j),
                        Cell::num(v),
                        Cell::int(n_outcomes),
                    ]);
                }

                if rows.iter().all(|r| r.per_estimator[ei].probabilities.is_some()) {
                    let p = freq.len();
                    let mut mean_probs = vec![0.0; p];
                    let mut mean_gap = 0.0;
                    for r in &rows {
                        let probs = r.per_estimator[ei].probabilities.as_ref().unwrap();
                        for (m, v) in mean_probs.iter_mut().zip(probs) {
                            *m += v / rows.len() as f64;
                        }
                        mean_gap += r.per_estimator[ei].gap.unwrap_or(0.0) / rows.len() as f64;
                    }
                    for (j, &v) in mean_probs.iter().enumerate() {
                        inclusion.push(vec![
                            Cell::text(model.name()),
                            Cell::text(ekind.name()),
                            Cell::int(n),
                            Cell::int(j),
                            Cell::num(v),
                            Cell::int(rows.len()),
                        ]);
                    }
                    key(&mut set_metrics, "mean_inclusion_gap", mean_gap);
                }
            }
        }
    }

    report.insert_table("relative_frequency", relfreq);
    report.insert_table("set_metrics", set_metrics);
    if !inclusion.rows.is_empty() {
        report.insert_table("inclusion_mean", inclusion);
    }
    report.excluded_replicates = excluded_total;
    report.runtime.total_seconds = start.elapsed().as_secs_f64();
    report.runtime.sections.insert("trials_seconds".into(), start.elapsed().as_secs_f64());
    report.finalize();
    Ok(report)
}
