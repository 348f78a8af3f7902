//! Two-species system discovery: simulate, corrupt, normalize, expand the
//! polynomial library, select with the bagging estimator, quantify
//! coefficient uncertainty by residual bootstrap, and (optionally) compare
//! against the spike-and-slab posterior coefficient by coefficient.

use std::time::Instant;

use bipstls::bayes::gibbs_sample;
use bipstls::datagen::{
    add_lognormal_noise, build_discovery_dataset, simulate_lotka_volterra, DerivativeSource,
    LvParams, SamplingMode,
};
use bipstls::ensemble::residual_bootstrap_uq;
use bipstls::metrics::wasserstein2_1d;
use bipstls::rng::mix;

use crate::config::{
    DerivativeName, EstimatorKind, ExperimentConfig, ExperimentKind, SamplingName,
};
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Report, Table};
use crate::runner::{estimator_seed, prepare, run_trials, trial_seed, ResolvedEstimator};

struct TargetResult {
    support: Vec<usize>,
    exact: bool,
    excluded: usize,
    /// Per-index (mean, std, q05, q50, q95); present when the support was
    /// nonempty.
    summary: Option<Vec<[f64; 5]>>,
    w2: Option<Vec<f64>>,
    gibbs_inclusion: Option<Vec<f64>>,
    truth_values: Vec<f64>,
}

struct TrialResult {
    per_target: Vec<TargetResult>,
    names: Vec<String>,
}

fn truth_indices(names: &[String], target: usize) -> Option<[usize; 2]> {
    let linear = if target == 0 { "z1" } else { "z2" };
    let lin = names.iter().position(|n| n == linear)?;
    let cross = names.iter().position(|n| n == "z1*z2")?;
    Some([lin, cross])
}

pub fn run(config: &ExperimentConfig) -> CliResult<Report> {
    config.validate()?;
    if config.experiment != ExperimentKind::LotkaVolterra {
        return Err(CliError::config("experiment", "expected lotka_volterra"));
    }
    let lv = config.lv.unwrap_or_default();
    let est = ResolvedEstimator::from_config(config, EstimatorKind::Bstls)?;
    let gibbs_cfg = lv.gibbs.unwrap_or_default();
    let params = LvParams { alpha: lv.alpha, beta: lv.beta, gamma: lv.gamma, delta: lv.delta };
    let sampling = match lv.sampling {
        SamplingName::Grid => SamplingMode::UniformGrid,
        SamplingName::Random => SamplingMode::UniformRandom,
    };
    let source = match lv.derivatives {
        DerivativeName::FiniteDifference => DerivativeSource::FiniteDifference,
        DerivativeName::Exact => DerivativeSource::Exact,
    };

    let start = Instant::now();
    let mut report = Report::new(config);
    let mut support_table = Table::new(&["n", "trial", "target", "set"]);
    let mut coef_table =
        Table::new(&["n", "target", "index", "name", "mean", "std", "q05", "q50", "q95", "n_trials"]);
    let mut truth_table = Table::new(&["n", "target", "index", "value", "n_trials"]);
    let mut w2_table = Table::new(&["n", "target", "index", "value", "n_trials"]);
    let mut gibbs_table = Table::new(&["n", "target", "index", "value", "n_trials"]);
    let mut metrics_table = Table::new(&["n", "target", "metric", "value", "n_trials"]);
    let mut excluded_total = 0u64;

    for &n in &config.n_grid {
        let rows = run_trials(config.trials, |s| -> CliResult<TrialResult> {
            let t_seed = trial_seed(config.seed, config.experiment.tag(), 0, n, s);
            let clean = simulate_lotka_volterra(
                &params,
                lv.x0,
                lv.t_span,
                n,
                sampling,
                mix(&[t_seed, 1]),
            )?;
            let noisy = add_lognormal_noise(&clean, lv.noise_sd, mix(&[t_seed, 2]))?;
            let (data, scales) = build_discovery_dataset(&noisy, lv.max_degree, source)?;
            let data = prepare(&data, est.preprocess())?;
            let names = data.column_names.clone().unwrap_or_default();
            let p = data.p();

            let mut per_target = Vec::with_capacity(data.d());
            for target in 0..data.d() {
                let seed = estimator_seed(t_seed, EstimatorKind::Bstls, target);
                let out = est.fit(&data, target, None, seed)?;
                let support = out.fit.support().to_vec();
                let truth = truth_indices(&names, target);
                let exact = truth.map(|t| support == t.to_vec()).unwrap_or(false);

                // Normalized-scale true coefficients: linear term keeps its
                // rate, the cross term picks up the other species' scale.
                let mut truth_values = vec![0.0; p];
                if let Some([lin, cross]) = truth {
                    if target == 0 {
                        truth_values[lin] = params.alpha;
                        truth_values[cross] = params.beta * scales[1];
                    } else {
                        truth_values[lin] = params.gamma;
                        truth_values[cross] = params.delta * scales[0];
                    }
                }

                let mut summary = None;
                let mut w2 = None;
                let mut gibbs_inclusion = None;
                if !support.is_empty() {
                    let uq = residual_bootstrap_uq(
                        &data,
                        target,
                        &support,
                        lv.b_uq,
                        mix(&[t_seed, 4, target as u64]),
                        None,
                    )?;
                    let q05 = &uq.quantiles[0].1;
                    let q50 = &uq.quantiles[1].1;
                    let q95 = &uq.quantiles[2].1;
                    summary = Some(
                        (0..p)
                            .map(|j| [uq.mean[j], uq.std[j], q05[j], q50[j], q95[j]])
                            .collect::<Vec<_>>(),
                    );
                    if lv.run_gibbs {
                        let g = gibbs_sample(
                            &data,
                            target,
                            &gibbs_cfg.to_core(mix(&[t_seed, 5, target as u64])),
                        )?;
                        let draws = g.beta_samples.rows();
                        let mut per_index = Vec::with_capacity(p);
                        for j in 0..p {
                            let ens = uq.coefficient_samples.column(j);
                            let post: Vec<f64> =
                                (0..draws).map(|i| g.beta_samples.get(i, j)).collect();
                            per_index.push(wasserstein2_1d(&ens, &post)?);
                        }
                        w2 = Some(per_index);
                        gibbs_inclusion = Some(g.inclusion_posterior);
                    }
                }
                per_target.push(TargetResult {
                    support,
                    exact,
                    excluded: out.excluded,
                    summary,
                    w2,
                    gibbs_inclusion,
                    truth_values,
                });
            }
            Ok(TrialResult { per_target, names })
        })?;

        let names = rows.first().map(|r| r.names.clone()).unwrap_or_default();
        let p = names.len();
        let d = rows.first().map(|r| r.per_target.len()).unwrap_or(0);
        for (ri, row) in rows.iter().enumerate() {
            for (target, t) in row.per_target.iter().enumerate() {
                let set = format!(
                    "{{{}}}",
                    t.support.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",")
                );
                support_table.push(vec![
                    Cell::int(n),
                    Cell::int(ri),
                    Cell::int(target),
                    Cell::Text(set),
                ]);
            }
        }

        for target in 0..d {
            let results: Vec<&TargetResult> =
                rows.iter().map(|r| &r.per_target[target]).collect();
            let exact_rate =
                results.iter().filter(|t| t.exact).count() as f64 / results.len() as f64;
            let excluded: usize = results.iter().map(|t| t.excluded).sum();
            excluded_total += excluded as u64;
            metrics_table.push(vec![
                Cell::int(n),
                Cell::int(target),
                Cell::text("exact_support_rate"),
                Cell::num(exact_rate),
                Cell::int(results.len()),
            ]);
            metrics_table.push(vec![
                Cell::int(n),
                Cell::int(target),
                Cell::text("excluded_replicates"),
                Cell::num(excluded as f64),
                Cell::int(results.len()),
            ]);

            let with_summary: Vec<&TargetResult> =
                results.iter().copied().filter(|t| t.summary.is_some()).collect();
            for j in 0..p {
                if !with_summary.is_empty() {
                    let k = with_summary.len() as f64;
                    let mut acc = [0.0; 5];
                    for t in &with_summary {
                        let row = &t.summary.as_ref().unwrap()[j];
                        for (a, v) in acc.iter_mut().zip(row) {
                            *a += v / k;
                        }
                    }
                    coef_table.push(vec![
                        Cell::int(n),
                        Cell::int(target),
                        Cell::int(j),
                        Cell::text(&names[j]),
                        Cell::num(acc[0]),
                        Cell::num(acc[1]),
                        Cell::num(acc[2]),
                        Cell::num(acc[3]),
                        Cell::num(acc[4]),
                        Cell::int(with_summary.len()),
                    ]);
                }
                let truth_mean =
                    results.iter().map(|t| t.truth_values[j]).sum::<f64>() / results.len() as f64;
                truth_table.push(vec![
                    Cell::int(n),
                    Cell::int(target),
                    Cell::int(j),
                    Cell::num(truth_mean),
                    Cell::int(results.len()),
                ]);
            }

            let with_w2: Vec<&TargetResult> =
                results.iter().copied().filter(|t| t.w2.is_some()).collect();
            if !with_w2.is_empty() {
                for j in 0..p {
                    let mean = with_w2
                        .iter()
                        .map(|t| t.w2.as_ref().unwrap()[j])
                        .sum::<f64>()
                        / with_w2.len() as f64;
                    w2_table.push(vec![
                        Cell::int(n),
                        Cell::int(target),
                        Cell::int(j),
                        Cell::num(mean),
                        Cell::int(with_w2.len()),
                    ]);
                }
            }
            let with_gibbs: Vec<&TargetResult> =
                results.iter().copied().filter(|t| t.gibbs_inclusion.is_some()).collect();
            if !with_gibbs.is_empty() {
                for j in 0..p {
                    let mean = with_gibbs
                        .iter()
                        .map(|t| t.gibbs_inclusion.as_ref().unwrap()[j])
                        .sum::<f64>()
                        / with_gibbs.len() as f64;
                    gibbs_table.push(vec![
                        Cell::int(n),
                        Cell::int(target),
                        Cell::int(j),
                        Cell::num(mean),
                        Cell::int(with_gibbs.len()),
                    ]);
                }
            }
        }
    }

    report.insert_table("lv_support", support_table);
    report.insert_table("lv_coefficients", coef_table);
    report.insert_table("lv_truth", truth_table);
    if !w2_table.rows.is_empty() {
        report.insert_table("lv_w2", w2_table);
    }
    if !gibbs_table.rows.is_empty() {
        report.insert_table("lv_gibbs_inclusion", gibbs_table);
    }
    report.insert_table("lv_metrics", metrics_table);
    report.excluded_replicates = excluded_total;
    report.runtime.total_seconds = start.elapsed().as_secs_f64();
    report.runtime.sections.insert("trials_seconds".into(), start.elapsed().as_secs_f64());
    report.finalize();
    Ok(report)
}
