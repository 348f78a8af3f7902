use bipstls::ensemble::{
    bip_fit, inclusion_gap, inclusion_probability, oob_weights, residual_bootstrap_uq,
    run_replicates, select_support, InclusionProfile, ResamplePlan,
};
use bipstls::estimators::ThresholdRule;
use bipstls::linalg::Matrix;
use bipstls::metrics::quantile;
use bipstls::regression::{fit_restricted_ols, Dataset};
use bipstls::rng::{mix, sample_without_replacement, standard_normal, stream};
use bipstls::Error;
use proptest::prelude::*;
use rand::Rng;

fn random_dataset(seed: u64, n: usize, p: usize, beta: &[f64], sigma: f64) -> Dataset {
    let mut rng = stream(seed);
    let mut x = Matrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x.set(i, j, standard_normal(&mut rng));
        }
    }
    let mut y = Matrix::zeros(n, 1);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..p {
            acc += x.get(i, j) * beta[j];
        }
        y.set(i, 0, acc + sigma * standard_normal(&mut rng));
    }
    Dataset::new(x, y, None).unwrap()
}

fn profile_from(probabilities: Vec<f64>) -> InclusionProfile {
    InclusionProfile {
        probabilities,
        weights: Vec::new(),
        per_replicate_included: Vec::new(),
        per_replicate_oob_mse: None,
    }
}

#[test]
fn replicates_are_reproducible_from_the_seed_chain() {
    let data = random_dataset(5, 10, 3, &[1.5, 0.0, -0.7], 0.3);
    let rule = ThresholdRule::gamma_scaled(2.0, 1.0);
    let plan = ResamplePlan::subsample(3, 0.6, false, 99);
    let runs = run_replicates(&data, 0, &rule, &plan).unwrap();
    assert!(runs.excluded.is_empty());
    assert_eq!(runs.total, 3);

    let n = data.n();
    let p = data.p();
    let n_b = 6; // ceil(0.6 * 10)
    let y = data.responses.column(0);
    for r in 0..3u64 {
        // Same substream construction as the implementation.
        let mut rng = stream(mix(&[99, r]));
        let rows = sample_without_replacement(&mut rng, n, n_b);

        let gram: Vec<Vec<f64>> = (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| {
                        rows.iter()
                            .map(|&i| data.covariates.get(i, a) * data.covariates.get(i, b))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let xty: Vec<f64> = (0..p)
            .map(|a| rows.iter().map(|&i| data.covariates.get(i, a) * y[i]).sum())
            .collect();
        let coef = bipstls_oracles::solve_gauss(&gram, &xty);
        for (got, want) in runs.coefficients[r as usize].iter().zip(&coef) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }

        let norms: Vec<f64> = (0..p).map(|j| gram[j][j]).collect();
        let t = rule.thresholds(&norms, n_b, 0.0);
        let include: Vec<bool> = (0..p).map(|j| coef[j].abs() > t[j]).collect();
        assert_eq!(runs.included[r as usize], include);

        let mut err = 0.0;
        let mut held = 0;
        for i in 0..n {
            if !rows.contains(&i) {
                let pred: f64 = (0..p).map(|j| data.covariates.get(i, j) * coef[j]).sum();
                err += (y[i] - pred) * (y[i] - pred);
                held += 1;
            }
        }
        let mse = runs.oob_mse.as_ref().unwrap()[r as usize];
        assert!((mse - err / held as f64).abs() < 1e-9);
    }

    // Same plan, same results; a different seed moves them.
    let again = run_replicates(&data, 0, &rule, &plan).unwrap();
    assert_eq!(again, runs);
    let moved = run_replicates(&data, 0, &rule, &ResamplePlan::subsample(3, 0.6, false, 100)).unwrap();
    assert_ne!(moved.coefficients, runs.coefficients);
}

#[test]
fn oob_weights_follow_the_shifted_softmax() {
    let w = oob_weights(&[0.0, 3.0f64.ln()]);
    assert!((w[0] - 0.75).abs() < 1e-12);
    assert!((w[1] - 0.25).abs() < 1e-12);

    // Shifting every MSE by a constant changes nothing.
    let a = oob_weights(&[0.3, 1.1, 0.9]);
    let b = oob_weights(&[17.8, 18.6, 18.4]);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(oob_weights(&[]).is_empty());
}

#[test]
fn inclusion_probabilities_average_the_include_matrix() {
    let included = vec![vec![true, false], vec![true, true], vec![false, false]];
    let uniform = inclusion_probability(&included, None).unwrap();
    assert!((uniform.probabilities[0] - 2.0 / 3.0).abs() < 1e-12);
    assert!((uniform.probabilities[1] - 1.0 / 3.0).abs() < 1e-12);

    let weighted = inclusion_probability(&included, Some(&[1.0, 1.0, 2.0])).unwrap();
    assert!((weighted.probabilities[0] - 0.5).abs() < 1e-12);
    assert!((weighted.probabilities[1] - 0.25).abs() < 1e-12);
    assert!((weighted.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    assert!(matches!(inclusion_probability(&[], None), Err(Error::EmptySamples)));
    let ragged = vec![vec![true], vec![true, false]];
    assert!(matches!(inclusion_probability(&ragged, None), Err(Error::DimensionMismatch(_))));
    assert!(matches!(
        inclusion_probability(&included, Some(&[1.0])),
        Err(Error::DimensionMismatch(_))
    ));
    assert!(matches!(
        inclusion_probability(&included, Some(&[1.0, -0.5, 1.0])),
        Err(Error::InvalidConfig(_))
    ));
    assert!(matches!(
        inclusion_probability(&included, Some(&[0.0, 0.0, 0.0])),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn support_selection_is_strict_at_the_cut() {
    let profile = profile_from(vec![0.4, 0.8, 0.45]);
    assert_eq!(select_support(&profile, 0.45), vec![1]);
    assert_eq!(select_support(&profile, 0.39), vec![0, 1, 2]);
    assert_eq!(select_support(&profile, 0.9), Vec::<usize>::new());
}

#[test]
fn inclusion_gap_in_both_modes() {
    let profile = profile_from(vec![1.0, 0.2, 0.9]);
    assert!((inclusion_gap(&profile, Some(&[0, 2])) - 0.7).abs() < 1e-12);
    // No true actives: the active side defaults to 1.
    assert!((inclusion_gap(&profile, Some(&[])) - 0.0).abs() < 1e-12);
    // All active: the null side defaults to 0.
    assert!((inclusion_gap(&profile, Some(&[0, 1, 2])) - 0.2).abs() < 1e-12);

    let unsupervised = profile_from(vec![0.9, 0.85, 0.2, 0.1]);
    assert!((inclusion_gap(&unsupervised, None) - 0.65).abs() < 1e-12);
}

#[test]
fn bagged_fit_recovers_the_support_and_refits_on_everything() {
    let beta = [2.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0];
    let data = random_dataset(13, 120, 8, &beta, 0.3);
    let rule = ThresholdRule::gamma_scaled(12.0, 1.0);
    let plan = ResamplePlan::subsample(60, 0.8, false, 4242);
    let (fit, profile) = bip_fit(&data, 0, &rule, &plan, 0.6, true).unwrap();

    assert_eq!(fit.support(), &[0, 3]);
    assert_eq!(fit.inactive_set, vec![1, 2, 4, 5, 6, 7]);
    assert!((fit.fit.coefficients[0] - 2.0).abs() < 0.1);
    assert!((fit.fit.coefficients[3] - 1.5).abs() < 0.1);
    assert_eq!(fit.passes_used, 1);
    assert_eq!(fit.rule, Some(rule));

    assert!(profile.probabilities[0] > 0.95 && profile.probabilities[3] > 0.95);
    for j in [1, 2, 4, 5, 6, 7] {
        assert!(profile.probabilities[j] < 0.3, "null {j}: {}", profile.probabilities[j]);
    }
    assert!((profile.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(profile.per_replicate_oob_mse.as_ref().unwrap().len(), 60);

    // The refit is exactly restricted least squares on the full data.
    let direct = fit_restricted_ols(&data, 0, &[0, 3]).unwrap();
    assert_eq!(fit.fit.coefficients, direct.coefficients);

    assert!(matches!(
        bip_fit(&data, 0, &rule, &plan, 0.0, true),
        Err(Error::InvalidConfig(_))
    ));
    assert!(matches!(
        bip_fit(&data, 0, &rule, &plan, 1.0, true),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn full_fraction_subsampling_disables_oob_weighting() {
    let data = random_dataset(21, 25, 3, &[1.0, 0.0, 0.5], 0.2);
    let rule = ThresholdRule::gamma_scaled(4.0, 1.0);
    let plan = ResamplePlan::subsample(10, 1.0, false, 7);
    let runs = run_replicates(&data, 0, &rule, &plan).unwrap();
    assert!(runs.oob_mse.is_none());

    assert!(matches!(
        bip_fit(&data, 0, &rule, &plan, 0.5, true),
        Err(Error::InvalidConfig(_))
    ));
    let (fit, profile) = bip_fit(&data, 0, &rule, &plan, 0.5, false).unwrap();
    assert_eq!(fit.support(), &[0, 2]);
    // Uniform weights when OOB weighting is off.
    for w in &profile.weights {
        assert!((w - 0.1).abs() < 1e-12);
    }
}

#[test]
fn undersized_replicates_are_excluded_and_eventually_abort() {
    // ceil(0.5·6) = 3 rows against p = 5 makes every replicate singular.
    let data = random_dataset(37, 6, 5, &[0.0; 5], 1.0);
    let rule = ThresholdRule::gamma_scaled(1.0, 1.0);
    let plan = ResamplePlan::subsample(8, 0.5, false, 3);
    match run_replicates(&data, 0, &rule, &plan) {
        Err(Error::AllReplicatesFailed { failed, total }) => {
            assert_eq!(failed, 8);
            assert_eq!(total, 8);
        }
        other => panic!("expected AllReplicatesFailed, got {other:?}"),
    }
    assert!(bip_fit(&data, 0, &rule, &plan, 0.5, true).is_err());
}

#[test]
fn bootstrap_summaries_match_a_double_loop_reproduction() {
    let data = random_dataset(51, 12, 4, &[1.0, 0.0, -0.5, 0.0], 0.4);
    let support = vec![0, 2];
    let b_uq = 4;
    let seed = 777;
    let contrast = [1.0, 0.0, 0.0, 0.0];
    let dist = residual_bootstrap_uq(&data, 0, &support, b_uq, seed, Some(&contrast)).unwrap();
    assert_eq!(dist.support, support);
    assert_eq!(dist.replicate_count, b_uq);

    let n = data.n();
    let base = fit_restricted_ols(&data, 0, &support).unwrap();
    let y = data.responses.column(0);
    let fitted: Vec<f64> = y.iter().zip(&base.residuals).map(|(yi, r)| yi - r).collect();

    let gram: Vec<Vec<f64>> = support
        .iter()
        .map(|&a| {
            support
                .iter()
                .map(|&b| (0..n).map(|i| data.covariates.get(i, a) * data.covariates.get(i, b)).sum())
                .collect()
        })
        .collect();

    let mut sum_e = 0.0;
    let mut sum_e_sq = 0.0;
    let mut col0 = Vec::new();
    for r in 0..b_uq as u64 {
        let mut rng = stream(mix(&[seed, r]));
        let mut y_star = vec![0.0; n];
        for i in 0..n {
            let e = base.residuals[rng.gen_range(0..n)];
            sum_e += e;
            sum_e_sq += e * e;
            y_star[i] = fitted[i] + e;
        }
        let xty: Vec<f64> = support
            .iter()
            .map(|&a| (0..n).map(|i| data.covariates.get(i, a) * y_star[i]).sum())
            .collect();
        let beta = bipstls_oracles::solve_gauss(&gram, &xty);
        let row = r as usize;
        assert!((dist.coefficient_samples.get(row, 0) - beta[0]).abs() < 1e-9);
        assert!((dist.coefficient_samples.get(row, 2) - beta[1]).abs() < 1e-9);
        assert_eq!(dist.coefficient_samples.get(row, 1), 0.0);
        assert_eq!(dist.coefficient_samples.get(row, 3), 0.0);
        col0.push(dist.coefficient_samples.get(row, 0));
    }

    let m = (b_uq * n) as f64;
    let mu = sum_e / m;
    let var = sum_e_sq / m - mu * mu;
    assert!((dist.mu_star - mu).abs() < 1e-12);
    assert!((dist.sigma_star_sq - var).abs() < 1e-12);

    // Contrast variance through an independent solve.
    let a_s = vec![1.0, 0.0];
    let v = bipstls_oracles::solve_gauss(&gram, &a_s);
    let quad: f64 = a_s.iter().zip(&v).map(|(a, b)| a * b).sum();
    assert!((dist.s_hat.unwrap() - var * quad).abs() < 1e-9 * var.abs().max(1.0));

    // Column summaries are population moments and interpolated quantiles.
    let mean0 = col0.iter().sum::<f64>() / b_uq as f64;
    let var0 = col0.iter().map(|v| (v - mean0) * (v - mean0)).sum::<f64>() / b_uq as f64;
    assert!((dist.mean[0] - mean0).abs() < 1e-12);
    assert!((dist.std[0] - var0.sqrt()).abs() < 1e-12);
    col0.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (level, values) in &dist.quantiles {
        assert!((values[0] - quantile(&col0, *level)).abs() < 1e-12);
        assert_eq!(values[1], 0.0);
    }
}

#[test]
fn bootstrap_rejects_degenerate_requests() {
    let data = random_dataset(63, 15, 3, &[1.0, 0.0, 0.0], 0.3);
    assert!(matches!(
        residual_bootstrap_uq(&data, 0, &[], 10, 1, None),
        Err(Error::EmptySupport)
    ));
    assert!(matches!(
        residual_bootstrap_uq(&data, 0, &[0], 0, 1, None),
        Err(Error::InvalidConfig(_))
    ));
    assert!(matches!(
        residual_bootstrap_uq(&data, 0, &[0], 10, 1, Some(&[1.0])),
        Err(Error::DimensionMismatch(_))
    ));
    let d1 = residual_bootstrap_uq(&data, 0, &[0, 1], 20, 9, None).unwrap();
    let d2 = residual_bootstrap_uq(&data, 0, &[0, 1], 20, 9, None).unwrap();
    assert_eq!(d1, d2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Raising the cut can only shrink the selected set.
    #[test]
    fn support_shrinks_as_the_cut_rises(
        probs in prop::collection::vec(0.0f64..1.0, 1..12),
        lo in 0.05f64..0.5,
        hi in 0.5f64..0.95,
    ) {
        let profile = profile_from(probs);
        let loose = select_support(&profile, lo.min(hi));
        let tight = select_support(&profile, lo.max(hi));
        for j in &tight {
            prop_assert!(loose.contains(j));
        }
    }

    #[test]
    fn weights_normalize_regardless_of_scale(
        mse in prop::collection::vec(0.0f64..50.0, 1..20),
    ) {
        let w = oob_weights(&mse);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(w.iter().all(|v| *v >= 0.0));
        // Smaller MSE never gets a smaller weight.
        for i in 0..mse.len() {
            for j in 0..mse.len() {
                if mse[i] < mse[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
    }
}
