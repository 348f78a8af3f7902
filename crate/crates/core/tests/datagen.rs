use bipstls::datagen::{
    add_lognormal_noise, build_discovery_dataset, finite_difference_derivatives, generate,
    lv_first_integral, poly_library, simulate_lotka_volterra, simulate_lv_with_step,
    DerivativeSource, LvParams, ModelKind, SamplingMode, SyntheticSpec, TrajectoryData,
};
use bipstls::linalg::Matrix;
use bipstls::regression::fit_restricted_ols;
use bipstls::Error;

fn spec(model: ModelKind, n: usize, sigma: f64, seed: u64) -> SyntheticSpec {
    SyntheticSpec { model, n, sigma_noise: sigma, seed }
}

#[test]
fn model1_noiseless_response_is_the_active_column_sum() {
    let (data, truth) = generate(&spec(ModelKind::Model1, 50, 0.0, 3)).unwrap();
    assert_eq!(data.p(), 30);
    assert_eq!(truth.support[0], (15..30).collect::<Vec<_>>());
    for i in 0..data.n() {
        let manual: f64 = (15..30).map(|j| data.covariates.get(i, j)).sum();
        assert!((data.responses.get(i, 0) - manual).abs() < 1e-12);
    }
    for j in 0..30 {
        let expect = if j >= 15 { 1.0 } else { 0.0 };
        assert_eq!(truth.beta.get(j, 0), expect);
    }
}

#[test]
fn generation_is_deterministic_in_the_seed() {
    let a = generate(&spec(ModelKind::Model1, 40, 0.5, 9)).unwrap();
    let b = generate(&spec(ModelKind::Model1, 40, 0.5, 9)).unwrap();
    assert_eq!(a.0, b.0);
    let c = generate(&spec(ModelKind::Model1, 40, 0.5, 10)).unwrap();
    assert_ne!(a.0, c.0);

    assert!(generate(&spec(ModelKind::Model1, 0, 0.5, 1)).is_err());
    assert!(generate(&spec(ModelKind::Model1, 10, -0.1, 1)).is_err());
    assert!(generate(&spec(ModelKind::Model2 { r: 1.0 }, 10, 0.5, 1)).is_err());
}

#[test]
fn correlated_design_matches_its_toeplitz_covariance() {
    let r: f64 = 0.6;
    let n = 100_000;
    let (data, truth) = generate(&spec(ModelKind::Model2 { r }, n, 0.0, 17)).unwrap();
    // Tiered coefficients over the active half.
    for j in 15..20 {
        assert_eq!(truth.beta.get(j, 0), 0.5);
    }
    for j in 20..25 {
        assert_eq!(truth.beta.get(j, 0), 1.5);
    }
    for j in 25..30 {
        assert_eq!(truth.beta.get(j, 0), 2.5);
    }

    let p = data.p();
    let nf = n as f64;
    let means: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| data.covariates.get(i, j)).sum::<f64>() / nf)
        .collect();
    for a in 0..p {
        for b in a..p {
            let mut cov = 0.0;
            for i in 0..n {
                cov += (data.covariates.get(i, a) - means[a]) * (data.covariates.get(i, b) - means[b]);
            }
            cov /= nf;
            let target = r.powi((b - a) as i32);
            assert!(
                (cov - target).abs() < 0.02,
                "cov[{a},{b}] = {cov}, want {target}"
            );
        }
    }
}

#[test]
fn latent_polynomial_model_exposes_its_structure() {
    let (data, truth) = generate(&spec(ModelKind::Model3, 200, 0.0, 23)).unwrap();
    assert_eq!(data.p(), 15);
    assert_eq!(data.d(), 2);
    assert_eq!(truth.support, vec![vec![0, 4], vec![0, 4]]);

    for i in 0..data.n() {
        // Column 0 is the constant, 3 the square, 4 the cross term.
        assert_eq!(data.covariates.get(i, 0), 1.0);
        let z1 = data.covariates.get(i, 1);
        let z2 = data.covariates.get(i, 2);
        assert!((data.covariates.get(i, 3) - z1 * z1).abs() < 1e-12);
        assert!((data.covariates.get(i, 4) - z1 * z2).abs() < 1e-12);

        let y0 = 1.0 - 0.68 * z1 * z2;
        let y1 = -1.5 + 0.82 * z1 * z2;
        assert!((data.responses.get(i, 0) - y0).abs() < 1e-12);
        assert!((data.responses.get(i, 1) - y1).abs() < 1e-12);
    }
}

#[test]
fn two_variable_library_prints_the_usual_fifteen_terms() {
    let states = Matrix::from_vec(2, 2, vec![0.5, -1.0, 2.0, 3.0]).unwrap();
    let (lib, names) = poly_library(&states, 4).unwrap();
    assert_eq!(
        names,
        vec![
            "1", "z1", "z2", "z1^2", "z1*z2", "z2^2", "z1^3", "z1*z2^2", "z1^2*z2", "z2^3",
            "z1^4", "z1^3*z2", "z1^2*z2^2", "z1*z2^3", "z2^4",
        ]
    );
    // Row check against direct arithmetic at (0.5, -1).
    let row: Vec<f64> = (0..15).map(|c| lib.get(0, c)).collect();
    let want = [
        1.0,
        0.5,
        -1.0,
        0.25,
        -0.5,
        1.0,
        0.125,
        0.5,
        -0.25,
        -1.0,
        0.0625,
        -0.125,
        0.25,
        -0.5,
        1.0,
    ];
    for (a, b) in row.iter().zip(&want) {
        assert!((a - b).abs() < 1e-15, "{a} vs {b}");
    }
}

#[test]
fn single_variable_library_is_the_plain_power_basis() {
    let states = Matrix::from_vec(3, 1, vec![2.0, -1.0, 0.5]).unwrap();
    let (lib, names) = poly_library(&states, 3).unwrap();
    assert_eq!(names, vec!["1", "z1", "z1^2", "z1^3"]);
    for (i, &z) in [2.0, -1.0, 0.5].iter().enumerate() {
        for (c, want) in [1.0, z, z * z, z * z * z].iter().enumerate() {
            assert!((lib.get(i, c) - want).abs() < 1e-15);
        }
    }
}

#[test]
fn library_terms_enumerate_every_monomial_once() {
    // Against the independent multiset enumerator, for several shapes.
    for (k, d) in [(1usize, 4usize), (2, 4), (3, 3), (4, 2)] {
        let states = Matrix::zeros(1, k);
        let (_, names) = poly_library(&states, d).unwrap();
        let oracle = bipstls_oracles::monomial_multisets(k, d);
        assert_eq!(names.len(), oracle.len(), "k={k} d={d}");

        // Recover exponent vectors from the printed names and compare as sets.
        let mut got: Vec<Vec<usize>> = names
            .iter()
            .map(|name| {
                let mut e = vec![0usize; k];
                if name == "1" {
                    return e;
                }
                for factor in name.split('*') {
                    let (var, pow) = match factor.split_once('^') {
                        Some((v, p)) => (v, p.parse::<usize>().unwrap()),
                        None => (factor, 1),
                    };
                    let idx: usize = var.strip_prefix('z').unwrap().parse::<usize>().unwrap() - 1;
                    e[idx] += pow;
                }
                e
            })
            .collect();
        got.sort();
        let mut want = oracle;
        want.sort();
        assert_eq!(got, want, "k={k} d={d}");
    }
}

#[test]
fn decoupled_system_integrates_to_exact_exponentials() {
    let params = LvParams { alpha: 1.0, beta: 0.0, gamma: -1.5, delta: 0.0 };
    let traj =
        simulate_lotka_volterra(&params, [10.0, 5.0], [0.0, 1.0], 2, SamplingMode::UniformGrid, 0)
            .unwrap();
    let u1 = traj.states.get(1, 0);
    let v1 = traj.states.get(1, 1);
    let eu = 10.0 * 1.0f64.exp();
    let ev = 5.0 * (-1.5f64).exp();
    assert!((u1 - eu).abs() / eu < 1e-6, "{u1} vs {eu}");
    assert!((v1 - ev).abs() / ev < 1e-6, "{v1} vs {ev}");
}

#[test]
fn halving_the_internal_step_moves_states_below_1e8th() {
    let params = LvParams::default();
    let a = simulate_lv_with_step(
        &params, [10.0, 5.0], [0.0, 24.0], 25, SamplingMode::UniformGrid, 0, 1e-3,
    )
    .unwrap();
    let b = simulate_lv_with_step(
        &params, [10.0, 5.0], [0.0, 24.0], 25, SamplingMode::UniformGrid, 0, 5e-4,
    )
    .unwrap();
    let mut max_diff = 0.0f64;
    for i in 0..25 {
        for j in 0..2 {
            max_diff = max_diff.max((a.states.get(i, j) - b.states.get(i, j)).abs());
        }
    }
    assert!(max_diff < 1e-8, "step sensitivity {max_diff}");
}

#[test]
fn the_first_integral_is_conserved_along_the_orbit() {
    let params = LvParams::default();
    let traj = simulate_lotka_volterra(
        &params, [10.0, 5.0], [0.0, 24.0], 2000, SamplingMode::UniformGrid, 0,
    )
    .unwrap();
    let i0 = lv_first_integral(&params, 10.0, 5.0);
    for i in 0..2000 {
        let it = lv_first_integral(&params, traj.states.get(i, 0), traj.states.get(i, 1));
        assert!(
            (it - i0).abs() / i0.abs() < 1e-4,
            "integral drift {} at sample {i}",
            (it - i0).abs() / i0.abs()
        );
    }
}

#[test]
fn the_orbit_returns_near_its_starting_point() {
    let traj = simulate_lotka_volterra(
        &LvParams::default(), [10.0, 5.0], [0.0, 24.0], 4000, SamplingMode::UniformGrid, 0,
    )
    .unwrap();
    let (mut u_min, mut u_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..4000 {
        u_min = u_min.min(traj.states.get(i, 0));
        u_max = u_max.max(traj.states.get(i, 0));
        v_min = v_min.min(traj.states.get(i, 1));
        v_max = v_max.max(traj.states.get(i, 1));
    }
    let mut best = f64::INFINITY;
    for i in 0..4000 {
        if traj.times[i] < 2.0 {
            continue;
        }
        let du = (traj.states.get(i, 0) - 10.0).abs() / (u_max - u_min);
        let dv = (traj.states.get(i, 1) - 5.0).abs() / (v_max - v_min);
        best = best.min(du.max(dv));
    }
    assert!(best < 0.02, "closest relative return distance {best}");
}

#[test]
fn runaway_dynamics_stop_with_a_blowup_error() {
    let params = LvParams { alpha: 2.0, beta: 0.5, gamma: 2.0, delta: 0.5 };
    match simulate_lotka_volterra(&params, [10.0, 10.0], [0.0, 24.0], 10, SamplingMode::UniformGrid, 0)
    {
        Err(Error::BlowUp { time }) => assert!(time > 0.0 && time < 5.0, "blow-up at {time}"),
        other => panic!("expected BlowUp, got {other:?}"),
    }
}

#[test]
fn simulation_rejects_degenerate_requests() {
    let p = LvParams::default();
    assert!(simulate_lotka_volterra(&p, [1.0, 1.0], [1.0, 1.0], 5, SamplingMode::UniformGrid, 0).is_err());
    assert!(simulate_lotka_volterra(&p, [1.0, 1.0], [0.0, 1.0], 1, SamplingMode::UniformGrid, 0).is_err());
    assert!(
        simulate_lv_with_step(&p, [1.0, 1.0], [0.0, 1.0], 5, SamplingMode::UniformGrid, 0, 0.0)
            .is_err()
    );
}

#[test]
fn random_sampling_is_sorted_and_derivatives_follow_the_field() {
    let p = LvParams::default();
    let traj =
        simulate_lotka_volterra(&p, [10.0, 5.0], [0.0, 24.0], 300, SamplingMode::UniformRandom, 5)
            .unwrap();
    for w in traj.times.windows(2) {
        assert!(w[1] > w[0]);
    }
    assert!(traj.times[0] >= 0.0 && traj.times[299] <= 24.0);
    for i in 0..300 {
        let u = traj.states.get(i, 0);
        let v = traj.states.get(i, 1);
        let du = p.alpha * u + p.beta * u * v;
        let dv = p.gamma * v + p.delta * u * v;
        assert!((traj.derivatives.get(i, 0) - du).abs() < 1e-12);
        assert!((traj.derivatives.get(i, 1) - dv).abs() < 1e-12);
    }
    // noisy_states mirrors states before any noise is applied.
    assert_eq!(traj.states, traj.noisy_states);
}

#[test]
fn multiplicative_noise_keeps_positivity_and_the_lognormal_mean() {
    let traj = simulate_lotka_volterra(
        &LvParams::default(), [10.0, 5.0], [0.0, 24.0], 2000, SamplingMode::UniformGrid, 0,
    )
    .unwrap();
    let sd = 0.3;
    let noisy = add_lognormal_noise(&traj, sd, 77).unwrap();
    assert_eq!(noisy.states, traj.states);
    assert_eq!(noisy.times, traj.times);

    let mut ratio_sum = 0.0;
    let mut count = 0.0;
    for i in 0..2000 {
        for j in 0..2 {
            let ratio = noisy.noisy_states.get(i, j) / traj.states.get(i, j);
            assert!(ratio > 0.0);
            ratio_sum += ratio;
            count += 1.0;
        }
    }
    let want = (sd * sd / 2.0f64).exp();
    assert!(
        (ratio_sum / count - want).abs() < 0.02,
        "mean ratio {} vs {want}",
        ratio_sum / count
    );

    // Scales are recomputed from the noisy trajectory.
    for j in 0..2 {
        let n = 2000.0;
        let mean = (0..2000).map(|i| noisy.noisy_states.get(i, j)).sum::<f64>() / n;
        let var =
            (0..2000).map(|i| (noisy.noisy_states.get(i, j) - mean).powi(2)).sum::<f64>() / n;
        assert!((noisy.normalization_scales[j] - var.sqrt()).abs() < 1e-12);
    }

    // sd = 0 is the identity, bit for bit.
    let clean = add_lognormal_noise(&traj, 0.0, 77).unwrap();
    assert_eq!(clean.noisy_states, traj.states);
    assert!(add_lognormal_noise(&traj, -0.1, 0).is_err());
}

fn manual_trajectory(times: Vec<f64>, col0: Vec<f64>, col1: Vec<f64>) -> TrajectoryData {
    let m = times.len();
    let mut states = Matrix::zeros(m, 2);
    for i in 0..m {
        states.set(i, 0, col0[i]);
        states.set(i, 1, col1[i]);
    }
    TrajectoryData {
        times,
        noisy_states: states.clone(),
        derivatives: Matrix::zeros(m, 2),
        states,
        normalization_scales: [0.0, 0.0],
    }
}

#[test]
fn finite_differences_are_exact_for_quadratics_even_on_uneven_grids() {
    let times = vec![0.0, 0.4, 1.1, 1.5, 2.8, 3.0];
    let lin: Vec<f64> = times.iter().map(|t| 3.0 * t + 1.0).collect();
    let quad: Vec<f64> = times.iter().map(|t| t * t - 2.0 * t + 0.5).collect();
    let traj = manual_trajectory(times.clone(), lin, quad);
    let d = finite_difference_derivatives(&traj).unwrap();
    for (i, &t) in times.iter().enumerate() {
        assert!((d.get(i, 0) - 3.0).abs() < 1e-10, "linear at {t}");
        assert!((d.get(i, 1) - (2.0 * t - 2.0)).abs() < 1e-10, "quadratic at {t}");
    }
}

#[test]
fn finite_differences_track_a_sine_to_1e4() {
    let n = 1000;
    let times: Vec<f64> = (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).collect();
    let sin: Vec<f64> = times.iter().map(|t| t.sin()).collect();
    let cos_check: Vec<f64> = times.iter().map(|t| t.cos()).collect();
    let traj = manual_trajectory(times, sin.clone(), sin);
    let d = finite_difference_derivatives(&traj).unwrap();
    for i in 0..n {
        assert!(
            (d.get(i, 0) - cos_check[i]).abs() < 1e-4,
            "sample {i}: {} vs {}",
            d.get(i, 0),
            cos_check[i]
        );
    }
}

#[test]
fn finite_differences_reject_bad_grids() {
    let traj = manual_trajectory(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]);
    assert!(finite_difference_derivatives(&traj).is_err());
    let traj = manual_trajectory(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4], vec![0.0; 4]);
    match finite_difference_derivatives(&traj) {
        Err(Error::DegenerateSpacing { index }) => assert_eq!(index, 1),
        other => panic!("expected DegenerateSpacing, got {other:?}"),
    }
}

#[test]
fn discovery_regression_recovers_the_normalized_dynamics() {
    // Restricted least squares on the true terms of the normalized system
    // returns (alpha, beta·s_v) for the first state and (gamma, delta·s_u)
    // for the second. With this orbit the scales put those products near
    // -0.68 and 0.82.
    let traj = simulate_lotka_volterra(
        &LvParams::default(), [10.0, 5.0], [0.0, 24.0], 1000, SamplingMode::UniformGrid, 0,
    )
    .unwrap();
    let (data, scales) = build_discovery_dataset(&traj, 2, DerivativeSource::Exact).unwrap();
    assert_eq!(data.p(), 6);
    assert_eq!(
        data.column_names.as_ref().unwrap(),
        &vec!["1", "z1", "z2", "z1^2", "z1*z2", "z2^2"]
    );

    let fit0 = fit_restricted_ols(&data, 0, &[1, 4]).unwrap();
    assert!((fit0.coefficients[1] - 1.0).abs() < 0.02, "alpha: {}", fit0.coefficients[1]);
    assert!((fit0.coefficients[4] + 0.68).abs() < 0.02, "beta·s_v: {}", fit0.coefficients[4]);
    let fit1 = fit_restricted_ols(&data, 1, &[2, 4]).unwrap();
    assert!((fit1.coefficients[2] + 1.5).abs() < 0.02, "gamma: {}", fit1.coefficients[2]);
    assert!((fit1.coefficients[4] - 0.82).abs() < 0.02, "delta·s_u: {}", fit1.coefficients[4]);

    // The recovered cross terms are the raw parameters times the scales.
    assert!((fit0.coefficients[4] - (-0.1 * scales[1])).abs() < 0.01);
    assert!((fit1.coefficients[4] - 0.075 * scales[0]).abs() < 0.01);

    // Scales equal the per-column standard deviations, computed independently.
    for j in 0..2 {
        let n = 1000.0;
        let mean = (0..1000).map(|i| traj.noisy_states.get(i, j)).sum::<f64>() / n;
        let var = (0..1000).map(|i| (traj.noisy_states.get(i, j) - mean).powi(2)).sum::<f64>() / n;
        assert!((scales[j] - var.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn discovery_on_noisy_data_uses_finite_differences_of_the_noisy_states() {
    let traj = simulate_lotka_volterra(
        &LvParams::default(), [10.0, 5.0], [0.0, 24.0], 500, SamplingMode::UniformGrid, 0,
    )
    .unwrap();
    let noisy = add_lognormal_noise(&traj, 0.005, 3).unwrap();
    let (data, scales) =
        build_discovery_dataset(&noisy, 2, DerivativeSource::FiniteDifference).unwrap();

    // Reproduce the targets: finite differences of the noisy states divided
    // by the per-column scale.
    let fd = finite_difference_derivatives(&noisy).unwrap();
    for i in 0..data.n() {
        for j in 0..2 {
            assert!((data.responses.get(i, j) - fd.get(i, j) / scales[j]).abs() < 1e-12);
        }
    }
    // Library column 1 is the normalized first state.
    for i in 0..data.n() {
        assert!(
            (data.covariates.get(i, 1) - noisy.noisy_states.get(i, 0) / scales[0]).abs() < 1e-12
        );
    }
}

#[test]
fn constant_states_cannot_be_normalized() {
    let traj = manual_trajectory(vec![0.0, 1.0, 2.0], vec![4.0, 4.0, 4.0], vec![1.0, 2.0, 3.0]);
    match build_discovery_dataset(&traj, 2, DerivativeSource::Exact) {
        Err(Error::ConstantColumn(j)) => assert_eq!(j, 0),
        other => panic!("expected ConstantColumn, got {other:?}"),
    }
}

#[test]
fn equilibrium_initial_conditions_stay_put() {
    // u* = -gamma/delta, v* = -alpha/beta is a fixed point of the flow.
    let p = LvParams::default();
    let traj = simulate_lotka_volterra(&p, [20.0, 10.0], [0.0, 24.0], 100, SamplingMode::UniformGrid, 0)
        .unwrap();
    for i in 0..100 {
        assert!((traj.states.get(i, 0) - 20.0).abs() < 1e-6);
        assert!((traj.states.get(i, 1) - 10.0).abs() < 1e-6);
    }
}
