use bipstls::linalg::Matrix;
use bipstls::regression::{
    design_stats, fit_ols, fit_restricted_ols, standardize, standardize_with, zero_fit,
    ConstantColumnPolicy, Dataset,
};
use bipstls::rng::{standard_normal, stream};
use bipstls::Error;
use proptest::prelude::*;

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

#[test]
fn identity_design_reproduces_y() {
    let x = Matrix::identity(2);
    let y = Matrix::from_vec(2, 1, vec![3.0, 4.0]).unwrap();
    let data = Dataset::new(x, y, None).unwrap();
    let fit = fit_ols(&data, 0).unwrap();
    assert!((fit.coefficients[0] - 3.0).abs() < 1e-12);
    assert!((fit.coefficients[1] - 4.0).abs() < 1e-12);
    assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    // Saturated fit: no degrees of freedom left for a variance estimate.
    assert_eq!(fit.sigma_hat_sq, 0.0);
}

#[test]
fn noiseless_fit_recovers_coefficients() {
    let beta = [2.0, -1.0, 0.0, 0.5];
    let data = random_dataset(11, 60, 4, &beta, 0.0);
    let fit = fit_ols(&data, 0).unwrap();
    for (b, t) in fit.coefficients.iter().zip(&beta) {
        assert!((b - t).abs() < 1e-10, "{b} vs {t}");
    }
    assert!(fit.sigma_hat_sq < 1e-20);
}

#[test]
fn ols_matches_gaussian_elimination_oracle() {
    let beta = [1.0, 0.0, -2.0, 3.0, 0.0, 0.7, 0.0, -0.1];
    let data = random_dataset(22, 40, 8, &beta, 0.3);
    let fit = fit_ols(&data, 0).unwrap();

    // Normal equations assembled with plain loops, solved by elimination.
    let n = data.n();
    let p = data.p();
    let y = data.responses.column(0);
    let mut gram = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for a in 0..p {
        for b in 0..p {
            for i in 0..n {
                gram[a][b] += data.covariates.get(i, a) * data.covariates.get(i, b);
            }
        }
        for i in 0..n {
            xty[a] += data.covariates.get(i, a) * y[i];
        }
    }
    let reference = bipstls_oracles::solve_gauss(&gram, &xty);
    for (b, r) in fit.coefficients.iter().zip(&reference) {
        assert!((b - r).abs() < 1e-9, "{b} vs {r}");
    }
}

#[test]
fn residuals_are_orthogonal_to_the_design() {
    let data = random_dataset(33, 50, 6, &[1.0, 2.0, 3.0, -1.0, 0.0, 0.5], 1.0);
    let fit = fit_ols(&data, 0).unwrap();
    let xtr = data.covariates.tr_matvec(&fit.residuals);
    for v in xtr {
        assert!(v.abs() < 1e-8, "X'r component {v}");
    }
}

#[test]
fn restricted_fit_zeroes_off_support_and_duplicates_collapse() {
    let data = random_dataset(44, 30, 5, &[1.0, 0.0, 2.0, 0.0, 0.0], 0.1);
    let fit = fit_restricted_ols(&data, 0, &[2, 0, 2]).unwrap();
    assert_eq!(fit.support, vec![0, 2]);
    assert_eq!(fit.coefficients[1], 0.0);
    assert_eq!(fit.coefficients[3], 0.0);
    assert_eq!(fit.coefficients[4], 0.0);

    assert!(matches!(fit_restricted_ols(&data, 0, &[]), Err(Error::EmptySupport)));
    assert!(matches!(fit_restricted_ols(&data, 0, &[7]), Err(Error::DimensionMismatch(_))));
}

#[test]
fn zero_fit_holds_the_response_as_residual() {
    let data = random_dataset(55, 20, 3, &[1.0, 1.0, 1.0], 0.5);
    let y = data.responses.column(0);
    let fit = zero_fit(&data, 0).unwrap();
    assert!(fit.support.is_empty());
    assert_eq!(fit.residuals, y);
    let msq = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    assert!((fit.sigma_hat_sq - msq).abs() < 1e-12);
}

#[test]
fn duplicate_columns_are_rejected_as_singular() {
    let mut x = Matrix::zeros(10, 2);
    let mut rng = stream(66);
    for i in 0..10 {
        let v = standard_normal(&mut rng);
        x.set(i, 0, v);
        x.set(i, 1, v);
    }
    let y = Matrix::from_vec(10, 1, vec![1.0; 10]).unwrap();
    let data = Dataset::new(x, y, None).unwrap();
    assert!(matches!(fit_ols(&data, 0), Err(Error::SingularDesign)));
}

#[test]
fn design_stats_match_power_iteration_oracle() {
    let data = random_dataset(77, 80, 5, &[0.0; 5], 1.0);
    let stats = design_stats(&data).unwrap();
    let n = data.n() as f64;
    let p = data.p();

    let scaled: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| stats.gram.get(i, j) / n).collect())
        .collect();
    let (lo, hi) = bipstls_oracles::extreme_symmetric_eigenvalues(&scaled, 4000);
    assert!((stats.rho1 - lo).abs() < 1e-6, "rho1 {} vs {lo}", stats.rho1);
    assert!((stats.rho2 - hi).abs() < 1e-6, "rho2 {} vs {hi}", stats.rho2);

    for j in 0..p {
        assert!((stats.column_norms_sq[j] - stats.gram.get(j, j)).abs() < 1e-12);
    }
    let inv = stats.gram_inverse.as_ref().unwrap();
    for i in 0..p {
        for j in 0..p {
            let mut acc = 0.0;
            for k in 0..p {
                acc += stats.gram.get(i, k) * inv.get(k, j);
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((acc - expect).abs() < 1e-8);
        }
    }
}

#[test]
fn hat_matrix_trace_equals_dimension() {
    let data = random_dataset(88, 40, 7, &[0.0; 7], 1.0);
    let stats = design_stats(&data).unwrap();
    let inv = stats.gram_inverse.as_ref().unwrap();
    let p = data.p();
    let mut trace = 0.0;
    for i in 0..data.n() {
        let row = data.covariates.row(i);
        for a in 0..p {
            for b in 0..p {
                trace += row[a] * inv.get(a, b) * row[b];
            }
        }
    }
    assert!((trace - p as f64).abs() < 1e-8, "trace {trace}");
}

#[test]
fn standardize_centers_and_scales_to_unit_mean_square() {
    let data = random_dataset(99, 50, 4, &[1.0, -1.0, 0.0, 2.0], 0.7);
    let std_data = standardize(&data).unwrap();
    assert!(std_data.is_centered && std_data.is_standardized);
    let n = std_data.n() as f64;
    for j in 0..std_data.p() {
        let col = std_data.covariates.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let msq = col.iter().map(|v| v * v).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((msq - 1.0).abs() < 1e-12);
    }
    let ymean = std_data.responses.column(0).iter().sum::<f64>() / n;
    assert!(ymean.abs() < 1e-12);
}

#[test]
fn unscale_maps_standardized_coefficients_back() {
    // Column 0 has spread 1, column 1 has spread 2.
    let x = Matrix::from_vec(2, 2, vec![0.0, 0.0, 2.0, 4.0]).unwrap();
    let y = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
    let data = Dataset::new(x, y, None).unwrap();
    let std_data = standardize(&data).unwrap();
    let t = std_data.transform.as_ref().unwrap();
    assert_eq!(t.x_scale, vec![1.0, 2.0]);
    assert_eq!(std_data.unscale_coefficients(&[3.0, 3.0]), vec![3.0, 1.5]);
}

#[test]
fn constant_column_policies() {
    let mut x = Matrix::zeros(4, 2);
    for i in 0..4 {
        x.set(i, 0, 1.0);
        x.set(i, 1, i as f64);
    }
    let y = Matrix::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    let data = Dataset::new(x, y, None).unwrap();

    assert!(matches!(standardize(&data), Err(Error::ConstantColumn(0))));

    let exempt = standardize_with(&data, ConstantColumnPolicy::Exempt).unwrap();
    assert_eq!(exempt.covariates.column(0), vec![1.0; 4]);
    assert_eq!(exempt.transform.as_ref().unwrap().constant_columns, vec![0]);

    let zeroed = standardize_with(&data, ConstantColumnPolicy::CenterToZero).unwrap();
    assert_eq!(zeroed.covariates.column(0), vec![0.0; 4]);
}

#[test]
fn dataset_validation_rejects_bad_shapes_and_values() {
    let x = Matrix::zeros(3, 2);
    let y = Matrix::zeros(4, 1);
    assert!(matches!(Dataset::new(x, y, None), Err(Error::DimensionMismatch(_))));

    let x = Matrix::from_vec(1, 1, vec![f64::NAN]).unwrap();
    let y = Matrix::zeros(1, 1);
    assert!(matches!(Dataset::new(x, y, None), Err(Error::InvalidData(_))));

    let x = Matrix::zeros(2, 2);
    let y = Matrix::zeros(2, 1);
    assert!(matches!(
        Dataset::new(x, y, Some(vec!["a".into()])),
        Err(Error::DimensionMismatch(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Adding a column to the support can only reduce the error sum.
    #[test]
    fn sse_is_monotone_in_the_support(seed in 0u64..1_000_000) {
        let data = random_dataset(seed, 25, 6, &[1.0, 0.0, -1.0, 2.0, 0.0, 0.3], 0.8);
        let small = fit_restricted_ols(&data, 0, &[0, 2]).unwrap();
        let large = fit_restricted_ols(&data, 0, &[0, 2, 4]).unwrap();
        let sse = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
        prop_assert!(sse(&large.residuals) <= sse(&small.residuals) + 1e-9);
    }

    #[test]
    fn standardized_fits_predict_like_raw_fits(seed in 0u64..1_000_000) {
        let data = random_dataset(seed, 30, 4, &[1.5, -0.5, 0.0, 1.0], 0.5);
        let raw = fit_ols(&data, 0).unwrap();
        let std_data = standardize(&data).unwrap();
        let std_fit = fit_ols(&std_data, 0).unwrap();
        // Slopes agree after unscaling (centering only moves the intercept,
        // and these designs carry no intercept column).
        let unscaled = std_data.unscale_coefficients(&std_fit.coefficients);
        let t = std_data.transform.as_ref().unwrap();
        // Compare against the raw fit of centered data.
        let n = data.n();
        let mut xc = Matrix::zeros(n, data.p());
        for i in 0..n {
            for j in 0..data.p() {
                xc.set(i, j, data.covariates.get(i, j) - t.x_shift[j]);
            }
        }
        let mut yc = Matrix::zeros(n, 1);
        for i in 0..n {
            yc.set(i, 0, data.responses.get(i, 0) - t.y_shift[0]);
        }
        let centered = Dataset::new(xc, yc, None).unwrap();
        let centered_fit = fit_ols(&centered, 0).unwrap();
        for (a, b) in unscaled.iter().zip(&centered_fit.coefficients) {
            prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        }
        let _ = raw;
    }
}
