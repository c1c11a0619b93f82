use nalgebra::DMatrix;
use pfci::lasso::{lambda_max, lasso_cd, lasso_cd_traced, objective, soft_threshold, LassoError, DEFAULT_MAX_ITER, DEFAULT_TOL};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn xty(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    x.column_iter().map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n).collect()
}

/// Proximal gradient (ISTA) with step 1/L, L the largest eigenvalue of XᵀX/n.
fn ista(x: &DMatrix<f64>, y: &[f64], lambda: f64, tol: f64) -> Vec<f64> {
    let n = y.len() as f64;
    let gram = x.tr_mul(x) / n;
    let l = gram.clone().symmetric_eigenvalues().max();
    let c = xty(x, y);
    let mut b = vec![0.0; x.ncols()];
    for _ in 0..1_000_000 {
        let gb = &gram * nalgebra::DVector::from_column_slice(&b);
        let next: Vec<f64> = (0..b.len()).map(|k| soft_threshold(b[k] - (gb[k] - c[k]) / l, lambda / l)).collect();
        let change = next.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        b = next;
        if change < tol {
            break;
        }
    }
    b
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

/// Columns with `XᵀX/n = I`, via QR of a Gaussian matrix.
fn orthonormal_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, n, p).qr().q();
    q * (n as f64).sqrt()
}

#[test]
fn soft_threshold_values() {
    assert_eq!(soft_threshold(3.0, 1.0), 2.0);
    assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    assert_eq!(soft_threshold(0.5, 1.0), 0.0);
}

#[test]
fn null_solution_above_lambda_max() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = gaussian_matrix(&mut rng, 40, 6);
    let y: Vec<f64> = (0..40).map(|i| x[(i, 0)] + rng.sample::<f64, _>(StandardNormal)).collect();
    let lmax = lambda_max(&x, &y);
    let fit = lasso_cd(&x, &y, lmax, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    assert!(fit.coefficients.iter().all(|b| *b == 0.0));
    assert!(!lasso_cd(&x, &y, 0.9 * lmax, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().support().is_empty());
}

#[test]
fn single_predictor_ols() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 50;
    let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let x = DMatrix::from_iterator(n, 1, raw.iter().map(|v| (v - mean) / sd));
    let y: Vec<f64> = (0..n).map(|i| 0.7 * x[(i, 0)] + rng.sample::<f64, _>(StandardNormal)).collect();
    let fit = lasso_cd(&x, &y, 0.0, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    assert!((fit.coefficients[0] - xty(&x, &y)[0]).abs() < 1e-12);
}

#[test]
fn orthonormal_design_matches_closed_form_and_ista() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let (n, p) = (60, 8);
        let x = orthonormal_design(&mut rng, n, p);
        let y: Vec<f64> = (0..n).map(|i| 0.8 * x[(i, 0)] - 0.4 * x[(i, 3)] + rng.sample::<f64, _>(StandardNormal)).collect();
        let c = xty(&x, &y);
        let lambda = 0.2;
        let fit = lasso_cd(&x, &y, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let oracle = ista(&x, &y, lambda, 1e-10);
        for k in 0..p {
            let closed = c[k].signum() * (c[k].abs() - lambda).max(0.0);
            assert!((fit.coefficients[k] - closed).abs() < 1e-6);
            assert!((fit.coefficients[k] - oracle[k]).abs() < 1e-6);
        }
    }
}

#[test]
fn argument_errors() {
    let x = DMatrix::from_element(3, 1, 1.0);
    assert_eq!(lasso_cd(&x, &[1.0, 2.0], 0.1, DEFAULT_TOL, DEFAULT_MAX_ITER), Err(LassoError::Shape { rows: 3, len: 2 }));
    assert_eq!(lasso_cd(&x, &[1.0; 3], -1.0, DEFAULT_TOL, DEFAULT_MAX_ITER), Err(LassoError::InvalidLambda(-1.0)));
    assert!(matches!(lasso_cd(&x, &[1.0; 3], f64::NAN, DEFAULT_TOL, DEFAULT_MAX_ITER), Err(LassoError::InvalidLambda(_))));
}

#[test]
fn iteration_cap_reports_partial_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = gaussian_matrix(&mut rng, 30, 1);
    let x = DMatrix::from_fn(30, 3, |i, k| base[(i, 0)] + 1e-3 * k as f64 * rng.sample::<f64, _>(StandardNormal));
    let y: Vec<f64> = (0..30).map(|i| x[(i, 0)]).collect();
    match lasso_cd(&x, &y, 1e-4, 1e-14, 2) {
        Err(LassoError::NotConverged { fit }) => assert_eq!(fit.iterations, 2),
        other => panic!("expected NotConverged, got {other:?}"),
    }
}

fn standardized(x: DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mut x = x;
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / n).sqrt();
        col /= sd;
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kkt_and_monotone_objective(seed in any::<u64>(), n in 20usize..=100, p in 2usize..=30, frac in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = standardized(gaussian_matrix(&mut rng, n, p));
        let y: Vec<f64> = (0..n).map(|i| 0.9 * x[(i, 0)] + rng.sample::<f64, _>(StandardNormal)).collect();
        let lambda = frac * lambda_max(&x, &y);
        let mut trace = vec![objective(&x, &y, &vec![0.0; p], lambda)];
        let fit = lasso_cd_traced(&x, &y, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER, |o| trace.push(o)).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        let b = &fit.coefficients;
        let resid: Vec<f64> = (0..n).map(|i| y[i] - (0..p).map(|k| x[(i, k)] * b[k]).sum::<f64>()).collect();
        for k in 0..p {
            let g = x.column(k).iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n as f64;
            if b[k] != 0.0 {
                prop_assert!((g - lambda * b[k].signum()).abs() <= 1e-6);
            } else {
                prop_assert!(g.abs() <= lambda + 1e-6);
            }
        }
    }
}
