mod common;

use common::{max_abs_diff, normal_equations, tall_problem};
use lander_sysid::regression::{coordinate_descent, soft_threshold, LassoOptions, LassoProblem};
use ndarray::{concatenate, Array1, Array2, Axis};
use proptest::prelude::*;

fn with_bias(x: &Array2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[Array2::ones((x.nrows(), 1)).view(), x.view()]).unwrap()
}

fn column(y: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((y.len(), 1), y.to_vec()).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den
}

#[test]
fn zero_weight_matches_normal_equations() {
    for seed in 0..20 {
        let (x, y, _) = tall_problem(seed, 200, 20);
        let phi = with_bias(&x);
        let oracle = normal_equations(&phi, &y);
        let problem = LassoProblem::new(phi.view(), column(&y).view(), true).unwrap();
        let fit = problem.solve(0.0, &LassoOptions::default(), None).unwrap();
        let k = problem.destandardize(&fit);
        let err = rel_err(k.row(0).as_slice().unwrap(), &oracle);
        assert!(err < 1e-6, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn univariate_matches_soft_threshold() {
    let mut r = common::rng(11);
    for _ in 0..100 {
        let n = 30;
        let phi: Vec<f64> = (0..n).map(|_| 3.0 * common::normal(&mut r)).collect();
        let y: Vec<f64> = (0..n).map(|_| 2.0 * common::normal(&mut r)).collect();
        let ptp: f64 = phi.iter().map(|v| v * v).sum();
        let pty: f64 = phi.iter().zip(&y).map(|(a, b)| a * b).sum();
        let mu = rand::Rng::random_range(&mut r, 0.0..1.5) * pty.abs();
        let expected = soft_threshold(pty, mu) / ptp;
        let gram = Array2::from_elem((1, 1), ptp);
        let sol = coordinate_descent(gram.view(), &[pty], mu, &[true], &[false], &LassoOptions::default(), None);
        assert!(sol.converged);
        assert!((sol.coef[0] - expected).abs() <= 1e-10 * expected.abs().max(1.0), "{} vs {expected}", sol.coef[0]);
    }
}

/// Subgradient conditions recomputed from the raw rows and the
/// destandardized coefficients, independently of the solver's Gram.
fn raw_kkt(problem: &LassoProblem, phi: &Array2<f64>, y: &[f64], k: &Array1<f64>, mu: f64) -> f64 {
    let n = phi.nrows() as f64;
    let pred = phi.dot(k);
    let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
    let sy = problem.target_scale[0];
    let mut worst = 0.0f64;
    for j in 1..phi.ncols() {
        let sj = problem.standardization.scale[j];
        let c: f64 = phi.column(j).iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>() / (n * sj * sy);
        let v = if k[j] == 0.0 { (c.abs() - mu).max(0.0) } else { (c - mu * k[j].signum()).abs() };
        worst = worst.max(v);
    }
    worst
}

#[test]
fn fits_satisfy_subgradient_conditions() {
    for seed in 0..10 {
        let (x, y, _) = tall_problem(100 + seed, 200, 20);
        let phi = with_bias(&x);
        let problem = LassoProblem::new(phi.view(), column(&y).view(), true).unwrap();
        for mu in [1e-4, 1e-3, 1e-2, 1e-1] {
            let fit = problem.solve(mu, &LassoOptions::default(), None).unwrap();
            assert!(fit.kkt_residual[0] <= 1e-8);
            let k = problem.destandardize(&fit).row(0).to_owned();
            let v = raw_kkt(&problem, &phi, &y, &k, mu);
            assert!(v <= 1e-6, "seed {seed} mu {mu}: {v:e}");
        }
    }
}

#[test]
fn duplicate_columns_are_tolerated() {
    let (x, y, _) = tall_problem(7, 120, 6);
    let mut phi = with_bias(&x);
    // Exact copy and exact scaled copy of column 2.
    let c = phi.column(2).to_owned();
    phi.push_column(c.view()).unwrap();
    phi.push_column((&c * 3.0).view()).unwrap();
    let problem = LassoProblem::new(phi.view(), column(&y).view(), true).unwrap();
    for mu in [0.0, 1e-3] {
        let fit = problem.solve(mu, &LassoOptions::default(), None).unwrap();
        let k = problem.destandardize(&fit);
        assert!(k.iter().all(|v| v.is_finite()));
        // Later copies of an earlier column are dropped from the fit.
        assert_eq!(k[(0, 7)], 0.0);
        assert_eq!(k[(0, 8)], 0.0);
        assert!(fit.kkt_residual[0] <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn warm_and_cold_starts_agree(seed in 0u64..1000, mu_exp in -4.0f64..-1.0) {
        let (x, y, _) = tall_problem(seed, 80, 8);
        let phi = with_bias(&x);
        let problem = LassoProblem::new(phi.view(), column(&y).view(), true).unwrap();
        let mu = 10f64.powf(mu_exp);
        let cold = problem.solve(mu, &LassoOptions::default(), None).unwrap();
        let other = problem.solve(mu * 7.0, &LassoOptions::default(), None).unwrap();
        let warm = problem.solve(mu, &LassoOptions::default(), Some(&other.coef)).unwrap();
        let d = max_abs_diff(cold.coef.as_slice().unwrap(), warm.coef.as_slice().unwrap());
        prop_assert!(d < 1e-6, "max diff {d:e}");
    }

    #[test]
    fn column_scaling_leaves_predictions_unchanged(seed in 0u64..1000, col in 0usize..8, scale_exp in -3.0f64..3.0) {
        let (x, y, _) = tall_problem(seed, 80, 8);
        let phi = with_bias(&x);
        let mut scaled = phi.clone();
        let c = 10f64.powf(scale_exp);
        scaled.column_mut(col + 1).mapv_inplace(|v| v * c);
        let opts = LassoOptions::default();
        let a = LassoProblem::new(phi.view(), column(&y).view(), true).unwrap();
        let b = LassoProblem::new(scaled.view(), column(&y).view(), true).unwrap();
        let ka = a.destandardize(&a.solve(1e-3, &opts, None).unwrap());
        let kb = b.destandardize(&b.solve(1e-3, &opts, None).unwrap());
        let pa = phi.dot(&ka.row(0));
        let pb = scaled.dot(&kb.row(0));
        let d = max_abs_diff(pa.as_slice().unwrap(), pb.as_slice().unwrap());
        let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(d <= 1e-7 * ymax, "prediction diff {d:e}");
        prop_assert!((kb[(0, col + 1)] * c - ka[(0, col + 1)]).abs() <= 1e-7 * ka[(0, col + 1)].abs().max(1e-3));
    }

    #[test]
    fn objective_not_above_perturbed(seed in 0u64..1000, mu_exp in -4.0f64..0.0, j in 0usize..8, eps in -0.1f64..0.1) {
        let (x, y, _) = tall_problem(seed, 60, 8);
        let phi = with_bias(&x);
        let problem = LassoProblem::new(phi.view(), column(&y).view(), true).unwrap();
        let mu = 10f64.powf(mu_exp);
        let fit = problem.solve(mu, &LassoOptions::default(), None).unwrap();
        let coef = fit.coef.row(0).to_vec();
        let mut moved = coef.clone();
        moved[j] += eps;
        prop_assert!(problem.objective(0, &coef, mu) <= problem.objective(0, &moved, mu) + 1e-12);
    }
}
