mod common;

use proptest::prelude::{prop_assert, proptest, ProptestConfig};
use rand::Rng;
use rand_distr::StandardNormal;
use sparsevar::linalg::{self, Cholesky, Matrix};
use sparsevar::mc::{self, Experiment};
use sparsevar::solver::{self, PenaltySpec, Quadratic};
use sparsevar::var;

fn random_problem(seed: u64, t: usize, m: usize) -> (Matrix, Vec<f64>) {
    let mut rng = common::rng(seed);
    let x = Matrix::from_fn(t, m, |_, _| rng.sample(StandardNormal));
    let beta: Vec<f64> = (0..m).map(|j| if j % 3 == 0 { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
    let y: Vec<f64> = x.matvec(&beta).iter().map(|v| v + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    (x, y)
}

#[test]
fn two_variable_fit_matches_grid_minimizer() {
    for seed in 0..8 {
        let (x, y) = random_problem(seed, 20, 2);
        let lambda = 0.05 * (seed + 1) as f64;
        let w = [1.0, 1.0];
        let fit = solver::lasso_cd(&x, &y, &PenaltySpec::unit(lambda, 2).unwrap(), 1e-12, 100_000, None);
        let (grid_obj, grid_beta) = common::grid_lasso_2d(&x, &y, lambda, &w);
        let cd_obj = common::lasso_objective(&x, &y, &fit.beta, lambda, &w);
        assert!(cd_obj <= grid_obj + 1e-10, "seed {seed}: {cd_obj} vs {grid_obj}");
        assert!((cd_obj - grid_obj).abs() <= 1e-5);
        for j in 0..2 {
            assert!((fit.beta[j] - grid_beta[j]).abs() < 1e-3, "seed {seed}: {:?} vs {grid_beta:?}", fit.beta);
        }
    }
}

#[test]
fn weighted_fit_matches_grid_minimizer() {
    let (x, y) = random_problem(99, 30, 2);
    let w = [0.5, 3.0];
    let fit = solver::lasso_cd(&x, &y, &PenaltySpec::new(0.1, w.to_vec()).unwrap(), 1e-12, 100_000, None);
    let (grid_obj, _) = common::grid_lasso_2d(&x, &y, 0.1, &w);
    assert!((common::lasso_objective(&x, &y, &fit.beta, 0.1, &w) - grid_obj).abs() <= 1e-5);
}

#[test]
fn ridge_matches_gaussian_elimination() {
    let mut rng = common::rng(3);
    let x = Matrix::from_fn(20, 5, |_, _| rng.sample(StandardNormal));
    let y: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
    let lambda = 0.7;
    let (beta, df) = solver::ridge(&x, &y, lambda).unwrap();
    let g = x.gram();
    let a: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| g[(i, j)] + if i == j { lambda } else { 0.0 }).collect()).collect();
    let oracle = common::gauss_solve(&a, &x.tr_matvec(&y));
    for (b, o) in beta.iter().zip(&oracle) {
        assert!((b - o).abs() < 1e-8);
    }
    let mut trace = 0.0;
    for j in 0..5 {
        let col: Vec<f64> = (0..5).map(|i| g[(i, j)]).collect();
        trace += common::gauss_solve(&a, &col)[j];
    }
    assert!((df - trace).abs() < 1e-8);
}

#[test]
fn cholesky_solve_residual_on_random_spd() {
    let mut rng = common::rng(11);
    let a = common::random_spd(8, &mut rng);
    let b: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
    let x = Cholesky::new(&a).unwrap().solve_vec(&b);
    let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(u, v)| u - v).collect();
    assert!(linalg::norm2(&r) <= 1e-8);
}

#[test]
fn active_set_grows_along_path_on_experiment_a() {
    let (model, _) = mc::make_dgp(Experiment::A, 10).unwrap();
    let (mut pairs, mut ordered) = (0usize, 0usize);
    for seed in 0..5 {
        let data = model.simulate(100, var::default_burn_in(1), seed).unwrap();
        let problem = var::stack(&data);
        for i in 0..10 {
            let path = solver::lasso_path(&problem.x, &problem.ys[i], &[1.0; 10], 50, 1e-3).unwrap();
            for w in path.windows(2) {
                let n = |b: &[f64]| b.iter().filter(|v| **v != 0.0).count();
                pairs += 1;
                ordered += (n(&w[1].1.beta) >= n(&w[0].1.beta)) as usize;
            }
        }
    }
    assert!(ordered as f64 >= 0.95 * pairs as f64, "{ordered}/{pairs}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn converged_fits_satisfy_kkt_and_beat_perturbations(seed in 0u64..10_000, m in 1usize..8, frac in 0.01f64..1.2) {
        let (x, y) = random_problem(seed, 30, m);
        let lmax = solver::lambda_max(&x, &y, &vec![1.0; m]).unwrap();
        let pen = PenaltySpec::unit(frac * lmax, m).unwrap();
        let fit = solver::lasso_cd(&x, &y, &pen, 1e-10, 200_000, None);
        prop_assert!(fit.converged);
        prop_assert!(solver::kkt_check(&x, &y, &fit.beta, &pen) <= 1e-8);
        let obj = common::lasso_objective(&x, &y, &fit.beta, pen.lambda, &vec![1.0; m]);
        let mut rng = common::rng(seed ^ 0xabc);
        for _ in 0..20 {
            let b: Vec<f64> = fit.beta.iter().map(|v| v + 1e-3 * rng.sample::<f64, _>(StandardNormal)).collect();
            prop_assert!(obj <= common::lasso_objective(&x, &y, &b, pen.lambda, &vec![1.0; m]) + 1e-12);
        }
        if frac > 1.0 {
            prop_assert!(fit.beta.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn gram_route_agrees_with_data_route(seed in 0u64..10_000, m in 1usize..6) {
        let (x, y) = random_problem(seed, 25, m);
        let pen = PenaltySpec::unit(0.05, m).unwrap();
        let direct = solver::lasso_cd(&x, &y, &pen, 1e-11, 200_000, None);
        let t = 25.0;
        let xty = x.tr_matvec(&y).iter().map(|v| v / t).collect();
        let q = Quadratic::from_parts(x.gram().scale(1.0 / t), xty, linalg::dot(&y, &y) / t, 25);
        let via_gram = q.lasso_cd(&pen, 1e-11, 200_000, None);
        for (a, b) in direct.beta.iter().zip(&via_gram.beta) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }
}
