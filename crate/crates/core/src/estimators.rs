//! Equation-by-equation estimators for the stacked VAR regression.
//!
//! Every estimator works on one equation of a [`RegressionProblem`] at a
//! time and shares the Gram matrix `X'X/T` across equations. Penalty levels
//! are selected by BIC along a warm-started path, with ties going to the
//! larger penalty.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, QrFactor};
use crate::solver::{self, PenaltySpec, Quadratic, RidgePath, SolverResult};
use crate::var::{self, Dataset, RegressionProblem, VarModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    Lasso,
    PostLasso,
    AdaptiveLassoLasso,
    AdaptiveLassoRidge,
    OracleOls,
    FullOls,
}

impl EstimatorTag {
    pub const ALL: [EstimatorTag; 6] = [
        EstimatorTag::Lasso,
        EstimatorTag::PostLasso,
        EstimatorTag::AdaptiveLassoLasso,
        EstimatorTag::AdaptiveLassoRidge,
        EstimatorTag::OracleOls,
        EstimatorTag::FullOls,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorTag::Lasso => "lasso",
            EstimatorTag::PostLasso => "post_lasso",
            EstimatorTag::AdaptiveLassoLasso => "adaptive_lasso_lasso",
            EstimatorTag::AdaptiveLassoRidge => "adaptive_lasso_ridge",
            EstimatorTag::OracleOls => "oracle_ols",
            EstimatorTag::FullOls => "full_ols",
        }
    }
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown estimator '{s}'")))
    }
}

/// First-step estimator of the adaptive LASSO.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptiveInit {
    Lasso,
    Ridge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquationFit {
    pub beta: Vec<f64>,
    pub active_set: Vec<usize>,
    pub lambda_selected: f64,
    pub estimator: EstimatorTag,
    pub bic_value: f64,
    pub df: f64,
}

impl EquationFit {
    fn new(beta: Vec<f64>, lambda: f64, estimator: EstimatorTag, bic_value: f64, df: f64) -> Self {
        EquationFit {
            active_set: support(&beta),
            beta,
            lambda_selected: lambda,
            estimator,
            bic_value,
            df,
        }
    }
}

/// True sparsity pattern of a coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityInfo {
    pub supports: Vec<Vec<usize>>,
    pub s: Vec<usize>,
    pub s_bar: usize,
    /// `min_{j in J_i} |beta*_{i,j}|`, infinite for an empty support.
    pub beta_min_i: Vec<f64>,
    pub beta_min: f64,
}

impl SparsityInfo {
    /// `coefficients` is k x kp, one row per equation.
    pub fn from_coefficients(coefficients: &Matrix) -> Self {
        let supports: Vec<Vec<usize>> = (0..coefficients.rows()).map(|i| support(coefficients.row(i))).collect();
        let s: Vec<usize> = supports.iter().map(Vec::len).collect();
        let beta_min_i: Vec<f64> = supports
            .iter()
            .enumerate()
            .map(|(i, sup)| sup.iter().map(|&j| coefficients[(i, j)].abs()).fold(f64::INFINITY, f64::min))
            .collect();
        SparsityInfo {
            s_bar: s.iter().copied().max().unwrap_or(0),
            beta_min: beta_min_i.iter().copied().fold(f64::INFINITY, f64::min),
            supports,
            s,
            beta_min_i,
        }
    }

    pub fn from_model(model: &VarModel) -> Self {
        SparsityInfo::from_coefficients(&model.coefficient_matrix())
    }

    pub fn total(&self) -> usize {
        self.s.iter().sum()
    }
}

pub fn support(beta: &[f64]) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
}

/// Per-system fit: one [`EquationFit`] per equation.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemFit {
    pub estimator: EstimatorTag,
    pub k: usize,
    pub p: usize,
    pub equations: Vec<EquationFit>,
}

impl SystemFit {
    /// k x kp coefficient matrix, row `i` from equation `i`.
    pub fn coefficients(&self) -> Matrix {
        let m = self.k * self.p;
        Matrix::from_fn(self.k, m, |i, j| self.equations[i].beta[j])
    }

    pub fn record(&self) -> SystemFitRecord {
        SystemFitRecord {
            estimator: self.estimator,
            k: self.k,
            p: self.p,
            lambda_per_equation: self.equations.iter().map(|e| e.lambda_selected).collect(),
            beta: self.coefficients().into_vec(),
            active_sets: self.equations.iter().map(|e| e.active_set.clone()).collect(),
        }
    }

    pub fn forecast(&self, data: &Dataset) -> Vec<f64> {
        var::forecast_one_step(&self.coefficients(), data)
    }
}

/// JSON export of a [`SystemFit`]; `beta` is the dense k x kp coefficient
/// matrix in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFitRecord {
    pub estimator: EstimatorTag,
    pub k: usize,
    pub p: usize,
    pub lambda_per_equation: Vec<f64>,
    pub beta: Vec<f64>,
    pub active_sets: Vec<Vec<usize>>,
}

impl SystemFitRecord {
    pub fn coefficients(&self) -> Result<Matrix> {
        Matrix::from_vec(self.k, self.k * self.p, self.beta.clone())
    }

    pub fn forecast(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.k() != self.k || data.p() != self.p {
            return Err(Error::InvalidInput(format!(
                "fit is for k={}, p={} but data has k={}, p={}",
                self.k,
                self.p,
                data.k(),
                data.p()
            )));
        }
        Ok(var::forecast_one_step(&self.coefficients()?, data))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub n_lambda: usize,
    pub ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Rescale columns to unit mean square before penalizing.
    pub standardize: bool,
    /// Fit the final penalized stage at this level instead of selecting by BIC.
    pub lambda: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            n_lambda: solver::DEFAULT_N_LAMBDA,
            ratio: solver::DEFAULT_RATIO,
            tol: solver::DEFAULT_TOL,
            max_iter: solver::DEFAULT_MAX_ITER,
            standardize: false,
            lambda: None,
        }
    }
}

/// `log(RSS) + log(T)/T * df`; a perfect fit gives `-inf`.
pub fn bic(rss: f64, df: f64, t: usize) -> f64 {
    if rss <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let t = t as f64;
    rss.ln() + t.ln() / t * df
}

pub fn rss(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    let nz = support(beta);
    (0..x.rows())
        .map(|r| {
            let row = x.row(r);
            let fit: f64 = nz.iter().map(|&j| row[j] * beta[j]).sum();
            (y[r] - fit).powi(2)
        })
        .sum()
}

/// Index of the smallest BIC value. Candidates are given in decreasing
/// penalty order; ties keep the earlier (larger penalty) candidate.
pub fn argmin_bic(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Sufficient statistics for equation `i`, sharing the problem's Gram matrix.
pub fn equation_quadratic(problem: &RegressionProblem, i: usize) -> Quadratic<'_> {
    Quadratic::with_gram(&problem.psi, &problem.x, &problem.ys[i])
}

/// Runs a weighted path (or a single fit when `opts.lambda` is set) and
/// returns `(lambda, beta, bic)` of the BIC-selected point with `df = |active|`.
fn select_weighted(problem: &RegressionProblem, i: usize, weights: &[f64], opts: &FitOptions) -> Result<(f64, Vec<f64>, f64)> {
    let base = equation_quadratic(problem, i);
    let rescaled;
    let (q, scales) = if opts.standardize {
        let (std_q, s) = base.standardized();
        rescaled = std_q;
        (&rescaled, Some(s))
    } else {
        (&base, None)
    };
    let unscale = |b: &[f64]| -> Vec<f64> {
        match &scales {
            Some(s) => b.iter().zip(s).map(|(v, s)| v / s).collect(),
            None => b.to_vec(),
        }
    };
    let y = &problem.ys[i];
    let t = problem.t();
    let candidates: Vec<(f64, SolverResult)> = match opts.lambda {
        Some(lambda) => {
            let pen = PenaltySpec::new(lambda, weights.to_vec())?;
            vec![(lambda, q.lasso_cd(&pen, opts.tol, opts.max_iter, None))]
        }
        None => q.lasso_path(weights, opts.n_lambda, opts.ratio, opts.tol, opts.max_iter)?,
    };
    let scored: Vec<(f64, Vec<f64>, f64)> = candidates
        .into_iter()
        .map(|(lambda, r)| {
            let beta = unscale(&r.beta);
            let df = support(&beta).len() as f64;
            let b = bic(rss(&problem.x, y, &beta), df, t);
            (lambda, beta, b)
        })
        .collect();
    let bics: Vec<f64> = scored.iter().map(|c| c.2).collect();
    Ok(scored.into_iter().nth(argmin_bic(&bics)).expect("path is non-empty"))
}

/// LASSO with BIC-selected penalty, `df = |active set|`.
pub fn fit_lasso_bic(problem: &RegressionProblem, i: usize, opts: &FitOptions) -> Result<EquationFit> {
    let m = problem.n_regressors();
    let (lambda, beta, b) = select_weighted(problem, i, &vec![1.0; m], opts)?;
    let df = support(&beta).len() as f64;
    Ok(EquationFit::new(beta, lambda, EstimatorTag::Lasso, b, df))
}

fn ols_on(problem: &RegressionProblem, i: usize, cols: &[usize], tag: EstimatorTag, lambda: f64) -> Result<EquationFit> {
    let m = problem.n_regressors();
    let t = problem.t();
    let mut beta = vec![0.0; m];
    if !cols.is_empty() {
        if cols.len() >= t {
            return Err(Error::TooManySelected { selected: cols.len(), t });
        }
        let sub = linalg::least_squares(&problem.x.select_columns(cols), &problem.ys[i])?;
        for (&j, b) in cols.iter().zip(sub) {
            beta[j] = b;
        }
    }
    let df = support(&beta).len() as f64;
    let b = bic(rss(&problem.x, &problem.ys[i], &beta), df, t);
    Ok(EquationFit::new(beta, lambda, tag, b, df))
}

/// Least squares on the variables a LASSO fit selected.
pub fn post_lasso_from(problem: &RegressionProblem, i: usize, lasso: &EquationFit) -> Result<EquationFit> {
    ols_on(problem, i, &lasso.active_set, EstimatorTag::PostLasso, lasso.lambda_selected)
}

pub fn fit_post_lasso(problem: &RegressionProblem, i: usize, opts: &FitOptions) -> Result<EquationFit> {
    let lasso = fit_lasso_bic(problem, i, opts)?;
    post_lasso_from(problem, i, &lasso)
}

/// Ridge first step: BIC over the LASSO grid scaled by `T`, with
/// `df = trace(X (X'X + lambda I)^{-1} X')`.
pub fn fit_ridge_bic(problem: &RegressionProblem, i: usize, ridge_path: &RidgePath, opts: &FitOptions) -> Result<(f64, Vec<f64>)> {
    let m = problem.n_regressors();
    let t = problem.t();
    let y = &problem.ys[i];
    let q = equation_quadratic(problem, i);
    let lmax = q.lambda_max(&vec![1.0; m])?;
    let xty = problem.x.tr_matvec(y);
    let grid: Vec<f64> = if lmax > 0.0 {
        solver::lambda_grid(lmax * t as f64, opts.n_lambda, opts.ratio)
    } else {
        vec![1.0]
    };
    let fits: Vec<(f64, Vec<f64>, f64)> = grid
        .into_iter()
        .map(|lambda| {
            let (beta, df) = ridge_path.fit(&xty, lambda);
            let b = bic(rss(&problem.x, y, &beta), df, t);
            (lambda, beta, b)
        })
        .collect();
    let bics: Vec<f64> = fits.iter().map(|f| f.2).collect();
    let (lambda, beta, _) = fits.into_iter().nth(argmin_bic(&bics)).expect("grid is non-empty");
    Ok((lambda, beta))
}

/// Adaptive weights `1/|b_j|`, infinite (excluded) where the first step is zero.
pub fn adaptive_weights(first_step: &[f64]) -> Vec<f64> {
    first_step
        .iter()
        .map(|b| if *b != 0.0 { 1.0 / b.abs() } else { f64::INFINITY })
        .collect()
}

/// Second stage of the adaptive LASSO given first-step coefficients. An
/// all-zero first step returns the zero fit with `lambda_selected = 0`.
pub fn adaptive_from(problem: &RegressionProblem, i: usize, first_step: &[f64], tag: EstimatorTag, opts: &FitOptions) -> Result<EquationFit> {
    let weights = adaptive_weights(first_step);
    let t = problem.t();
    if weights.iter().all(|w| w.is_infinite()) {
        let zero = vec![0.0; problem.n_regressors()];
        let b = bic(rss(&problem.x, &problem.ys[i], &zero), 0.0, t);
        return Ok(EquationFit::new(zero, 0.0, tag, b, 0.0));
    }
    let (lambda, beta, b) = select_weighted(problem, i, &weights, opts)?;
    let df = support(&beta).len() as f64;
    Ok(EquationFit::new(beta, lambda, tag, b, df))
}

pub fn fit_adaptive_lasso(problem: &RegressionProblem, i: usize, init: AdaptiveInit, opts: &FitOptions) -> Result<EquationFit> {
    match init {
        AdaptiveInit::Lasso => {
            let first = fit_lasso_bic(problem, i, &FitOptions { lambda: None, ..opts.clone() })?;
            adaptive_from(problem, i, &first.beta, EstimatorTag::AdaptiveLassoLasso, opts)
        }
        AdaptiveInit::Ridge => {
            let path = RidgePath::new(&problem.x.gram());
            let (_, first) = fit_ridge_bic(problem, i, &path, opts)?;
            adaptive_from(problem, i, &first, EstimatorTag::AdaptiveLassoRidge, opts)
        }
    }
}

/// Least squares on the true support of equation `i`.
pub fn fit_oracle_ols(problem: &RegressionProblem, i: usize, truth: &SparsityInfo) -> Result<EquationFit> {
    let cols = &truth.supports[i];
    if cols.len() >= problem.t() {
        return Err(Error::SingularDesign);
    }
    ols_on(problem, i, cols, EstimatorTag::OracleOls, 0.0)
}

pub fn fit_full_ols(problem: &RegressionProblem, i: usize) -> Result<EquationFit> {
    let qr = QrFactor::new(&problem.x)?;
    full_ols_with(problem, i, &qr)
}

fn full_ols_with(problem: &RegressionProblem, i: usize, qr: &QrFactor) -> Result<EquationFit> {
    let m = problem.n_regressors();
    if m >= problem.t() {
        return Err(Error::SingularDesign);
    }
    let beta = qr.solve(&problem.ys[i]);
    let df = support(&beta).len() as f64;
    let b = bic(rss(&problem.x, &problem.ys[i], &beta), df, problem.t());
    Ok(EquationFit::new(beta, 0.0, EstimatorTag::FullOls, b, df))
}

/// Whether an estimation error marks the estimator as infeasible for the
/// configuration rather than a genuine failure.
pub fn is_infeasible(e: &Error) -> bool {
    matches!(e, Error::SingularDesign | Error::TooManySelected { .. } | Error::NotPositiveDefinite { .. })
}

/// Applies one estimator to every equation of the stacked problem.
pub fn fit_problem(problem: &RegressionProblem, tag: EstimatorTag, truth: Option<&SparsityInfo>, opts: &FitOptions) -> Result<SystemFit> {
    let k = problem.k;
    let equations = match tag {
        EstimatorTag::Lasso => (0..k).map(|i| fit_lasso_bic(problem, i, opts)).collect::<Result<Vec<_>>>()?,
        EstimatorTag::PostLasso => (0..k).map(|i| fit_post_lasso(problem, i, opts)).collect::<Result<Vec<_>>>()?,
        EstimatorTag::AdaptiveLassoLasso => (0..k)
            .map(|i| fit_adaptive_lasso(problem, i, AdaptiveInit::Lasso, opts))
            .collect::<Result<Vec<_>>>()?,
        EstimatorTag::AdaptiveLassoRidge => {
            let path = RidgePath::new(&problem.x.gram());
            (0..k)
                .map(|i| {
                    let (_, first) = fit_ridge_bic(problem, i, &path, opts)?;
                    adaptive_from(problem, i, &first, EstimatorTag::AdaptiveLassoRidge, opts)
                })
                .collect::<Result<Vec<_>>>()?
        }
        EstimatorTag::OracleOls => {
            let truth = truth.ok_or_else(|| Error::InvalidInput("oracle_ols needs the true sparsity pattern".into()))?;
            if truth.supports.len() != k {
                return Err(Error::InvalidInput("sparsity pattern has the wrong number of equations".into()));
            }
            (0..k).map(|i| fit_oracle_ols(problem, i, truth)).collect::<Result<Vec<_>>>()?
        }
        EstimatorTag::FullOls => {
            if problem.n_regressors() >= problem.t() {
                return Err(Error::SingularDesign);
            }
            let qr = QrFactor::new(&problem.x)?;
            (0..k).map(|i| full_ols_with(problem, i, &qr)).collect::<Result<Vec<_>>>()?
        }
    };
    Ok(SystemFit {
        estimator: tag,
        k,
        p: problem.p,
        equations,
    })
}

pub fn fit_system(data: &Dataset, tag: EstimatorTag, truth: Option<&SparsityInfo>, opts: &FitOptions) -> Result<SystemFit> {
    fit_problem(&var::stack(data), tag, truth, opts)
}

/// LASSO, post-LASSO and both adaptive variants share first steps; this fits
/// all requested tags on one problem while computing each first step once.
pub fn fit_many(problem: &RegressionProblem, tags: &[EstimatorTag], truth: Option<&SparsityInfo>, opts: &FitOptions) -> Vec<(EstimatorTag, Result<SystemFit>)> {
    let k = problem.k;
    let needs_lasso = tags
        .iter()
        .any(|t| matches!(t, EstimatorTag::Lasso | EstimatorTag::PostLasso | EstimatorTag::AdaptiveLassoLasso));
    let lasso: Option<Result<Vec<EquationFit>>> = needs_lasso.then(|| (0..k).map(|i| fit_lasso_bic(problem, i, opts)).collect());
    let first_stage_opts = FitOptions { lambda: None, ..opts.clone() };
    let lasso_first: Option<Result<Vec<EquationFit>>> = if tags.contains(&EstimatorTag::AdaptiveLassoLasso) && opts.lambda.is_some() {
        Some((0..k).map(|i| fit_lasso_bic(problem, i, &first_stage_opts)).collect())
    } else {
        None
    };
    let wrap = |tag: EstimatorTag, eqs: Result<Vec<EquationFit>>| -> Result<SystemFit> {
        Ok(SystemFit {
            estimator: tag,
            k,
            p: problem.p,
            equations: eqs?,
        })
    };
    // On a shared first-step failure, refit the tag alone to surface the original error.
    tags.iter()
        .map(|&tag| {
            let fit = match (tag, lasso.as_ref(), lasso_first.as_ref().or(lasso.as_ref())) {
                (EstimatorTag::Lasso, Some(Ok(eqs)), _) => wrap(tag, Ok(eqs.clone())),
                (EstimatorTag::PostLasso, Some(Ok(eqs)), _) => {
                    wrap(tag, (0..k).map(|i| post_lasso_from(problem, i, &eqs[i])).collect())
                }
                (EstimatorTag::AdaptiveLassoLasso, _, Some(Ok(eqs))) => {
                    wrap(tag, (0..k).map(|i| adaptive_from(problem, i, &eqs[i].beta, tag, opts)).collect())
                }
                (other, _, _) => fit_problem(problem, other, truth, opts),
            };
            (tag, fit)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag_model(k: usize, phi: f64, noise: f64) -> VarModel {
        VarModel::new(vec![Matrix::identity(k).scale(phi)], Matrix::identity(k).scale(noise)).unwrap()
    }

    #[test]
    fn tag_round_trip() {
        for tag in EstimatorTag::ALL {
            assert_eq!(tag.as_str().parse::<EstimatorTag>().unwrap(), tag);
            assert_eq!(serde_json::to_string(&tag).unwrap(), format!("\"{tag}\""));
        }
        assert!("ridge".parse::<EstimatorTag>().is_err());
    }

    #[test]
    fn bic_cases() {
        assert_relative_eq!(bic(std::f64::consts::E, 0.0, 123), 1.0, epsilon = 1e-15);
        let t = 500usize;
        assert_relative_eq!(bic(1.0, t as f64 / (t as f64).ln(), t), 1.0, epsilon = 1e-14);
        assert_eq!(bic(0.0, 3.0, 10), f64::NEG_INFINITY);
    }

    #[test]
    fn argmin_prefers_larger_penalty_on_ties() {
        assert_eq!(argmin_bic(&[3.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(argmin_bic(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), 0);
        assert_eq!(argmin_bic(&[5.0]), 0);
    }

    #[test]
    fn sparsity_info_from_coefficients() {
        let c = Matrix::from_rows(&[vec![0.5, 0.0, -0.2], vec![0.0, 0.0, 0.0]]).unwrap();
        let info = SparsityInfo::from_coefficients(&c);
        assert_eq!(info.supports, vec![vec![0, 2], vec![]]);
        assert_eq!(info.s, vec![2, 0]);
        assert_eq!(info.s_bar, 2);
        assert_relative_eq!(info.beta_min_i[0], 0.2);
        assert!(info.beta_min_i[1].is_infinite());
        assert_relative_eq!(info.beta_min, 0.2);
    }

    #[test]
    fn oracle_with_full_support_equals_full_ols() {
        let m = VarModel::new(
            vec![Matrix::from_rows(&[vec![0.5, 0.1], vec![0.2, 0.3]]).unwrap()],
            Matrix::identity(2).scale(0.01),
        )
        .unwrap();
        let d = m.simulate(80, 50, 3).unwrap();
        let prob = var::stack(&d);
        let truth = SparsityInfo::from_model(&m);
        for i in 0..2 {
            let o = fit_oracle_ols(&prob, i, &truth).unwrap();
            let f = fit_full_ols(&prob, i).unwrap();
            for (a, b) in o.beta.iter().zip(&f.beta) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_with_empty_support_is_zero() {
        let d = diag_model(2, 0.5, 0.01).simulate(40, 10, 1).unwrap();
        let prob = var::stack(&d);
        let truth = SparsityInfo::from_coefficients(&Matrix::zeros(2, 2));
        let fit = fit_oracle_ols(&prob, 0, &truth).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        assert!(fit.active_set.is_empty());
    }

    #[test]
    fn full_ols_single_regressor_slope() {
        let d = Dataset::new(
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            Matrix::from_rows(&[vec![0.8], vec![0.3], vec![0.5], vec![-0.1]]).unwrap(),
            None,
        )
        .unwrap();
        let prob = var::stack(&d);
        let fit = fit_full_ols(&prob, 0).unwrap();
        let x = prob.x.column(0);
        let y = &prob.ys[0];
        let slope = linalg::dot(&x, y) / linalg::dot(&x, &x);
        assert_relative_eq!(fit.beta[0], slope, epsilon = 1e-14);
    }

    #[test]
    fn full_ols_infeasible_when_wide() {
        let d = diag_model(6, 0.5, 0.01).simulate(6, 10, 1).unwrap();
        let prob = var::stack(&d);
        assert!(matches!(fit_problem(&prob, EstimatorTag::FullOls, None, &FitOptions::default()), Err(Error::SingularDesign)));
    }

    #[test]
    fn noiseless_lasso_selection_hits_zero_rss_rule() {
        // Start away from zero so the noiseless path is informative.
        let phi = Matrix::identity(3).scale(0.5);
        let m = VarModel::new(vec![phi.clone()], Matrix::zeros(3, 3)).unwrap();
        let mut obs = vec![vec![1.0, -0.7, 0.4]];
        for s in 0..40 {
            let mut next = phi.matvec(obs.last().unwrap());
            next[s % 3] += 0.3;
            obs.push(next);
        }
        // forcing terms make the path informative but the relation exact
        let d = Dataset::new(Matrix::from_rows(&obs[..1]).unwrap(), Matrix::from_rows(&obs[1..]).unwrap(), None).unwrap();
        let prob = var::stack(&d);
        let ys_exact: Vec<Vec<f64>> = (0..3).map(|i| prob.x.matvec(&m.beta(i))).collect();
        let prob = RegressionProblem { ys: ys_exact, ..prob };
        let fit = fit_lasso_bic(&prob, 0, &FitOptions { tol: 1e-12, ..FitOptions::default() }).unwrap();
        assert!(rss(&prob.x, &prob.ys[0], &fit.beta) < 1e-6);
    }

    #[test]
    fn post_lasso_on_true_support_equals_oracle() {
        let m = diag_model(4, 0.5, 0.01);
        let d = m.simulate(300, 50, 11).unwrap();
        let prob = var::stack(&d);
        let truth = SparsityInfo::from_model(&m);
        let opts = FitOptions::default();
        for i in 0..4 {
            let lasso = fit_lasso_bic(&prob, i, &opts).unwrap();
            let post = post_lasso_from(&prob, i, &lasso).unwrap();
            if lasso.active_set == truth.supports[i] {
                let oracle = fit_oracle_ols(&prob, i, &truth).unwrap();
                for (a, b) in post.beta.iter().zip(&oracle.beta) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            assert_eq!(post.active_set.len(), lasso.active_set.len());
        }
    }

    #[test]
    fn post_lasso_empty_selection_is_zero() {
        let prob = var::stack(&diag_model(2, 0.5, 0.01).simulate(30, 10, 2).unwrap());
        let empty = EquationFit::new(vec![0.0; 2], 1.0, EstimatorTag::Lasso, 0.0, 0.0);
        let post = post_lasso_from(&prob, 0, &empty).unwrap();
        assert!(post.beta.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn post_lasso_too_many_selected() {
        let prob = var::stack(&diag_model(3, 0.5, 0.01).simulate(3, 10, 2).unwrap());
        let dense = EquationFit::new(vec![0.1; 3], 1.0, EstimatorTag::Lasso, 0.0, 3.0);
        assert!(matches!(post_lasso_from(&prob, 0, &dense), Err(Error::TooManySelected { selected: 3, t: 3 })));
    }

    #[test]
    fn adaptive_stage_two_stays_inside_stage_one() {
        let m = diag_model(5, 0.5, 0.01);
        for seed in 0..5 {
            let prob = var::stack(&m.simulate(100, 50, seed).unwrap());
            let opts = FitOptions::default();
            for i in 0..5 {
                let first = fit_lasso_bic(&prob, i, &opts).unwrap();
                let second = adaptive_from(&prob, i, &first.beta, EstimatorTag::AdaptiveLassoLasso, &opts).unwrap();
                assert!(second.active_set.iter().all(|j| first.active_set.contains(j)));
            }
        }
    }

    #[test]
    fn adaptive_from_exact_truth_approaches_oracle() {
        let m = diag_model(4, 0.5, 0.01);
        let prob = var::stack(&m.simulate(400, 50, 5).unwrap());
        let truth = SparsityInfo::from_model(&m);
        let opts = FitOptions::default();
        for i in 0..4 {
            let ada = adaptive_from(&prob, i, &m.beta(i), EstimatorTag::AdaptiveLassoLasso, &FitOptions { lambda: Some(1e-12), ..opts.clone() }).unwrap();
            let oracle = fit_oracle_ols(&prob, i, &truth).unwrap();
            for (a, b) in ada.beta.iter().zip(&oracle.beta) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ridge_first_step_is_dense() {
        let prob = var::stack(&diag_model(5, 0.5, 0.01).simulate(100, 50, 8).unwrap());
        let path = RidgePath::new(&prob.x.gram());
        let (_, first) = fit_ridge_bic(&prob, 0, &path, &FitOptions::default()).unwrap();
        assert!(adaptive_weights(&first).iter().all(|w| w.is_finite()));
    }

    #[test]
    fn empty_first_stage_gives_zero_fit() {
        let prob = var::stack(&diag_model(3, 0.5, 0.01).simulate(50, 10, 1).unwrap());
        let fit = adaptive_from(&prob, 0, &[0.0; 3], EstimatorTag::AdaptiveLassoLasso, &FitOptions::default()).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        assert_eq!(fit.df, 0.0);
    }

    #[test]
    fn huge_lambda_override_gives_zero_system() {
        let d = diag_model(3, 0.5, 0.01).simulate(50, 10, 1).unwrap();
        let fit = fit_system(&d, EstimatorTag::Lasso, None, &FitOptions { lambda: Some(1e9), ..Default::default() }).unwrap();
        assert_eq!(fit.coefficients().max_abs(), 0.0);
    }

    #[test]
    fn single_equation_system() {
        let d = diag_model(1, 0.5, 1.0).simulate(200, 10, 4).unwrap();
        let prob = var::stack(&d);
        let sys = fit_problem(&prob, EstimatorTag::Lasso, None, &FitOptions::default()).unwrap();
        let single = fit_lasso_bic(&prob, 0, &FitOptions::default()).unwrap();
        assert_eq!(sys.equations[0], single);
    }

    #[test]
    fn zero_data_gives_zero_fits() {
        let d = diag_model(3, 0.5, 0.0).simulate(40, 10, 1).unwrap();
        let truth = SparsityInfo::from_model(&diag_model(3, 0.5, 0.0));
        for tag in EstimatorTag::ALL {
            match fit_system(&d, tag, Some(&truth), &FitOptions::default()) {
                Ok(fit) => assert_eq!(fit.coefficients().max_abs(), 0.0, "{tag}"),
                Err(e) => {
                    assert!(matches!(tag, EstimatorTag::OracleOls | EstimatorTag::FullOls), "{tag}");
                    assert!(matches!(e, Error::SingularDesign));
                }
            }
        }
    }

    #[test]
    fn oracle_without_truth_is_an_error() {
        let d = diag_model(2, 0.5, 0.01).simulate(40, 10, 1).unwrap();
        assert!(matches!(fit_system(&d, EstimatorTag::OracleOls, None, &FitOptions::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn full_ols_matches_unpenalized_lasso() {
        let d = diag_model(3, 0.5, 0.01).simulate(200, 10, 6).unwrap();
        let prob = var::stack(&d);
        let ols = fit_problem(&prob, EstimatorTag::FullOls, None, &FitOptions::default()).unwrap();
        let opts = FitOptions { lambda: Some(0.0), tol: 1e-13, ..Default::default() };
        let lasso = fit_problem(&prob, EstimatorTag::Lasso, None, &opts).unwrap();
        assert!(ols.coefficients().max_abs_diff(&lasso.coefficients()) < 1e-6);
    }

    #[test]
    fn fit_many_matches_individual_fits() {
        let m = diag_model(3, 0.5, 0.01);
        let d = m.simulate(120, 10, 9).unwrap();
        let prob = var::stack(&d);
        let truth = SparsityInfo::from_model(&m);
        let opts = FitOptions::default();
        for (tag, fit) in fit_many(&prob, &EstimatorTag::ALL, Some(&truth), &opts) {
            let single = fit_problem(&prob, tag, Some(&truth), &opts).unwrap();
            assert_eq!(fit.unwrap(), single, "{tag}");
        }
    }

    #[test]
    fn record_round_trip_preserves_forecast() {
        let d = diag_model(3, 0.5, 0.01).simulate(100, 10, 12).unwrap();
        let fit = fit_system(&d, EstimatorTag::Lasso, None, &FitOptions::default()).unwrap();
        let json = serde_json::to_string(&fit.record()).unwrap();
        let back: SystemFitRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.forecast(&d).unwrap(), fit.forecast(&d));
    }

    #[test]
    fn standardized_fit_is_close_on_unit_scale_data() {
        let d = diag_model(3, 0.5, 1.0).simulate(300, 10, 13).unwrap();
        let prob = var::stack(&d);
        let a = fit_lasso_bic(&prob, 0, &FitOptions::default()).unwrap();
        let b = fit_lasso_bic(&prob, 0, &FitOptions { standardize: true, ..Default::default() }).unwrap();
        assert_eq!(a.active_set.contains(&0), b.active_set.contains(&0));
    }
}
