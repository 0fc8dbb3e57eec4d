//! Weighted l1-penalized least squares by cyclic coordinate descent, plus
//! ridge regression.
//!
//! The objective is
//!
//! ```text
//! (1/T) ||y - X b||^2 + 2 lambda sum_j w_j |b_j|
//! ```
//!
//! so the stationarity condition reads `(1/T) X_j'(y - X b) = lambda w_j sign(b_j)`.
//! A weight of `f64::INFINITY` removes the variable from the problem.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, Matrix};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_N_LAMBDA: usize = 100;
pub const DEFAULT_RATIO: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct PenaltySpec {
    pub lambda: f64,
    pub weights: Vec<f64>,
}

impl PenaltySpec {
    pub fn new(lambda: f64, weights: Vec<f64>) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("penalty level must be finite and >= 0, got {lambda}")));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("penalty weights must be >= 0".into()));
        }
        Ok(PenaltySpec { lambda, weights })
    }

    pub fn unit(lambda: f64, m: usize) -> Result<Self> {
        PenaltySpec::new(lambda, vec![1.0; m])
    }

    fn threshold(&self, j: usize) -> f64 {
        let w = self.weights[j];
        if w == 0.0 {
            0.0
        } else {
            self.lambda * w
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverResult {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub max_kkt_violation: f64,
    pub converged: bool,
}

/// Soft thresholding `sign(z) max(|z| - gamma, 0)`; `|z| == gamma` maps to 0.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Sufficient statistics of one least-squares problem: `X'X/T`, `X'y/T`,
/// `y'y/T`. The Gram matrix can be borrowed, since every equation of a VAR
/// shares the same design.
#[derive(Clone, Debug)]
pub struct Quadratic<'a> {
    gram: Cow<'a, Matrix>,
    xty: Vec<f64>,
    yty: f64,
    t: usize,
}

impl<'a> Quadratic<'a> {
    pub fn new(x: &Matrix, y: &[f64]) -> Quadratic<'static> {
        assert_eq!(x.rows(), y.len(), "design and response lengths differ");
        let t = x.rows().max(1) as f64;
        Quadratic {
            gram: Cow::Owned(x.gram().scale(1.0 / t)),
            xty: x.tr_matvec(y).into_iter().map(|v| v / t).collect(),
            yty: linalg::dot(y, y) / t,
            t: x.rows(),
        }
    }

    /// `gram` must be `X'X/T` for the design behind `x`.
    pub fn with_gram(gram: &'a Matrix, x: &Matrix, y: &[f64]) -> Self {
        assert_eq!(gram.rows(), x.cols());
        let t = x.rows().max(1) as f64;
        Quadratic {
            gram: Cow::Borrowed(gram),
            xty: x.tr_matvec(y).into_iter().map(|v| v / t).collect(),
            yty: linalg::dot(y, y) / t,
            t: x.rows(),
        }
    }

    pub fn from_parts(gram: Matrix, xty: Vec<f64>, yty: f64, t: usize) -> Quadratic<'static> {
        assert_eq!(gram.rows(), xty.len());
        Quadratic {
            gram: Cow::Owned(gram),
            xty,
            yty,
            t,
        }
    }

    /// The same problem in columns rescaled to unit mean square. Returns the
    /// rescaled problem and the column scales `s_j`; a coefficient `b'_j`
    /// of the rescaled problem maps back to `b'_j / s_j`.
    pub fn standardized(&self) -> (Quadratic<'static>, Vec<f64>) {
        let m = self.dim();
        let scales: Vec<f64> = (0..m)
            .map(|j| {
                let s = self.gram[(j, j)].sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        let gram = Matrix::from_fn(m, m, |a, b| self.gram[(a, b)] / (scales[a] * scales[b]));
        let xty = self.xty.iter().zip(&scales).map(|(c, s)| c / s).collect();
        (Quadratic::from_parts(gram, xty, self.yty, self.t), scales)
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn xty(&self) -> &[f64] {
        &self.xty
    }

    /// `(1/T) X'(y - X b)`
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let mut g = self.xty.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (gi, gj) in g.iter_mut().zip(self.gram.row(j)) {
                    *gi -= gj * b;
                }
            }
        }
        g
    }

    /// `(1/T) ||y - X b||^2`
    pub fn loss(&self, beta: &[f64]) -> f64 {
        let gb = self.gram.matvec(beta);
        (self.yty - 2.0 * linalg::dot(beta, &self.xty) + linalg::dot(beta, &gb)).max(0.0)
    }

    pub fn objective(&self, beta: &[f64], pen: &PenaltySpec) -> f64 {
        let penalty: f64 = beta
            .iter()
            .zip(&pen.weights)
            .filter(|(b, _)| **b != 0.0)
            .map(|(b, w)| w * b.abs())
            .sum();
        self.loss(beta) + 2.0 * pen.lambda * penalty
    }

    pub fn kkt_violation(&self, beta: &[f64], pen: &PenaltySpec) -> f64 {
        kkt_from_gradient(&self.gradient(beta), beta, pen)
    }

    pub fn lambda_max(&self, weights: &[f64]) -> Result<f64> {
        lambda_max_from(&self.xty, weights)
    }

    /// Coordinate descent from `warm_start` (or zero). Sweeps alternate
    /// between the full coordinate set and the current active set; every
    /// sweep counts as one iteration. Convergence is declared when the KKT
    /// residual over all coordinates drops to `tol`.
    pub fn lasso_cd(&self, pen: &PenaltySpec, tol: f64, max_iter: usize, warm_start: Option<&[f64]>) -> SolverResult {
        let m = self.dim();
        assert_eq!(pen.weights.len(), m, "weight vector length differs from the design");
        let free: Vec<usize> = (0..m).filter(|&j| pen.weights[j].is_finite()).collect();
        let mut beta = match warm_start {
            Some(w) => {
                assert_eq!(w.len(), m);
                w.to_vec()
            }
            None => vec![0.0; m],
        };
        for j in 0..m {
            if !pen.weights[j].is_finite() || self.gram[(j, j)] <= 0.0 {
                beta[j] = 0.0;
            }
        }
        let mut grad = self.gradient(&beta);
        let mut iterations = 0;
        let mut kkt = kkt_from_gradient(&grad, &beta, pen);
        while kkt > tol && iterations < max_iter {
            self.sweep(&free, pen, &mut beta, &mut grad);
            iterations += 1;
            grad = self.gradient(&beta);
            kkt = kkt_from_gradient(&grad, &beta, pen);
            if kkt <= tol {
                break;
            }
            let active: Vec<usize> = free.iter().copied().filter(|&j| beta[j] != 0.0).collect();
            while iterations < max_iter && !active.is_empty() {
                self.sweep(&active, pen, &mut beta, &mut grad);
                iterations += 1;
                let active_kkt = active
                    .iter()
                    .map(|&j| coordinate_violation(self.gradient_at(&beta, j), beta[j], pen, j))
                    .fold(0.0, f64::max);
                if active_kkt <= 0.1 * tol {
                    break;
                }
            }
            grad = self.gradient(&beta);
            kkt = kkt_from_gradient(&grad, &beta, pen);
        }
        SolverResult {
            beta,
            iterations,
            max_kkt_violation: kkt,
            converged: kkt <= tol,
        }
    }

    fn gradient_at(&self, beta: &[f64], j: usize) -> f64 {
        self.xty[j] - linalg::dot(self.gram.row(j), beta)
    }

    fn sweep(&self, coords: &[usize], pen: &PenaltySpec, beta: &mut [f64], grad: &mut [f64]) {
        for &j in coords {
            let gjj = self.gram[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let old = beta[j];
            let z = grad[j] + gjj * old;
            let new = soft_threshold(z, pen.threshold(j)) / gjj;
            if new != old {
                let delta = new - old;
                for (g, gj) in grad.iter_mut().zip(self.gram.row(j)) {
                    *g -= delta * gj;
                }
                beta[j] = new;
            }
        }
    }
}

fn coordinate_violation(g: f64, b: f64, pen: &PenaltySpec, j: usize) -> f64 {
    if !pen.weights[j].is_finite() {
        return 0.0;
    }
    let thr = pen.threshold(j);
    if b != 0.0 {
        (g - thr * b.signum()).abs()
    } else {
        (g.abs() - thr).max(0.0)
    }
}

fn kkt_from_gradient(grad: &[f64], beta: &[f64], pen: &PenaltySpec) -> f64 {
    (0..beta.len())
        .map(|j| coordinate_violation(grad[j], beta[j], pen, j))
        .fold(0.0, f64::max)
}

fn lambda_max_from(xty: &[f64], weights: &[f64]) -> Result<f64> {
    assert_eq!(xty.len(), weights.len());
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidInput("lambda_max needs strictly positive weights".into()));
    }
    if weights.iter().all(|w| w.is_infinite()) {
        return Err(Error::AllWeightsInfinite);
    }
    Ok(xty
        .iter()
        .zip(weights)
        .filter(|(_, w)| w.is_finite())
        .map(|(c, w)| c.abs() / w)
        .fold(0.0, f64::max))
}

/// Minimizes the weighted LASSO objective for one response.
pub fn lasso_cd(
    x: &Matrix,
    y: &[f64],
    pen: &PenaltySpec,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> SolverResult {
    Quadratic::new(x, y).lasso_cd(pen, tol, max_iter, warm_start)
}

/// Largest stationarity violation of `beta` for the weighted LASSO objective.
pub fn kkt_check(x: &Matrix, y: &[f64], beta: &[f64], pen: &PenaltySpec) -> f64 {
    let t = x.rows() as f64;
    let fitted = x.matvec(beta);
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let grad: Vec<f64> = x.tr_matvec(&resid).into_iter().map(|v| v / t).collect();
    kkt_from_gradient(&grad, beta, pen)
}

/// Smallest penalty level whose solution is identically zero:
/// `max_j |X_j'y/T| / w_j`.
pub fn lambda_max(x: &Matrix, y: &[f64], weights: &[f64]) -> Result<f64> {
    let t = x.rows() as f64;
    let xty: Vec<f64> = x.tr_matvec(y).into_iter().map(|v| v / t).collect();
    lambda_max_from(&xty, weights)
}

/// `n_lambda` log-spaced levels from `lambda_max` down to `ratio * lambda_max`.
pub fn lambda_grid(lambda_max: f64, n_lambda: usize, ratio: f64) -> Vec<f64> {
    (0..n_lambda)
        .map(|i| lambda_max * ratio.powf(i as f64 / (n_lambda - 1) as f64))
        .collect()
}

impl Quadratic<'_> {
    /// Warm-started fits over [`lambda_grid`], ordered by decreasing penalty.
    pub fn lasso_path(
        &self,
        weights: &[f64],
        n_lambda: usize,
        ratio: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<Vec<(f64, SolverResult)>> {
        if n_lambda < 2 || !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidInput("path needs n_lambda >= 2 and 0 < ratio < 1".into()));
        }
        let lmax = self.lambda_max(weights)?;
        let mut out: Vec<(f64, SolverResult)> = Vec::with_capacity(n_lambda);
        for lambda in lambda_grid(lmax, n_lambda, ratio) {
            let pen = PenaltySpec {
                lambda,
                weights: weights.to_vec(),
            };
            let warm = out.last().map(|(_, r)| r.beta.as_slice());
            let fit = self.lasso_cd(&pen, tol, max_iter, warm);
            out.push((lambda, fit));
        }
        Ok(out)
    }
}

pub fn lasso_path(x: &Matrix, y: &[f64], weights: &[f64], n_lambda: usize, ratio: f64) -> Result<Vec<(f64, SolverResult)>> {
    Quadratic::new(x, y).lasso_path(weights, n_lambda, ratio, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Ridge regression `(X'X + lambda I)^{-1} X'y` with its effective degrees of
/// freedom `trace(X (X'X + lambda I)^{-1} X')`.
pub fn ridge(x: &Matrix, y: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput("ridge penalty must be > 0".into()));
    }
    let xtx = x.gram();
    let a = xtx.add(&Matrix::identity(x.cols()).scale(lambda));
    let ch = Cholesky::new(&a)?;
    let beta = ch.solve_vec(&x.tr_matvec(y));
    let df = ch.trace_inv_product(&xtx);
    Ok((beta, df))
}

/// Ridge fits for many penalty levels from one eigen-decomposition of `X'X`.
#[derive(Clone, Debug)]
pub struct RidgePath {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl RidgePath {
    /// `xtx` is the unscaled `X'X`.
    pub fn new(xtx: &Matrix) -> Self {
        let (eigenvalues, eigenvectors) = linalg::symmetric_eigen(xtx);
        RidgePath {
            eigenvalues: eigenvalues.into_iter().map(|d| d.max(0.0)).collect(),
            eigenvectors,
        }
    }

    /// `xty` is the unscaled `X'y`.
    pub fn fit(&self, xty: &[f64], lambda: f64) -> (Vec<f64>, f64) {
        let v = &self.eigenvectors;
        let proj = v.tr_matvec(xty);
        let scaled: Vec<f64> = proj.iter().zip(&self.eigenvalues).map(|(p, d)| p / (d + lambda)).collect();
        let beta = v.matvec(&scaled);
        let df = self.eigenvalues.iter().map(|d| d / (d + lambda)).sum();
        (beta, df)
    }
}
