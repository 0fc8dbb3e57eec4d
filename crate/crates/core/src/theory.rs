//! Finite-sample theory for LASSO-type VAR estimators: penalty levels,
//! probability bounds, the events on which the oracle inequalities hold,
//! the inequalities themselves and the adaptive-LASSO sign conditions.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::SparsityInfo;
use crate::linalg::{self, Cholesky, Matrix};
use crate::var::{Dataset, RegressionProblem, VarModel};

fn ln1p(x: f64) -> f64 {
    (1.0 + x).ln()
}

/// `sqrt(8 ln(1+T)^5 ln(1+k)^4 ln(1+p)^2 ln(k^2 p) sigma_T^4 / T)`
pub fn lambda_theorem1(t: usize, k: usize, p: usize, sigma_t: f64) -> f64 {
    let (t, k, p) = (t as f64, k as f64, p as f64);
    let v = 8.0 * ln1p(t).powi(5) * ln1p(k).powi(4) * ln1p(p).powi(2) * (k * k * p).ln() * sigma_t.powi(4) / t;
    v.max(0.0).sqrt()
}

/// `sqrt(8 ln(1+T)^5 ln(1+s)^2 ln(s) sigma_T^4 / T)`
pub fn lambda_oracle_ols(t: usize, s: usize, sigma_t: f64) -> f64 {
    let (t, s) = (t as f64, s as f64);
    let v = 8.0 * ln1p(t).powi(5) * ln1p(s).powi(2) * s.ln() * sigma_t.powi(4) / t;
    v.max(0.0).sqrt()
}

/// `ln(1+k)^2 ln(1+p)^2 ln(T) sigma_T^2`
pub fn k_t(t: usize, k: usize, p: usize, sigma_t: f64) -> f64 {
    ln1p(k as f64).powi(2) * ln1p(p as f64).powi(2) * (t as f64).ln() * sigma_t * sigma_t
}

/// Lower bound `max(0, kappa_A^2 - 16 s delta)` on the restricted eigenvalue
/// of a matrix within max-entry distance `delta` of `A`.
pub fn re_perturbation_bound(kappa_a_sq: f64, s: usize, delta: f64) -> f64 {
    (kappa_a_sq - 16.0 * s as f64 * delta).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm3Bounds {
    /// Bound on `(1/T) ||X (beta_hat - beta*)||^2`.
    pub prediction: f64,
    /// Bound on `||beta_hat - beta*||_1`; also the beta-min threshold.
    pub estimation: f64,
}

impl Thm3Bounds {
    pub fn beta_min_threshold(&self) -> f64 {
        self.estimation
    }
}

pub fn thm3_bounds(s: usize, lambda: f64, kappa_sq: f64, q: f64) -> Result<Thm3Bounds> {
    if !(kappa_sq > 0.0) {
        return Err(Error::ZeroKappa);
    }
    let c = 16.0 / (q * kappa_sq) * s as f64;
    Ok(Thm3Bounds {
        prediction: c * lambda * lambda,
        estimation: c * lambda,
    })
}

/// `lambda_tilde s / (2 q phi_min(Gamma_JJ))`
pub fn oracle_ols_bound(s: usize, lambda_tilde: f64, phi_min_gamma_jj: f64, q: f64) -> f64 {
    lambda_tilde * s as f64 / (2.0 * q * phi_min_gamma_jj)
}

pub fn system_bound(bounds: &[f64]) -> f64 {
    bounds.iter().sum()
}

/// `(1-q)^2 kappa^4 / (4 * 16^3 * f_norm_sum^2)` with `kappa_sq = kappa^2`.
pub fn zeta(q: f64, kappa_sq: f64, f_norm_sum: f64) -> f64 {
    (1.0 - q).powi(2) * kappa_sq * kappa_sq / (4.0 * 16f64.powi(3) * f_norm_sum * f_norm_sum)
}

/// Bound on the probability that the sample Gram matrix leaves the
/// concentration event; may exceed one.
pub fn pi_q(s: usize, k: usize, p: usize, t: usize, zeta: f64) -> f64 {
    let (s, kp2, tf) = (s as f64, (k * k * p * p) as f64, t as f64);
    let tail = 2.0 * kp2.powf(1.0 - tf.ln());
    if zeta.is_infinite() {
        return tail;
    }
    4.0 * kp2 * (-zeta * tf / (s * s * tf.ln() * (kp2.ln() + 1.0))).exp() + tail
}

/// `1 - 2 (k^2 p)^{1 - ln(1+T)}`, the part of the cross-moment bound not
/// involving the constant `A`.
fn cross_moment_tail(t: usize, k: usize, p: usize) -> f64 {
    2.0 * ((k * k * p) as f64).powf(1.0 - ln1p(t as f64))
}

/// `1 - 2 (k^2 p)^{1 - ln(1+T)} - 2 (1+T)^{-1/A}`
pub fn prob_bound_thm1(t: usize, k: usize, p: usize, a_const: f64) -> f64 {
    1.0 - cross_moment_tail(t, k, p) - 2.0 * (1.0 + t as f64).powf(-1.0 / a_const)
}

pub fn prob_bound_thm3(t: usize, k: usize, p: usize, a_const: f64, pi: f64) -> f64 {
    prob_bound_thm1(t, k, p, a_const) - pi
}

pub fn prob_bound_adaptive(t: usize, k: usize, p: usize, a_const: f64, pi: f64) -> f64 {
    prob_bound_thm3(t, k, p, a_const, pi) - 2.0 * (t as f64).powf(-1.0 / a_const)
}

/// `||Gamma|| * sum_{i=0}^{T} ||F^i||` in operator 2-norms, dropping the
/// tail once a term falls below `1e-12`.
pub fn f_norm_sum(model: &VarModel, t: usize) -> Result<f64> {
    let gamma = model.population_gamma()?;
    let f = model.companion()?.f;
    let mut power = Matrix::identity(f.rows());
    let mut sum = 0.0;
    for i in 0..=t {
        let term = if i == 0 { 1.0 } else { linalg::operator_norm(&power) };
        if term < 1e-12 {
            break;
        }
        sum += term;
        if i < t {
            power = power.matmul(&f);
        }
    }
    Ok(linalg::operator_norm(&gamma) * sum)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub q: f64,
    /// The unspecified constant in the probability bounds; results using it
    /// are parametric.
    pub a_const: f64,
    /// Squared population restricted eigenvalues `kappa_i^2`, one per equation.
    pub kappa_gamma: Vec<f64>,
    pub f_norm_sum: f64,
    /// Penalty used in place of `lambda_T`, required when `k = p = 1`.
    pub lambda_override: Option<f64>,
}

impl TheoryParams {
    pub fn new(q: f64, a_const: f64, kappa_gamma: Vec<f64>, f_norm_sum: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidInput(format!("q must lie in (0,1), got {q}")));
        }
        if !(a_const > 0.0) {
            return Err(Error::InvalidInput(format!("A must be positive, got {a_const}")));
        }
        if kappa_gamma.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::InvalidInput("kappa values must be >= 0".into()));
        }
        Ok(TheoryParams {
            q,
            a_const,
            kappa_gamma,
            f_norm_sum,
            lambda_override: None,
        })
    }

    /// Population quantities for `model`: `kappa_i^2 = kappa_Gamma^2(s_i)`
    /// (with `s_i` floored at one) and the `F`-norm sum up to `T`.
    pub fn from_model(model: &VarModel, t: usize, q: f64, a_const: f64, budget: &ReBudget) -> Result<Self> {
        let gamma = model.population_gamma()?;
        let truth = SparsityInfo::from_model(model);
        let mut cache: Vec<Option<f64>> = vec![None; gamma.rows() + 1];
        let mut kappa = Vec::with_capacity(model.k());
        for &s in &truth.s {
            let r = s.clamp(1, gamma.rows());
            let v = *cache[r].get_or_insert_with(|| restricted_eigenvalue(&gamma, r, budget).value);
            kappa.push(v);
        }
        TheoryParams::new(q, a_const, kappa, f_norm_sum(model, t)?)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_override = Some(lambda);
        self
    }

    /// `kappa_Gamma^2(s_bar)`, the smallest per-equation value.
    pub fn kappa_sq_min(&self) -> f64 {
        self.kappa_gamma.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn zeta(&self) -> f64 {
        zeta(self.q, self.kappa_sq_min(), self.f_norm_sum)
    }

    /// The penalty used by the checks: the override if set, else `lambda_T`.
    pub fn lambda(&self, t: usize, k: usize, p: usize, sigma_t: f64) -> Result<f64> {
        match self.lambda_override {
            Some(l) => Ok(l),
            None if k * k * p == 1 => Err(Error::InvalidInput(
                "lambda_T vanishes for k = p = 1; supply a penalty explicitly".into(),
            )),
            None => Ok(lambda_theorem1(t, k, p, sigma_t)),
        }
    }
}

// ---------------------------------------------------------------------------
// Restricted eigenvalue

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReBudget {
    /// Subsets of one size are enumerated when there are at most this many,
    /// otherwise this many are sampled.
    pub enumeration_cap: usize,
    pub n_random_starts: usize,
    /// Descents run from this many of the best starting points.
    pub n_descents: usize,
    pub max_outer_iter: usize,
    pub max_inner_iter: usize,
    pub seed: u64,
}

impl Default for ReBudget {
    fn default() -> Self {
        ReBudget {
            enumeration_cap: 5000,
            n_random_starts: 8,
            n_descents: 6,
            max_outer_iter: 300,
            max_inner_iter: 5000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReEstimate {
    /// Upper estimate of `kappa^2(r)`.
    pub value: f64,
    pub subset: Vec<usize>,
    /// Minimizing direction, scaled so `||delta_R||_2 = 1`.
    pub direction: Vec<f64>,
    pub subsets_evaluated: usize,
    pub sampled: bool,
    pub budget: ReBudget,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    c
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn mix_seed(seed: u64, items: &[usize]) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &x in items {
        h ^= (x as u64).wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    }
    h
}

/// Candidate subsets of every size `1..=r`. Each size is handled with its
/// own seed so the candidates for `r` are contained in those for `r + 1`.
fn candidate_subsets(m: usize, r: usize, budget: &ReBudget) -> (Vec<Vec<usize>>, bool) {
    let mut out = Vec::new();
    let mut sampled = false;
    for size in 1..=r {
        if binomial(m, size) <= budget.enumeration_cap as u128 {
            out.extend(combinations(m, size));
        } else {
            sampled = true;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(budget.seed, &[size, m]));
            let mut seen = BTreeSet::new();
            for _ in 0..budget.enumeration_cap {
                let mut s = index::sample(&mut rng, m, size).into_vec();
                s.sort_unstable();
                seen.insert(s);
            }
            out.extend(seen);
        }
    }
    (out, sampled)
}

/// Euclidean projection onto `{x : ||x||_1 <= radius}`.
pub fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    if linalg::norm1(x) <= radius {
        return x.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; x.len()];
    }
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_unstable_by(|p, q| q.total_cmp(p));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, v) in a.iter().enumerate() {
        cum += v;
        let cand = (cum - radius) / (j + 1) as f64;
        if *v > cand {
            theta = cand;
        }
    }
    x.iter().map(|v| v.signum() * (v.abs() - theta).max(0.0)).collect()
}

/// The ratio restricted to one subset `R`, with the complement minimized out.
struct SubsetProblem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    lipschitz: f64,
    max_inner: usize,
}

struct Evaluation {
    value: f64,
    v: Vec<f64>,
    grad: Vec<f64>,
}

impl SubsetProblem {
    fn new(psi: &Matrix, subset: &[usize], max_inner: usize) -> Self {
        let comp: Vec<usize> = (0..psi.rows()).filter(|j| !subset.contains(j)).collect();
        let c = psi.select(&comp, &comp);
        let lipschitz = if comp.is_empty() { 0.0 } else { 2.0 * linalg::operator_norm(&c) };
        SubsetProblem {
            a: psi.select(subset, subset),
            b: psi.select(subset, &comp),
            c,
            lipschitz,
            max_inner,
        }
    }

    fn inner_objective(&self, bu: &[f64], v: &[f64]) -> f64 {
        2.0 * linalg::dot(bu, v) + linalg::dot(v, &self.c.matvec(v))
    }

    /// `min_{||v||_1 <= 3 ||u||_1} [u; v]' Psi [u; v]` by accelerated
    /// projected gradient with restarts.
    fn evaluate(&self, u: &[f64], warm: &[f64]) -> Evaluation {
        let au = self.a.matvec(u);
        let quad_u = linalg::dot(u, &au);
        let n = self.c.rows();
        let radius = 3.0 * linalg::norm1(u);
        let sign_u: Vec<f64> = u.iter().map(|x| if *x == 0.0 { 0.0 } else { x.signum() }).collect();
        if n == 0 {
            let grad = au.iter().map(|x| 2.0 * x).collect();
            return Evaluation { value: quad_u, v: Vec::new(), grad };
        }
        let bu = self.b.tr_matvec(u);
        let mut v = project_l1_ball(warm, radius);
        if self.lipschitz > 0.0 {
            let step = 1.0 / self.lipschitz;
            let mut y = v.clone();
            let mut tk = 1.0f64;
            let mut h_prev = self.inner_objective(&bu, &v);
            for _ in 0..self.max_inner {
                let cy = self.c.matvec(&y);
                let trial: Vec<f64> = y.iter().zip(&bu).zip(&cy).map(|((yi, b), c)| yi - step * 2.0 * (b + c)).collect();
                let v_new = project_l1_ball(&trial, radius);
                let h_new = self.inner_objective(&bu, &v_new);
                let change = v_new.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if h_new > h_prev {
                    if tk == 1.0 {
                        break;
                    }
                    y = v.clone();
                    tk = 1.0;
                    continue;
                }
                let t_next = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
                y = v_new.iter().zip(&v).map(|(a, b)| a + (tk - 1.0) / t_next * (a - b)).collect();
                tk = t_next;
                v = v_new;
                h_prev = h_new;
                if change <= 1e-12 * (1.0 + linalg::max_abs(&v)) {
                    break;
                }
            }
        }
        let bv = self.b.matvec(&v);
        let cv = self.c.matvec(&v);
        let value = quad_u + 2.0 * linalg::dot(u, &bv) + linalg::dot(&v, &cv);
        let grad_v: Vec<f64> = self.b.tr_matvec(u).iter().zip(&cv).map(|(b, c)| 2.0 * (b + c)).collect();
        let mu = if linalg::norm1(&v) >= radius * (1.0 - 1e-9) && radius > 0.0 {
            linalg::max_abs(&grad_v)
        } else {
            0.0
        };
        let grad = au
            .iter()
            .zip(&bv)
            .zip(&sign_u)
            .map(|((a, b), s)| 2.0 * (a + b) - 3.0 * mu * s)
            .collect();
        Evaluation { value, v, grad }
    }
}

fn normalized(u: &[f64]) -> Vec<f64> {
    let n = linalg::norm2(u);
    u.iter().map(|x| x / n).collect()
}

/// Minimizes the cone ratio for one subset; returns the best value and the
/// point `(u, v)` attaining it.
fn minimize_subset(psi: &Matrix, subset: &[usize], budget: &ReBudget) -> (f64, Vec<f64>, Vec<f64>) {
    let problem = SubsetProblem::new(psi, subset, budget.max_inner_iter);
    let d = subset.len();
    let n_comp = psi.rows() - d;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let (_, vecs) = linalg::symmetric_eigen(&problem.a);
    for j in 0..d {
        starts.push(vecs.column(j));
    }
    if d == 2 {
        for a in 0..24 {
            let th = std::f64::consts::PI * a as f64 / 24.0;
            starts.push(vec![th.cos(), th.sin()]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(budget.seed, subset));
    for _ in 0..budget.n_random_starts {
        let u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if linalg::norm2(&u) > 0.0 {
            starts.push(normalized(&u));
        }
    }

    let zero = vec![0.0; n_comp];
    let mut scored: Vec<(f64, Vec<f64>, Evaluation)> = starts
        .into_iter()
        .map(|u| {
            let e = problem.evaluate(&u, &zero);
            (e.value, u, e)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (scored[0].0, scored[0].1.clone(), scored[0].2.v.clone());
    if d == 1 {
        return best;
    }
    for (_, u0, e0) in scored.into_iter().take(budget.n_descents.max(1)) {
        let mut u = u0;
        let mut cur = e0;
        let mut step = 1.0;
        for _ in 0..budget.max_outer_iter {
            let radial = linalg::dot(&cur.grad, &u);
            let gt: Vec<f64> = cur.grad.iter().zip(&u).map(|(g, x)| g - radial * x).collect();
            let gnorm2 = linalg::dot(&gt, &gt);
            if gnorm2.sqrt() < 1e-12 {
                break;
            }
            let mut accepted = false;
            while step > 1e-14 {
                let trial = normalized(&u.iter().zip(&gt).map(|(x, g)| x - step * g).collect::<Vec<_>>());
                let e = problem.evaluate(&trial, &cur.v);
                if e.value < best.0 {
                    best = (e.value, trial.clone(), e.v.clone());
                }
                if e.value <= cur.value - 1e-4 * step * gnorm2 {
                    u = trial;
                    cur = e;
                    accepted = true;
                    step = (step * 2.0).min(1e3);
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    best
}

/// Upper estimate of `kappa^2(r) = min delta' Psi delta / ||delta_R||^2`
/// over `|R| <= r` and the cone `||delta_{R^c}||_1 <= 3 ||delta_R||_1`.
///
/// Every subset is searched deterministically from its own seed, so the
/// estimate is nonincreasing in `r`.
pub fn restricted_eigenvalue(psi: &Matrix, r: usize, budget: &ReBudget) -> ReEstimate {
    let m = psi.rows();
    assert!(m > 0 && psi.is_square(), "restricted eigenvalue needs a nonempty square matrix");
    let r = r.clamp(1, m);
    let (subsets, sampled) = candidate_subsets(m, r, budget);
    let mut best_value = f64::INFINITY;
    let mut best_subset = Vec::new();
    let mut best_direction = Vec::new();
    for subset in &subsets {
        let (value, u, v) = minimize_subset(psi, subset, budget);
        if value < best_value {
            best_value = value;
            let mut delta = vec![0.0; m];
            let comp: Vec<usize> = (0..m).filter(|j| !subset.contains(j)).collect();
            for (&j, x) in subset.iter().zip(&u) {
                delta[j] = *x;
            }
            for (&j, x) in comp.iter().zip(&v) {
                delta[j] = *x;
            }
            best_subset = subset.clone();
            best_direction = delta;
        }
    }
    ReEstimate {
        value: best_value,
        subset: best_subset,
        direction: best_direction,
        subsets_evaluated: subsets.len(),
        sampled,
        budget: budget.clone(),
    }
}

/// Draws a vector in the cone `||v_{J^c}||_1 <= 3 ||v_J||_1` of the index
/// set `support`. About a quarter of the draws lie on the cone boundary.
pub fn sample_cone_vector<R: Rng + ?Sized>(m: usize, support: &[usize], rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0f64; m];
    for &j in support {
        v[j] = rng.sample(StandardNormal);
    }
    let radius = 3.0 * support.iter().map(|&j| v[j].abs()).sum::<f64>();
    let comp: Vec<usize> = (0..m).filter(|j| !support.contains(j)).collect();
    if comp.is_empty() {
        return v;
    }
    let dir: Vec<f64> = comp.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n1 = linalg::norm1(&dir);
    if n1 == 0.0 {
        return v;
    }
    let frac: f64 = if rng.random_bool(0.25) { 1.0 } else { rng.random::<f64>() };
    for (&j, d) in comp.iter().zip(&dir) {
        v[j] = d / n1 * radius * frac;
    }
    v
}

// ---------------------------------------------------------------------------
// Events

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventFlags {
    pub b_t: bool,
    pub c_t: bool,
    pub d_t: bool,
    pub max_cross: f64,
    pub max_cov_dev: f64,
    pub max_yy: f64,
    pub lambda: f64,
    pub c_threshold: f64,
    pub k_t: f64,
}

/// Cross moments `X' E / T` between the stacked regressors and innovations.
pub fn max_cross_moment(problem: &RegressionProblem, innovations: &Matrix) -> f64 {
    let t = problem.t() as f64;
    (0..innovations.cols())
        .map(|j| linalg::max_abs(&problem.x.tr_matvec(&innovations.column(j))) / t)
        .fold(0.0, f64::max)
}

pub fn event_flags(data: &Dataset, model: &VarModel, truth: &SparsityInfo, params: &TheoryParams) -> Result<EventFlags> {
    let innovations = data.innovations().ok_or(Error::MissingInnovations)?;
    let problem = crate::var::stack(data);
    let (t, k, p) = (data.t(), model.k(), model.p());
    let sigma_t = model.sigma_t()?;
    let lambda = params.lambda(t, k, p, sigma_t)?;
    let gamma = model.population_gamma()?;
    let max_cross = max_cross_moment(&problem, innovations);
    let max_cov_dev = problem.psi.max_abs_diff(&gamma);
    let max_yy = problem.psi.max_abs();
    let s_bar = truth.s_bar;
    let c_threshold = if s_bar == 0 {
        f64::INFINITY
    } else {
        (1.0 - params.q) * params.kappa_sq_min() / (16.0 * s_bar as f64)
    };
    let kt = k_t(t, k, p, sigma_t);
    Ok(EventFlags {
        b_t: max_cross < lambda / 2.0,
        c_t: max_cov_dev <= c_threshold,
        d_t: max_yy < kt,
        max_cross,
        max_cov_dev,
        max_yy,
        lambda,
        c_threshold,
        k_t: kt,
    })
}

// ---------------------------------------------------------------------------
// Inequality checks

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub slack: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        InequalityCheck {
            lhs,
            rhs,
            slack,
            holds: slack >= -tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm1Report {
    pub iq1: InequalityCheck,
    pub iq2: InequalityCheck,
    pub iq3: InequalityCheck,
}

impl Thm1Report {
    pub fn all_hold(&self) -> bool {
        self.iq1.holds && self.iq2.holds && self.iq3.holds
    }
}

/// Evaluates the three LASSO inequalities for equation `i` at a fit
/// `beta_hat` computed with penalty `lambda`. Slack down to `-tol` passes.
pub fn thm1_rhs_check(problem: &RegressionProblem, beta_hat: &[f64], beta_star: &[f64], lambda: f64, tol: f64) -> Thm1Report {
    let diff: Vec<f64> = beta_hat.iter().zip(beta_star).map(|(a, b)| a - b).collect();
    let xd = problem.x.matvec(&diff);
    let pred = linalg::dot(&xd, &xd) / problem.t() as f64;
    let d1 = linalg::norm1(&diff);
    let (mut d_j, mut d_jc, mut star_j) = (0.0, 0.0, 0.0);
    for (&d, &b) in diff.iter().zip(beta_star) {
        if b != 0.0 {
            d_j += d.abs();
            star_j += b.abs();
        } else {
            d_jc += d.abs();
        }
    }
    let lhs = pred + lambda * d1;
    Thm1Report {
        iq1: InequalityCheck::new(lhs, 2.0 * lambda * (d1 + linalg::norm1(beta_star) - linalg::norm1(beta_hat)), tol),
        iq2: InequalityCheck::new(lhs, 4.0 * lambda * d_j.min(star_j), tol),
        iq3: InequalityCheck::new(d_jc, 3.0 * d_j, tol),
    }
}

// ---------------------------------------------------------------------------
// Adaptive LASSO sign recovery

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignRecoveryReport {
    /// `beta_min >= 2 ||beta_hat - beta*||_1`
    pub beta_min_premise: InequalityCheck,
    pub adalasso1: InequalityCheck,
    pub adalasso2: InequalityCheck,
    pub foc1: bool,
    /// `min_j (lambda w_j - lhs_j)` over the irrelevant coefficients.
    pub foc1_margin: f64,
    pub foc2: bool,
    /// `min_j sign(beta*_j) * (beta*_J + Psi_JJ^{-1}(X_J' eps / T - lambda b))_j`.
    pub foc2_margin: f64,
    /// Condition number of `Psi_JJ`.
    pub condition_number: f64,
    pub lambda: f64,
}

impl SignRecoveryReport {
    /// The stage-two fit at this penalty has the true sign pattern exactly
    /// when both first-order conditions hold.
    pub fn foc_verdict(&self) -> bool {
        self.foc1 && self.foc2
    }
}

/// Evaluates the adaptive-LASSO sign conditions for equation `i` with first
/// step `stage1_beta`, penalty `lambda` and innovations `eps` of that equation.
pub fn sign_recovery_conditions(
    problem: &RegressionProblem,
    i: usize,
    stage1_beta: &[f64],
    eps: &[f64],
    lambda: f64,
    model: &VarModel,
    params: &TheoryParams,
) -> Result<SignRecoveryReport> {
    let beta_star = model.beta(i);
    let truth = SparsityInfo::from_model(model);
    let support = &truth.supports[i];
    let s = support.len();
    let t = problem.t();
    let m = problem.n_regressors();
    let beta_min = truth.beta_min_i[i];
    let err1: f64 = stage1_beta.iter().zip(&beta_star).map(|(a, b)| (a - b).abs()).sum();

    let weights: Vec<f64> = stage1_beta
        .iter()
        .map(|b| if *b != 0.0 { 1.0 / b.abs() } else { f64::INFINITY })
        .collect();
    let xe: Vec<f64> = problem.x.tr_matvec(eps).into_iter().map(|v| v / t as f64).collect();

    let (phi_min_gamma, condition_number, foc1_margin, foc2_margin) = if s == 0 {
        let margin = (0..m).map(|j| lambda * weights[j] - xe[j].abs()).fold(f64::INFINITY, f64::min);
        (f64::INFINITY, 1.0, margin, f64::INFINITY)
    } else {
        let psi_jj = problem.psi.select(support, support);
        let (eig, _) = linalg::symmetric_eigen(&psi_jj);
        let condition_number = if eig[0] > 0.0 { eig[s - 1] / eig[0] } else { f64::INFINITY };
        let chol = Cholesky::new(&psi_jj).map_err(|_| Error::SingularSubGram)?;
        let gamma = model.population_gamma()?;
        let phi_min_gamma = linalg::min_eigenvalue(&gamma.select(support, support));

        let b: Vec<f64> = support.iter().map(|&j| beta_star[j].signum() * weights[j]).collect();
        let inner: Vec<f64> = support.iter().zip(&b).map(|(&j, bj)| xe[j] - lambda * bj).collect();
        let h = if inner.iter().all(|v| v.is_finite()) {
            chol.solve_vec(&inner)
        } else {
            vec![f64::NAN; s]
        };
        let foc2_margin = support
            .iter()
            .zip(&h)
            .map(|(&j, hj)| {
                let v = beta_star[j].signum() * (beta_star[j] + hj);
                if v.is_nan() { f64::NEG_INFINITY } else { v }
            })
            .fold(f64::INFINITY, f64::min);
        let mut foc1_margin = f64::INFINITY;
        for j in (0..m).filter(|j| beta_star[*j] == 0.0) {
            if weights[j].is_infinite() {
                continue;
            }
            let row: Vec<f64> = support.iter().map(|&l| problem.psi[(j, l)]).collect();
            let lhs = (linalg::dot(&row, &h) - xe[j]).abs();
            let margin = if lhs.is_nan() { f64::NEG_INFINITY } else { lambda * weights[j] - lhs };
            foc1_margin = foc1_margin.min(margin);
        }
        (phi_min_gamma, condition_number, foc1_margin, foc2_margin)
    };

    let sigma_t = model.sigma_t()?;
    let kt = k_t(t, model.k(), model.p(), sigma_t);
    let q = params.q;
    let sf = s as f64;
    let ada1 = sf * kt / (q * phi_min_gamma) * (0.5 + 2.0 / beta_min) * err1 + err1 / 2.0;
    let ada2 = sf.sqrt() / (q * phi_min_gamma) * (lambda / 2.0 + 2.0 * lambda / beta_min);
    Ok(SignRecoveryReport {
        beta_min_premise: InequalityCheck::new(2.0 * err1, beta_min, 0.0),
        adalasso1: InequalityCheck::new(if s == 0 { err1 / 2.0 } else { ada1 }, 1.0, 0.0),
        adalasso2: InequalityCheck::new(if s == 0 { 0.0 } else { ada2 }, beta_min, 0.0),
        foc1: foc1_margin >= 0.0,
        foc1_margin,
        foc2: foc2_margin > 0.0,
        foc2_margin,
        condition_number,
        lambda,
    })
}

/// `sign(a_j) == sign(b_j)` for every coordinate, zeros included.
pub fn same_sign_pattern(a: &[f64], b: &[f64]) -> bool {
    let sgn = |x: f64| if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 };
    a.iter().zip(b).all(|(x, y)| sgn(*x) == sgn(*y))
}

// ---------------------------------------------------------------------------
// Full diagnostics of one dataset

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationDiagnostics {
    pub equation: usize,
    pub s: usize,
    pub thm1: Thm1Report,
    pub thm3: Option<Thm3Bounds>,
    pub lambda_oracle_ols: f64,
    pub oracle_ols_bound: Option<f64>,
    pub sign_recovery: Option<SignRecoveryReport>,
    pub sign_recovery_error: Option<String>,
    /// Whether the adaptive fit at the same penalty has the true sign pattern.
    pub stage2_sign_correct: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub t: usize,
    pub k: usize,
    pub p: usize,
    pub sigma_t: f64,
    pub lambda: f64,
    pub k_t: f64,
    pub q: f64,
    pub a_const: f64,
    pub pi_q: f64,
    pub prob_bound_thm1: f64,
    pub prob_bound_thm3: f64,
    pub prob_bound_adaptive: f64,
    pub events: EventFlags,
    pub equations: Vec<EquationDiagnostics>,
    /// Sum of the per-equation estimation bounds, when all are defined.
    pub system_bound: Option<f64>,
}

/// Evaluates every event, bound and inequality on one simulated dataset,
/// using LASSO and adaptive-LASSO fits at the theory penalty.
pub fn diagnose(data: &Dataset, model: &VarModel, params: &TheoryParams, tol: f64) -> Result<DiagnosticReport> {
    let innovations = data.innovations().ok_or(Error::MissingInnovations)?.clone();
    let truth = SparsityInfo::from_model(model);
    let events = event_flags(data, model, &truth, params)?;
    let problem = crate::var::stack(data);
    let (t, k, p) = (data.t(), model.k(), model.p());
    let sigma_t = model.sigma_t()?;
    let lambda = events.lambda;
    let gamma = model.population_gamma()?;
    let m = problem.n_regressors();
    let pi = pi_q(truth.s_bar.max(1), k, p, t, params.zeta());
    let mut equations = Vec::with_capacity(k);
    for i in 0..k {
        let beta_star = model.beta(i);
        let q = crate::estimators::equation_quadratic(&problem, i);
        let pen = crate::solver::PenaltySpec::unit(lambda, m)?;
        let beta_hat = q.lasso_cd(&pen, tol, crate::solver::DEFAULT_MAX_ITER, None).beta;
        let thm1 = thm1_rhs_check(&problem, &beta_hat, &beta_star, lambda, 10.0 * tol);
        let s = truth.s[i];
        let kappa = params.kappa_gamma.get(i).copied().unwrap_or(0.0);
        let thm3 = thm3_bounds(s, lambda, kappa, params.q).ok();
        let lt = lambda_oracle_ols(t, s, sigma_t);
        let oracle_bound = (s > 0).then(|| {
            let phi = linalg::min_eigenvalue(&gamma.select(&truth.supports[i], &truth.supports[i]));
            oracle_ols_bound(s, lt, phi, params.q)
        });
        let eps = innovations.column(i);
        let (sign_recovery, sign_recovery_error) = match sign_recovery_conditions(&problem, i, &beta_hat, &eps, lambda, model, params) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let weights: Vec<f64> = beta_hat.iter().map(|b| if *b != 0.0 { 1.0 / b.abs() } else { f64::INFINITY }).collect();
        let stage2_sign_correct = if weights.iter().all(|w| w.is_infinite()) {
            Some(same_sign_pattern(&vec![0.0; m], &beta_star))
        } else {
            let pen = crate::solver::PenaltySpec::new(lambda, weights)?;
            let fit = q.lasso_cd(&pen, tol, crate::solver::DEFAULT_MAX_ITER, None);
            Some(same_sign_pattern(&fit.beta, &beta_star))
        };
        equations.push(EquationDiagnostics {
            equation: i,
            s,
            thm1,
            thm3,
            lambda_oracle_ols: lt,
            oracle_ols_bound: oracle_bound,
            sign_recovery,
            sign_recovery_error,
            stage2_sign_correct,
        });
    }
    let system = equations
        .iter()
        .map(|e| e.thm3.map(|b| b.estimation))
        .collect::<Option<Vec<f64>>>()
        .map(|v| system_bound(&v));
    Ok(DiagnosticReport {
        t,
        k,
        p,
        sigma_t,
        lambda,
        k_t: k_t(t, k, p, sigma_t),
        q: params.q,
        a_const: params.a_const,
        pi_q: pi,
        prob_bound_thm1: prob_bound_thm1(t, k, p, params.a_const),
        prob_bound_thm3: prob_bound_thm3(t, k, p, params.a_const, pi),
        prob_bound_adaptive: prob_bound_adaptive(t, k, p, params.a_const, pi),
        events,
        equations,
        system_bound: system,
    })
}
