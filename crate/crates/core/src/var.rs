//! VAR(p) models: companion form, stationarity, population moments,
//! Gaussian simulation and the stacked per-equation regression design.
//!
//! Coefficients of equation `i` are laid out to match the regressor
//! `Z_t = (y_{t-1}', ..., y_{t-p}')'`: position `(l-1)*k + j` holds the
//! coefficient on `y_{t-l,j}`, i.e. `Phi_l[i, j]`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, Matrix};

/// Tolerance used when estimating the companion spectral radius.
pub const RHO_TOL: f64 = 1e-9;

/// Increment tolerance for the population covariance doubling iteration.
pub const GAMMA_TOL: f64 = 1e-14;

pub fn default_burn_in(p: usize) -> usize {
    200 + 10 * p
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct VarModel {
    k: usize,
    p: usize,
    phis: Vec<Matrix>,
    sigma: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    phis: Vec<Vec<Vec<f64>>>,
    sigma: Vec<Vec<f64>>,
}

impl TryFrom<RawModel> for VarModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let phis = raw
            .phis
            .iter()
            .map(|m| Matrix::from_rows(m))
            .collect::<Result<Vec<_>>>()?;
        VarModel::new(phis, Matrix::from_rows(&raw.sigma)?)
    }
}

impl From<VarModel> for RawModel {
    fn from(m: VarModel) -> Self {
        RawModel {
            phis: m.phis.iter().map(Matrix::to_rows).collect(),
            sigma: m.sigma.to_rows(),
        }
    }
}

impl VarModel {
    pub fn new(phis: Vec<Matrix>, sigma: Matrix) -> Result<Self> {
        if phis.is_empty() {
            return Err(Error::InvalidModel("at least one lag is required".into()));
        }
        let k = sigma.rows();
        if k == 0 || !sigma.is_square() {
            return Err(Error::InvalidModel("sigma must be a non-empty square matrix".into()));
        }
        if phis.iter().any(|phi| phi.rows() != k || phi.cols() != k) {
            return Err(Error::InvalidModel(format!("every coefficient matrix must be {k}x{k}")));
        }
        if phis.iter().any(|phi| !phi.is_finite()) || !sigma.is_finite() {
            return Err(Error::InvalidModel("non-finite entries".into()));
        }
        if !sigma.is_symmetric(1e-10) {
            return Err(Error::InvalidModel("sigma is not symmetric".into()));
        }
        if linalg::min_eigenvalue(&sigma) < -1e-10 * (1.0 + sigma.max_abs()) {
            return Err(Error::InvalidModel("sigma is not positive semi-definite".into()));
        }
        Ok(VarModel {
            k,
            p: phis.len(),
            phis,
            sigma,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn phis(&self) -> &[Matrix] {
        &self.phis
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    /// `[Phi_1 ... Phi_p]`, k x kp. Row `i` is the true coefficient vector of
    /// equation `i`.
    pub fn coefficient_matrix(&self) -> Matrix {
        let (k, p) = (self.k, self.p);
        Matrix::from_fn(k, k * p, |i, c| self.phis[c / k][(i, c % k)])
    }

    pub fn beta(&self, i: usize) -> Vec<f64> {
        self.coefficient_matrix().row(i).to_vec()
    }

    pub fn companion(&self) -> Result<CompanionForm> {
        let (k, p) = (self.k, self.p);
        let n = k * p;
        let coef = self.coefficient_matrix();
        let f = Matrix::from_fn(n, n, |r, c| {
            if r < k {
                coef[(r, c)]
            } else if c + k == r {
                1.0
            } else {
                0.0
            }
        });
        let omega = Matrix::from_fn(n, n, |r, c| if r < k && c < k { self.sigma[(r, c)] } else { 0.0 });
        let rho = linalg::spectral_radius(&f, RHO_TOL)?;
        Ok(CompanionForm { f, omega, rho })
    }

    fn stationary_companion(&self) -> Result<CompanionForm> {
        let comp = self.companion()?;
        if comp.rho >= 1.0 - 1e-8 {
            return Err(Error::NotStationary { rho: comp.rho });
        }
        Ok(comp)
    }

    /// `Gamma = E(Z_t Z_t')`, the kp x kp population second-moment matrix of
    /// the stacked regressors.
    pub fn population_gamma(&self) -> Result<Matrix> {
        let comp = self.stationary_companion()?;
        linalg::lyapunov_doubling(&comp.f, &comp.omega, GAMMA_TOL)
    }

    /// `max_i max(sigma_{i,y}, sigma_{i,eps})`.
    pub fn sigma_t(&self) -> Result<f64> {
        let gamma = self.population_gamma()?;
        Ok((0..self.k)
            .map(|i| gamma[(i, i)].max(0.0).sqrt().max(self.sigma[(i, i)].max(0.0).sqrt()))
            .fold(0.0, f64::max))
    }

    /// Draws `burn_in` discarded steps from a zero start, then `p` initial
    /// observations and `t` estimation observations.
    ///
    /// Innovations are `L z` with `L` the Cholesky factor of sigma (an
    /// eigen square root when sigma is singular) and `z` standard normal
    /// draws from `ChaCha8Rng::seed_from_u64(seed)` through
    /// `rand_distr::StandardNormal` (ziggurat). Draws are consumed
    /// sequentially, `k` per time step, so a longer simulation with the same
    /// seed extends a shorter one.
    pub fn simulate(&self, t: usize, burn_in: usize, seed: u64) -> Result<Dataset> {
        self.stationary_companion()?;
        let (k, p) = (self.k, self.p);
        let factor = sqrt_factor(&self.sigma);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = burn_in + p + t;
        // history holds the last p observations, most recent first
        let mut history = vec![vec![0.0; k]; p];
        let mut initial = Matrix::zeros(p, k);
        let mut path = Matrix::zeros(t, k);
        let mut innovations = Matrix::zeros(t, k);
        let mut z = vec![0.0; k];
        for step in 0..total {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            let eps = factor.matvec(&z);
            let mut y = eps.clone();
            for (l, phi) in self.phis.iter().enumerate() {
                let contrib = phi.matvec(&history[l]);
                for (yi, c) in y.iter_mut().zip(contrib) {
                    *yi += c;
                }
            }
            history.rotate_right(1);
            history[0].copy_from_slice(&y);
            if step >= burn_in + p {
                let r = step - burn_in - p;
                path.row_mut(r).copy_from_slice(&y);
                innovations.row_mut(r).copy_from_slice(&eps);
            } else if step >= burn_in {
                initial.row_mut(step - burn_in).copy_from_slice(&y);
            }
        }
        Dataset::new(initial, path, Some(innovations))
    }
}

fn sqrt_factor(sigma: &Matrix) -> Matrix {
    if let Ok(ch) = Cholesky::new(sigma) {
        return ch.factor().clone();
    }
    let (vals, vecs) = linalg::symmetric_eigen(sigma);
    let n = sigma.rows();
    Matrix::from_fn(n, n, |i, j| vecs[(i, j)] * vals[j].max(0.0).sqrt())
}

/// The VAR(1) rewrite `Z_t = F Z_{t-1} + w_t`, `E(w w') = omega`.
#[derive(Clone, Debug)]
pub struct CompanionForm {
    pub f: Matrix,
    pub omega: Matrix,
    pub rho: f64,
}

/// Observed path: `p` initial observations `y_{1-p}..y_0`, then `T`
/// estimation observations `y_1..y_T`, with the innovations when simulated.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    k: usize,
    p: usize,
    initial: Matrix,
    path: Matrix,
    innovations: Option<Matrix>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetMeta {
    k: usize,
    p: usize,
    #[serde(rename = "T")]
    t: usize,
}

impl Dataset {
    pub fn new(initial: Matrix, path: Matrix, innovations: Option<Matrix>) -> Result<Self> {
        let k = path.cols();
        if initial.cols() != k || initial.rows() == 0 {
            return Err(Error::InvalidInput("initial block must be p x k with p >= 1".into()));
        }
        if let Some(e) = &innovations {
            if e.rows() != path.rows() || e.cols() != k {
                return Err(Error::InvalidInput("innovations must be T x k".into()));
            }
        }
        if !initial.is_finite() || !path.is_finite() || innovations.as_ref().is_some_and(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("dataset has non-finite values".into()));
        }
        Ok(Dataset {
            k,
            p: initial.rows(),
            initial,
            path,
            innovations,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn t(&self) -> usize {
        self.path.rows()
    }

    pub fn initial(&self) -> &Matrix {
        &self.initial
    }

    pub fn path(&self) -> &Matrix {
        &self.path
    }

    pub fn innovations(&self) -> Option<&Matrix> {
        self.innovations.as_ref()
    }

    /// `y_s` for `s` in `1-p..=T`.
    pub fn observation(&self, s: isize) -> &[f64] {
        let p = self.p as isize;
        assert!(s > -p && s <= self.t() as isize, "time index out of range");
        if s <= 0 {
            self.initial.row((s + p - 1) as usize)
        } else {
            self.path.row((s - 1) as usize)
        }
    }

    /// `Z_s = (y_{s-1}', ..., y_{s-p}')'` for `s` in `1..=T+1`.
    pub fn regressor(&self, s: usize) -> Vec<f64> {
        (1..=self.p).flat_map(|l| self.observation(s as isize - l as isize).to_vec()).collect()
    }

    /// Drops the last estimation observation and returns it, so a path
    /// simulated with `T + 1` points yields a `T`-point dataset plus the
    /// realized `y_{T+1}`.
    pub fn split_last(&self) -> Result<(Dataset, Vec<f64>)> {
        let t = self.t();
        if t < 2 {
            return Err(Error::InvalidInput("need at least two observations to split".into()));
        }
        let last = self.path.row(t - 1).to_vec();
        let rows: Vec<usize> = (0..t - 1).collect();
        let cols: Vec<usize> = (0..self.k).collect();
        let path = self.path.select(&rows, &cols);
        let innov = self.innovations.as_ref().map(|e| e.select(&rows, &cols));
        Ok((Dataset::new(self.initial.clone(), path, innov)?, last))
    }

    /// Writes `<stem>.csv` (header `y1..yk`, the first `p` rows are the
    /// initial observations), `<stem>.meta.json` (`{k, p, T}`) and, when
    /// present, `<stem>.innovations.csv` (header `e1..ek`).
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        let rows: Vec<&[f64]> = (0..self.p).map(|r| self.initial.row(r)).chain((0..self.t()).map(|r| self.path.row(r))).collect();
        write_table(csv_path, "y", self.k, &rows)?;
        let meta = DatasetMeta {
            k: self.k,
            p: self.p,
            t: self.t(),
        };
        fs::write(meta_path(csv_path), serde_json::to_string_pretty(&meta)? + "\n")?;
        if let Some(e) = &self.innovations {
            let rows: Vec<&[f64]> = (0..e.rows()).map(|r| e.row(r)).collect();
            write_table(&innovations_path(csv_path), "e", self.k, &rows)?;
        }
        Ok(())
    }

    pub fn read(csv_path: &Path) -> Result<Self> {
        let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(meta_path(csv_path))?)?;
        let all = read_table(csv_path, "y", meta.k)?;
        if all.len() != meta.p + meta.t {
            return Err(Error::InvalidInput(format!(
                "{} rows in {}, metadata says p + T = {}",
                all.len(),
                csv_path.display(),
                meta.p + meta.t
            )));
        }
        let initial = Matrix::from_rows(&all[..meta.p])?;
        let path = Matrix::from_rows(&all[meta.p..])?;
        let ipath = innovations_path(csv_path);
        let innovations = if ipath.exists() {
            let rows = read_table(&ipath, "e", meta.k)?;
            if rows.len() != meta.t {
                return Err(Error::InvalidInput("innovations file must have T rows".into()));
            }
            Some(Matrix::from_rows(&rows)?)
        } else {
            None
        };
        Dataset::new(initial, path, innovations)
    }
}

fn with_suffix(csv_path: &Path, suffix: &str) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}{suffix}"))
}

pub fn meta_path(csv_path: &Path) -> PathBuf {
    with_suffix(csv_path, ".meta.json")
}

pub fn innovations_path(csv_path: &Path) -> PathBuf {
    with_suffix(csv_path, ".innovations.csv")
}

fn write_table(path: &Path, prefix: &str, k: usize, rows: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((1..=k).map(|i| format!("{prefix}{i}")))?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn read_table(path: &Path, prefix: &str, k: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let expected: Vec<String> = (1..=k).map(|i| format!("{prefix}{i}")).collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::InvalidInput(format!("{}: expected header {}", path.display(), expected.join(","))));
    }
    r.records()
        .map(|rec| {
            rec?.iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display()))))
                .collect()
        })
        .collect()
}

/// Stacked form `y_i = X beta_i + eps_i` shared by all equations.
///
/// Rows of `x` are in ascending time: row `t-1` is `Z_t'` for `t = 1..T`.
#[derive(Clone, Debug)]
pub struct RegressionProblem {
    pub x: Matrix,
    pub ys: Vec<Vec<f64>>,
    /// `X'X / T`
    pub psi: Matrix,
    pub k: usize,
    pub p: usize,
}

impl RegressionProblem {
    pub fn t(&self) -> usize {
        self.x.rows()
    }

    pub fn n_regressors(&self) -> usize {
        self.x.cols()
    }
}

pub fn stack(data: &Dataset) -> RegressionProblem {
    let (k, p, t) = (data.k(), data.p(), data.t());
    let mut x = Matrix::zeros(t, k * p);
    for s in 1..=t {
        x.row_mut(s - 1).copy_from_slice(&data.regressor(s));
    }
    let ys = (0..k).map(|i| data.path().column(i)).collect();
    let psi = x.gram().scale(1.0 / t as f64);
    RegressionProblem { x, ys, psi, k, p }
}

/// `y_hat_{T+1} = sum_l Phi_l y_{T+1-l}` for a k x kp coefficient matrix.
pub fn forecast_one_step(coefficients: &Matrix, data: &Dataset) -> Vec<f64> {
    assert_eq!(coefficients.rows(), data.k());
    assert_eq!(coefficients.cols(), data.k() * data.p());
    coefficients.matvec(&data.regressor(data.t() + 1))
}
