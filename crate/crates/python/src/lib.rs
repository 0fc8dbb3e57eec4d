//! Python bindings: models, datasets, system fits, solver kernels, theory
//! quantities and Monte Carlo runs. Matrices cross the boundary as lists of
//! rows; reports come back as plain dicts.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use sparsevar::estimators::{self, EstimatorTag, FitOptions, SparsityInfo, SystemFitRecord};
use sparsevar::mc::{self, Experiment, ExperimentSpec};
use sparsevar::solver::{self, PenaltySpec};
use sparsevar::theory::{self, ReBudget, TheoryParams};
use sparsevar::{var, Matrix};

create_exception!(sparsevar, SparseVarError, PyException);

fn err(e: sparsevar::Error) -> PyErr {
    SparseVarError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(err)
}

fn parse<T: std::str::FromStr<Err = sparsevar::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "VarModel", module = "sparsevar", frozen)]
struct PyVarModel {
    inner: sparsevar::VarModel,
}

#[pymethods]
impl PyVarModel {
    /// `phis` is a list of k-by-k lag matrices, `sigma` the innovation covariance.
    #[new]
    fn new(phis: Vec<Vec<Vec<f64>>>, sigma: Vec<Vec<f64>>) -> PyResult<Self> {
        let phis = phis.into_iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
        let inner = sparsevar::VarModel::new(phis, matrix(sigma)?).map_err(err)?;
        Ok(PyVarModel { inner })
    }

    /// A named simulation design (`"A"` to `"D"`) with `k` variables.
    #[staticmethod]
    fn design(experiment: &str, k: usize) -> PyResult<Self> {
        let (inner, _) = mc::make_dgp(parse(experiment)?, k).map_err(err)?;
        Ok(PyVarModel { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyVarModel { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("model serializes")
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    fn phis(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.phis().iter().map(Matrix::to_rows).collect()
    }

    fn coefficients(&self) -> Vec<Vec<f64>> {
        self.inner.coefficient_matrix().to_rows()
    }

    fn spectral_radius(&self) -> PyResult<f64> {
        Ok(self.inner.companion().map_err(err)?.rho)
    }

    fn population_gamma(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.inner.population_gamma().map_err(err)?.to_rows())
    }

    fn sigma_t(&self) -> PyResult<f64> {
        self.inner.sigma_t().map_err(err)
    }

    /// Supports of each equation, as regressor indices.
    fn supports(&self) -> Vec<Vec<usize>> {
        SparsityInfo::from_model(&self.inner).supports
    }

    #[pyo3(signature = (t, seed, burn_in=None))]
    fn simulate(&self, t: usize, seed: u64, burn_in: Option<usize>) -> PyResult<PyDataset> {
        let burn_in = burn_in.unwrap_or_else(|| var::default_burn_in(self.inner.p()));
        let inner = self.inner.simulate(t, burn_in, seed).map_err(err)?;
        Ok(PyDataset { inner })
    }

    fn __repr__(&self) -> String {
        format!("VarModel(k={}, p={})", self.inner.k(), self.inner.p())
    }
}

#[pyclass(name = "Dataset", module = "sparsevar", frozen)]
struct PyDataset {
    inner: sparsevar::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (initial, path, innovations=None))]
    fn new(initial: Vec<Vec<f64>>, path: Vec<Vec<f64>>, innovations: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let innovations = innovations.map(matrix).transpose()?;
        let inner = sparsevar::Dataset::new(matrix(initial)?, matrix(path)?, innovations).map_err(err)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyDataset {
            inner: sparsevar::Dataset::read(&path).map_err(err)?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    fn path(&self) -> Vec<Vec<f64>> {
        self.inner.path().to_rows()
    }

    fn initial(&self) -> Vec<Vec<f64>> {
        self.inner.initial().to_rows()
    }

    fn innovations(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.innovations().map(Matrix::to_rows)
    }

    /// `(X, [y_1, ..., y_k])` of the stacked regression.
    fn design(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let problem = var::stack(&self.inner);
        (problem.x.to_rows(), problem.ys)
    }

    fn __repr__(&self) -> String {
        format!("Dataset(k={}, p={}, T={})", self.inner.k(), self.inner.p(), self.inner.t())
    }
}

#[pyclass(name = "SystemFit", module = "sparsevar", frozen)]
struct PySystemFit {
    record: SystemFitRecord,
}

#[pymethods]
impl PySystemFit {
    #[getter]
    fn estimator(&self) -> &'static str {
        self.record.estimator.as_str()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.record.lambda_per_equation.clone()
    }

    #[getter]
    fn active_sets(&self) -> Vec<Vec<usize>> {
        self.record.active_sets.clone()
    }

    /// k-by-kp matrix whose row `i` holds equation `i`.
    fn coefficients(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.record.coefficients().map_err(err)?.to_rows())
    }

    fn forecast(&self, data: &PyDataset) -> PyResult<Vec<f64>> {
        self.record.forecast(&data.inner).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.record).expect("fit serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let record = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PySystemFit { record })
    }

    fn __repr__(&self) -> String {
        format!("SystemFit({}, k={}, p={})", self.record.estimator, self.record.k, self.record.p)
    }
}

/// Fits one estimator to every equation. `truth` supplies the support for
/// `oracle_ols`; `lambda` fixes the penalty instead of BIC selection.
#[pyfunction]
#[pyo3(signature = (data, estimator="lasso", truth=None, lambda_=None))]
fn fit(py: Python<'_>, data: &PyDataset, estimator: &str, truth: Option<&PyVarModel>, lambda_: Option<f64>) -> PyResult<PySystemFit> {
    let tag: EstimatorTag = parse(estimator)?;
    let truth = truth.map(|m| SparsityInfo::from_model(&m.inner));
    let opts = FitOptions {
        lambda: lambda_,
        ..FitOptions::default()
    };
    let dataset = data.inner.clone();
    let fit = py
        .detach(move || estimators::fit_system(&dataset, tag, truth.as_ref(), &opts))
        .map_err(err)?;
    Ok(PySystemFit { record: fit.record() })
}

/// Weighted LASSO by coordinate descent on `(1/T)||y - Xb||^2 + 2 lambda sum w_j |b_j|`.
#[pyfunction]
#[pyo3(signature = (x, y, lambda_, weights=None, tol=1e-7, max_iter=100_000))]
fn lasso(x: Vec<Vec<f64>>, y: Vec<f64>, lambda_: f64, weights: Option<Vec<f64>>, tol: f64, max_iter: usize) -> PyResult<(Vec<f64>, bool)> {
    let x = matrix(x)?;
    if x.rows() != y.len() {
        return Err(PyValueError::new_err("x and y have different numbers of rows"));
    }
    let weights = weights.unwrap_or_else(|| vec![1.0; x.cols()]);
    if weights.len() != x.cols() {
        return Err(PyValueError::new_err("one weight per column is required"));
    }
    let pen = PenaltySpec::new(lambda_, weights).map_err(err)?;
    let r = solver::lasso_cd(&x, &y, &pen, tol, max_iter, None);
    Ok((r.beta, r.converged))
}

#[pyfunction]
fn lambda_theorem1(t: usize, k: usize, p: usize, sigma_t: f64) -> f64 {
    theory::lambda_theorem1(t, k, p, sigma_t)
}

#[pyfunction]
fn prob_bound_thm1(t: usize, k: usize, p: usize, a_const: f64) -> f64 {
    theory::prob_bound_thm1(t, k, p, a_const)
}

/// Restricted eigenvalue of a symmetric PSD matrix over supports of size
/// up to `r`. Returns `(value, minimizing subset)`.
#[pyfunction]
#[pyo3(signature = (psi, r, seed=0))]
fn restricted_eigenvalue(py: Python<'_>, psi: Vec<Vec<f64>>, r: usize, seed: u64) -> PyResult<(f64, Vec<usize>)> {
    let psi = matrix(psi)?;
    if !psi.is_square() || r == 0 || r > psi.rows() {
        return Err(PyValueError::new_err("psi must be square and 1 <= r <= its size"));
    }
    let budget = ReBudget { seed, ..ReBudget::default() };
    let est = py.detach(move || theory::restricted_eigenvalue(&psi, r, &budget));
    Ok((est.value, est.subset))
}

/// Theory diagnostics for a simulated dataset, as a dict.
#[pyfunction]
#[pyo3(signature = (data, model, q=0.5, a_const=1.0, lambda_=None))]
fn diagnose<'py>(py: Python<'py>, data: &PyDataset, model: &PyVarModel, q: f64, a_const: f64, lambda_: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let (dataset, m) = (data.inner.clone(), model.inner.clone());
    let report = py
        .detach(move || {
            let mut params = TheoryParams::from_model(&m, dataset.t(), q, a_const, &ReBudget::default())?;
            if let Some(l) = lambda_ {
                params = params.with_lambda(l);
            }
            theory::diagnose(&dataset, &m, &params, 1e-9)
        })
        .map_err(err)?;
    json_to_py(py, &serde_json::to_string(&report).expect("report serializes"))
}

/// Runs a Monte Carlo experiment and returns its report as a dict.
#[pyfunction]
#[pyo3(signature = (experiment, k, t, n_reps=100, seed=0, estimators=None, threads=None, theory_checks=false))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    experiment: &str,
    k: usize,
    t: usize,
    n_reps: usize,
    seed: u64,
    estimators: Option<Vec<String>>,
    threads: Option<usize>,
    theory_checks: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let experiment: Experiment = parse(experiment)?;
    let mut spec = ExperimentSpec::new(experiment, k, t, n_reps);
    spec.base_seed = seed;
    spec.theory_checks = theory_checks;
    if let Some(tags) = estimators {
        spec.estimators = tags.iter().map(|s| parse(s)).collect::<PyResult<_>>()?;
    }
    let report = py.detach(move || mc::run_experiment(&spec, threads)).map_err(err)?;
    json_to_py(py, &report.to_json_string().map_err(err)?)
}

#[pymodule]
#[pyo3(name = "sparsevar")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SparseVarError", m.py().get_type::<SparseVarError>())?;
    m.add("ESTIMATORS", EstimatorTag::ALL.iter().map(|t| t.as_str()).collect::<Vec<_>>())?;
    m.add_class::<PyVarModel>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PySystemFit>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(lasso, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(prob_bound_thm1, m)?)?;
    m.add_function(wrap_pyfunction!(restricted_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
