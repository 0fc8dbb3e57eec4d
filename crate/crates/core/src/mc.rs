//! Monte Carlo harness for the four simulation designs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorTag, FitOptions, SparsityInfo, SystemFit};
use crate::linalg::Matrix;
use crate::solver::{self, Quadratic};
use crate::theory::{self, ReBudget, TheoryParams};
use crate::var::{self, VarModel};

pub const NOISE_VARIANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    A,
    B,
    C,
    D,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::A, Experiment::B, Experiment::C, Experiment::D];

    pub fn dimensions(self) -> &'static [usize] {
        match self {
            Experiment::A => &[10, 20, 50, 100],
            Experiment::B | Experiment::C | Experiment::D => &[10, 20, 50],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::A => "A",
            Experiment::B => "B",
            Experiment::C => "C",
            Experiment::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Experiment::A),
            "B" => Ok(Experiment::B),
            "C" => Ok(Experiment::C),
            "D" => Ok(Experiment::D),
            _ => Err(Error::UnknownCombination(format!("no experiment '{s}'"))),
        }
    }
}

/// The data generating process of `experiment` with `k` variables and its
/// true sparsity pattern. Innovations have covariance `0.01 I`.
pub fn make_dgp(experiment: Experiment, k: usize) -> Result<(VarModel, SparsityInfo)> {
    if !experiment.dimensions().contains(&k) {
        return Err(Error::UnknownCombination(format!("experiment {experiment} is not defined for k={k}")));
    }
    let phis = match experiment {
        Experiment::A => vec![Matrix::identity(k).scale(0.5)],
        Experiment::B => {
            let block = |v: f64| Matrix::from_fn(k, k, |i, j| if i / 5 == j / 5 { v } else { 0.0 });
            vec![block(0.15), Matrix::zeros(k, k), Matrix::zeros(k, k), block(-0.1)]
        }
        Experiment::C => {
            let phi1 = Matrix::identity(k).scale(0.95);
            (0..5).map(|j| phi1.scale((-0.95f64).powi(j))).collect()
        }
        Experiment::D => vec![Matrix::from_fn(k, k, |i, j| {
            let d = i.abs_diff(j) as i32;
            (-1f64).powi(d) * 0.4f64.powi(d + 1)
        })],
    };
    let model = VarModel::new(phis, Matrix::identity(k).scale(NOISE_VARIANCE))?;
    let truth = SparsityInfo::from_model(&model);
    Ok((model, truth))
}

/// `sqrt(mean_r ||beta_hat_r - beta*||^2)` over stacked system coefficients.
pub fn rmse(estimates: &[Matrix], truth: &Matrix) -> f64 {
    assert!(!estimates.is_empty());
    let total: f64 = estimates.iter().map(|e| sq_distance(e, truth)).sum();
    (total / estimates.len() as f64).sqrt()
}

fn sq_distance(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `sqrt((1/k) mean_r ||y_hat_r - y_r||^2)`
pub fn rmsfe(forecasts: &[Vec<f64>], realized: &[Vec<f64>], k: usize) -> f64 {
    assert!(!forecasts.is_empty() && forecasts.len() == realized.len());
    let total: f64 = forecasts
        .iter()
        .zip(realized)
        .map(|(f, y)| f.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum();
    (total / (k as f64 * forecasts.len() as f64)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub uncovered: f64,
    pub included: f64,
    pub share: f64,
    pub n_selected: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct RepSelection {
    uncovered: bool,
    included: bool,
    share: f64,
    n_selected: usize,
}

fn rep_selection(active_sets: &[Vec<usize>], truth: &SparsityInfo) -> RepSelection {
    let mut uncovered = true;
    let mut included = true;
    let mut hits = 0usize;
    let mut n_selected = 0usize;
    for (active, support) in active_sets.iter().zip(&truth.supports) {
        let common = support.iter().filter(|j| active.binary_search(j).is_ok()).count();
        hits += common;
        n_selected += active.len();
        included &= common == support.len();
        uncovered &= common == support.len() && active.len() == support.len();
    }
    let total = truth.total();
    RepSelection {
        uncovered,
        included,
        share: if total == 0 { 1.0 } else { hits as f64 / total as f64 },
        n_selected,
    }
}

pub fn selection_metrics(fits: &[SystemFit], truth: &SparsityInfo) -> SelectionMetrics {
    assert!(!fits.is_empty());
    let reps: Vec<RepSelection> = fits
        .iter()
        .map(|f| {
            let sets: Vec<Vec<usize>> = f.equations.iter().map(|e| e.active_set.clone()).collect();
            rep_selection(&sets, truth)
        })
        .collect();
    aggregate_selection(&reps)
}

fn aggregate_selection(reps: &[RepSelection]) -> SelectionMetrics {
    let n = reps.len() as f64;
    SelectionMetrics {
        uncovered: reps.iter().filter(|r| r.uncovered).count() as f64 / n,
        included: reps.iter().filter(|r| r.included).count() as f64 / n,
        share: reps.iter().map(|r| r.share).sum::<f64>() / n,
        n_selected: reps.iter().map(|r| r.n_selected as f64).sum::<f64>() / n,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub n_reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "all_estimators")]
    pub estimators: Vec<EstimatorTag>,
    #[serde(default)]
    pub theory_checks: bool,
}

fn all_estimators() -> Vec<EstimatorTag> {
    EstimatorTag::ALL.to_vec()
}

impl ExperimentSpec {
    pub fn new(experiment: Experiment, k: usize, t: usize, n_reps: usize) -> Self {
        ExperimentSpec {
            experiment,
            k,
            t,
            n_reps,
            base_seed: 0,
            estimators: all_estimators(),
            theory_checks: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        make_dgp(self.experiment, self.k)?;
        if self.n_reps == 0 {
            return Err(Error::InvalidInput("n_reps must be at least 1".into()));
        }
        if self.t < 2 {
            return Err(Error::InvalidInput("T must be at least 2".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidInput("no estimators requested".into()));
        }
        Ok(())
    }

    /// `{experiment}_{k}_{T}`
    pub fn stem(&self) -> String {
        format!("{}_{}_{}", self.experiment, self.k, self.t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRow {
    pub estimator: EstimatorTag,
    pub true_model_uncovered: Option<f64>,
    pub true_model_included: Option<f64>,
    pub share_relevant: Option<f64>,
    pub n_selected: Option<f64>,
    pub rmse: Option<f64>,
    pub rmsfe: Option<f64>,
    pub infeasible: bool,
    pub infeasible_cause: Option<String>,
    /// Estimate of the first coefficient of the first equation in every
    /// replication, empty when infeasible.
    pub first_coefficient: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheorySummary {
    pub lambda_t: f64,
    pub k_t: f64,
    pub kappa_sq: f64,
    pub prob_bound_thm1: f64,
    pub pi_q: f64,
    pub freq_b_t: f64,
    pub freq_c_t: f64,
    pub freq_d_t: f64,
    /// Replications with `b_t` in which a LASSO fit at `lambda_T` broke one
    /// of the three inequalities.
    pub thm1_violations: usize,
    pub thm1_checked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub experiment: Experiment,
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub n_reps: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub rows: Vec<EstimatorRow>,
    pub theory: Option<TheorySummary>,
    /// Wall-clock time; left out of serialized reports so reruns are
    /// byte-identical.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl McReport {
    pub fn row(&self, tag: EstimatorTag) -> Option<&EstimatorRow> {
        self.rows.iter().find(|r| r.estimator == tag)
    }

    pub fn stem(&self) -> String {
        format!("{}_{}_{}", self.experiment, self.k, self.t)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "estimator",
            "true_model_uncovered",
            "true_model_included",
            "share_relevant",
            "n_selected",
            "rmse",
            "rmsfe",
            "infeasible",
            "infeasible_cause",
        ])?;
        let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.estimator.to_string(),
                cell(r.true_model_uncovered),
                cell(r.true_model_included),
                cell(r.share_relevant),
                cell(r.n_selected),
                cell(r.rmse),
                cell(r.rmsfe),
                r.infeasible.to_string(),
                r.infeasible_cause.clone().unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Per-replication first-coefficient estimates, one column per feasible
    /// estimator, for external density plots.
    pub fn density_csv_string(&self) -> Result<String> {
        let rows: Vec<&EstimatorRow> = self.rows.iter().filter(|r| !r.infeasible).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["replication".to_string()];
        header.extend(rows.iter().map(|r| r.estimator.to_string()));
        w.write_record(&header)?;
        for rep in 0..self.n_reps {
            let mut rec = vec![rep.to_string()];
            rec.extend(rows.iter().map(|r| format!("{}", r.first_coefficient[rep])));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `{stem}.csv` or `{stem}.json` into `dir`; returns the path.
    pub fn write(&self, dir: &Path, format: ReportFormat) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let (path, text) = match format {
            ReportFormat::Csv => (dir.join(format!("{}.csv", self.stem())), self.to_csv_string()?),
            ReportFormat::Json => (dir.join(format!("{}.json", self.stem())), self.to_json_string()?),
        };
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidInput(format!("unknown format '{s}'"))),
        }
    }
}

struct EstimatorOutcome {
    sq_error: f64,
    sq_forecast_error: f64,
    selection: RepSelection,
    first: f64,
}

struct RepTheory {
    b_t: bool,
    c_t: bool,
    d_t: bool,
    thm1_ok: Option<bool>,
}

struct RepOutcome {
    estimators: Vec<std::result::Result<EstimatorOutcome, String>>,
    theory: Option<RepTheory>,
}

struct Context {
    spec: ExperimentSpec,
    model: VarModel,
    truth: SparsityInfo,
    coefficients: Matrix,
    burn_in: usize,
    theory: Option<(TheoryParams, f64)>,
    opts: FitOptions,
}

/// Subset budget for the population restricted eigenvalue in Monte Carlo
/// theory checks.
pub fn mc_re_budget() -> ReBudget {
    ReBudget {
        enumeration_cap: 40,
        n_random_starts: 2,
        n_descents: 2,
        max_outer_iter: 100,
        max_inner_iter: 2000,
        seed: 0,
    }
}

fn run_replication(ctx: &Context, rep: usize) -> Result<RepOutcome> {
    let spec = &ctx.spec;
    let seed = spec.base_seed.wrapping_add(rep as u64);
    let full = ctx.model.simulate(spec.t + 1, ctx.burn_in, seed)?;
    let (data, realized) = full.split_last()?;
    let problem = var::stack(&data);
    let fits = estimators::fit_many(&problem, &spec.estimators, Some(&ctx.truth), &ctx.opts);
    let outcomes = fits
        .into_iter()
        .map(|(_, fit)| match fit {
            Ok(fit) => {
                let coef = fit.coefficients();
                let forecast = var::forecast_one_step(&coef, &data);
                let sets: Vec<Vec<usize>> = fit.equations.iter().map(|e| e.active_set.clone()).collect();
                Ok(EstimatorOutcome {
                    sq_error: sq_distance(&coef, &ctx.coefficients),
                    sq_forecast_error: forecast.iter().zip(&realized).map(|(a, b)| (a - b).powi(2)).sum(),
                    selection: rep_selection(&sets, &ctx.truth),
                    first: coef[(0, 0)],
                })
            }
            Err(e) => Err(e.to_string()),
        })
        .collect();

    let theory = match &ctx.theory {
        None => None,
        Some((params, lambda)) => {
            let flags = theory::event_flags(&data, &ctx.model, &ctx.truth, params)?;
            let thm1_ok = flags.b_t.then(|| {
                (0..spec.k).all(|i| {
                    let q = estimators::equation_quadratic(&problem, i);
                    let pen = solver::PenaltySpec::unit(*lambda, problem.n_regressors()).expect("valid penalty");
                    let fit = lasso_at(&q, &pen);
                    theory::thm1_rhs_check(&problem, &fit, &ctx.model.beta(i), *lambda, 10.0 * solver::DEFAULT_TOL).all_hold()
                })
            });
            Some(RepTheory {
                b_t: flags.b_t,
                c_t: flags.c_t,
                d_t: flags.d_t,
                thm1_ok,
            })
        }
    };
    Ok(RepOutcome { estimators: outcomes, theory })
}

fn lasso_at(q: &Quadratic<'_>, pen: &solver::PenaltySpec) -> Vec<f64> {
    q.lasso_cd(pen, solver::DEFAULT_TOL, solver::DEFAULT_MAX_ITER, None).beta
}

fn aggregate(ctx: &Context, outcomes: &[RepOutcome]) -> (Vec<EstimatorRow>, Option<TheorySummary>) {
    let n = outcomes.len() as f64;
    let k = ctx.spec.k as f64;
    let rows = ctx
        .spec
        .estimators
        .iter()
        .enumerate()
        .map(|(e, &tag)| {
            let mut cause = None;
            let mut ok = Vec::with_capacity(outcomes.len());
            for o in outcomes {
                match &o.estimators[e] {
                    Ok(v) => ok.push(v),
                    Err(msg) => {
                        cause.get_or_insert_with(|| msg.clone());
                    }
                }
            }
            if let Some(cause) = cause {
                return EstimatorRow {
                    estimator: tag,
                    true_model_uncovered: None,
                    true_model_included: None,
                    share_relevant: None,
                    n_selected: None,
                    rmse: None,
                    rmsfe: None,
                    infeasible: true,
                    infeasible_cause: Some(cause),
                    first_coefficient: Vec::new(),
                };
            }
            let sel = aggregate_selection(&ok.iter().map(|o| o.selection).collect::<Vec<_>>());
            EstimatorRow {
                estimator: tag,
                true_model_uncovered: Some(sel.uncovered),
                true_model_included: Some(sel.included),
                share_relevant: Some(sel.share),
                n_selected: Some(sel.n_selected),
                rmse: Some((ok.iter().map(|o| o.sq_error).sum::<f64>() / n).sqrt()),
                rmsfe: Some((ok.iter().map(|o| o.sq_forecast_error).sum::<f64>() / (k * n)).sqrt()),
                infeasible: false,
                infeasible_cause: None,
                first_coefficient: ok.iter().map(|o| o.first).collect(),
            }
        })
        .collect();

    let theory = ctx.theory.as_ref().map(|(params, lambda)| {
        let th: Vec<&RepTheory> = outcomes.iter().filter_map(|o| o.theory.as_ref()).collect();
        let freq = |f: fn(&RepTheory) -> bool| th.iter().filter(|r| f(r)).count() as f64 / n;
        let (t, kk, p) = (ctx.spec.t, ctx.spec.k, ctx.model.p());
        let sigma_t = ctx.model.sigma_t().unwrap_or(f64::NAN);
        TheorySummary {
            lambda_t: *lambda,
            k_t: theory::k_t(t, kk, p, sigma_t),
            kappa_sq: params.kappa_sq_min(),
            prob_bound_thm1: theory::prob_bound_thm1(t, kk, p, params.a_const),
            pi_q: theory::pi_q(ctx.truth.s_bar.max(1), kk, p, t, params.zeta()),
            freq_b_t: freq(|r| r.b_t),
            freq_c_t: freq(|r| r.c_t),
            freq_d_t: freq(|r| r.d_t),
            thm1_violations: th.iter().filter(|r| r.thm1_ok == Some(false)).count(),
            thm1_checked: th.iter().filter(|r| r.thm1_ok.is_some()).count(),
        }
    });
    (rows, theory)
}

/// Runs all replications on `threads` workers (all cores when `None`). The
/// report depends only on the spec.
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<McReport> {
    run_experiment_with(spec, threads, &FitOptions::default())
}

pub fn run_experiment_with(spec: &ExperimentSpec, threads: Option<usize>, opts: &FitOptions) -> Result<McReport> {
    spec.validate()?;
    let start = Instant::now();
    let (model, truth) = make_dgp(spec.experiment, spec.k)?;
    let theory = if spec.theory_checks {
        let params = TheoryParams::from_model(&model, spec.t, 0.5, 1.0, &mc_re_budget())?;
        let lambda = params.lambda(spec.t, spec.k, model.p(), model.sigma_t()?)?;
        Some((params, lambda))
    } else {
        None
    };
    let ctx = Context {
        spec: spec.clone(),
        coefficients: model.coefficient_matrix(),
        burn_in: var::default_burn_in(model.p()),
        model,
        truth,
        theory,
        opts: opts.clone(),
    };
    let work = || -> Result<Vec<RepOutcome>> { (0..spec.n_reps).into_par_iter().map(|r| run_replication(&ctx, r)).collect() };
    let outcomes = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let (rows, theory) = aggregate(&ctx, &outcomes);
    Ok(McReport {
        experiment: spec.experiment,
        k: spec.k,
        t: spec.t,
        n_reps: spec.n_reps,
        base_seed: spec.base_seed,
        seeds: (0..spec.n_reps as u64).map(|r| spec.base_seed.wrapping_add(r)).collect(),
        rows,
        theory,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}
