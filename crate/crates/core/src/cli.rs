//! Command-line front end. Every command reads its parameters from flags,
//! optionally layered over a JSON config file, and writes its outputs to
//! the `--out` directory.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimators::{self, EstimatorTag, FitOptions, SparsityInfo, SystemFitRecord};
use crate::mc::{self, Experiment, ExperimentSpec, ReportFormat};
use crate::theory::{self, ReBudget, TheoryParams};
use crate::var::{self, Dataset, VarModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_ESTIMATOR: i32 = 4;
pub const EXIT_DIAGNOSTICS: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    fn from_error(e: Error, fallback: i32) -> Self {
        let code = match &e {
            Error::NotStationary { .. } | Error::InvalidModel(_) | Error::Overflow => EXIT_MODEL,
            Error::MissingInnovations | Error::SingularSubGram | Error::ZeroKappa => EXIT_DIAGNOSTICS,
            Error::UnknownCombination(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_CONFIG,
            e if estimators::is_infeasible(e) => EXIT_ESTIMATOR,
            _ => fallback,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "sparsevar", version, about = "Sparse VAR estimation, theory diagnostics and Monte Carlo experiments")]
pub struct Cli {
    /// JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub format: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a dataset from a named design or a model file.
    Simulate(SimulateArgs),
    /// Fit estimators to a dataset.
    Fit(FitArgs),
    /// One-step forecast from a saved fit.
    Forecast(ForecastArgs),
    /// Run a Monte Carlo experiment.
    Mc(McArgs),
    /// Evaluate events, bounds and inequalities on simulated data.
    Diag(DiagArgs),
    /// Run all designs and assemble table-shaped summaries.
    PaperTables(TablesArgs),
}

#[derive(Args, Debug, Default)]
pub struct DesignArgs {
    /// Named design: A, B, C or D.
    #[arg(long)]
    pub experiment: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Model JSON file with `phis` and `sigma`.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// File stem of the dataset inside the output directory.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Dataset CSV written by `simulate`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated estimator tags.
    #[arg(long)]
    pub estimators: Option<String>,
    /// Fixed penalty instead of BIC selection.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Model whose sparsity pattern the oracle estimator uses.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub design: DesignArgs,
}

#[derive(Args, Debug)]
pub struct ForecastArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Fit JSON written by `fit`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long)]
    pub experiment: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub estimators: Option<String>,
    /// Also evaluate the theory events in every replication.
    #[arg(long)]
    pub theory: bool,
    /// Also write per-replication first-coefficient estimates.
    #[arg(long)]
    pub histogram: bool,
}

#[derive(Args, Debug)]
pub struct DiagArgs {
    /// Dataset CSV with an innovations file next to it.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Penalty overriding the theory value.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// The free constant in the probability bounds.
    #[arg(long)]
    pub a_const: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    #[arg(long)]
    pub reps: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long = "T")]
    pub t: Option<String>,
    /// Restrict to one design.
    #[arg(long)]
    pub experiment: Option<String>,
    #[arg(long)]
    pub estimators: Option<String>,
}

/// Every key a config file may carry; which ones matter depends on the command.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub experiment: Option<String>,
    pub k: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    #[serde(rename = "T_values")]
    pub t_values: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub estimators: Option<Vec<String>>,
    pub lambda: Option<f64>,
    pub burn_in: Option<usize>,
    pub name: Option<String>,
    pub model: Option<VarModel>,
    pub model_path: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub fit: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub theory_checks: Option<bool>,
    pub histogram: Option<bool>,
    pub q: Option<f64>,
    pub a_const: Option<f64>,
}

struct Globals {
    seed: u64,
    threads: Option<usize>,
    out: PathBuf,
    format: ReportFormat,
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
}

fn parse_estimators(flag: Option<&str>, cfg: Option<&Vec<String>>) -> CliResult<Vec<EstimatorTag>> {
    let items: Vec<String> = match (flag, cfg) {
        (Some(s), _) => s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
        (None, Some(v)) => v.clone(),
        (None, None) => return Ok(EstimatorTag::ALL.to_vec()),
    };
    if items.is_empty() {
        return Err(CliError::config("empty estimator list"));
    }
    items
        .iter()
        .map(|s| s.parse::<EstimatorTag>().map_err(|e| CliError::config(e.to_string())))
        .collect()
}

fn parse_experiment(s: &str) -> CliResult<Experiment> {
    s.parse().map_err(|e: Error| CliError::config(e.to_string()))
}

fn read_model(path: &Path) -> CliResult<VarModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read model {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError {
        code: EXIT_MODEL,
        message: format!("invalid model {}: {e}", path.display()),
    })
}

/// The model named by flags or config: a named design, a model file, or an
/// inline model in the config.
fn resolve_model(design: &DesignArgs, cfg: &RunConfig) -> CliResult<Option<VarModel>> {
    if let Some(path) = design.model.as_ref().or(cfg.model_path.as_ref()) {
        return read_model(path).map(Some);
    }
    if let Some(name) = design.experiment.as_ref().or(cfg.experiment.as_ref()) {
        let k = design.k.or(cfg.k).ok_or_else(|| CliError::config("--k is required with --experiment"))?;
        let (model, _) = mc::make_dgp(parse_experiment(name)?, k).map_err(|e| CliError::from_error(e, EXIT_CONFIG))?;
        return Ok(Some(model));
    }
    Ok(cfg.model.clone())
}

fn out_file(dir: &Path, name: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    Dataset::read(path).map_err(|e| CliError::config(format!("cannot read dataset {}: {e}", path.display())))
}

fn cmd_simulate(args: &SimulateArgs, cfg: &RunConfig, g: &Globals) -> CliResult<()> {
    let model = resolve_model(&args.design, cfg)?.ok_or_else(|| CliError::config("simulate needs --experiment/--k, --model or an inline model"))?;
    let t = args.t.or(cfg.t).ok_or_else(|| CliError::config("--T is required"))?;
    if t == 0 {
        return Err(CliError::config("T must be positive"));
    }
    let burn_in = args.burn_in.or(cfg.burn_in).unwrap_or_else(|| var::default_burn_in(model.p()));
    let data = model.simulate(t, burn_in, g.seed).map_err(|e| CliError::from_error(e, EXIT_MODEL))?;
    let name = args.name.clone().or_else(|| cfg.name.clone()).unwrap_or_else(|| "data".into());
    let path = out_file(&g.out, &format!("{name}.csv"))?;
    data.write(&path).map_err(|e| CliError::from_error(e, EXIT_CONFIG))?;
    let model_path = out_file(&g.out, &format!("{name}.model.json"))?;
    write_text(&model_path, &(serde_json::to_string_pretty(&model).expect("model serializes") + "\n"))?;
    println!("wrote {} (k={}, p={}, T={})", path.display(), data.k(), data.p(), data.t());
    Ok(())
}

fn cmd_fit(args: &FitArgs, cfg: &RunConfig, g: &Globals) -> CliResult<()> {
    let data_path = args.data.as_ref().or(cfg.data.as_ref()).ok_or_else(|| CliError::config("--data is required"))?;
    let data = read_dataset(data_path)?;
    let tags = parse_estimators(args.estimators.as_deref(), cfg.estimators.as_ref())?;
    let truth_model = match args.truth.as_ref().or(cfg.truth.as_ref()) {
        Some(p) => Some(read_model(p)?),
        None => resolve_model(&args.design, cfg)?,
    };
    if tags.contains(&EstimatorTag::OracleOls) && truth_model.is_none() {
        return Err(CliError::config("oracle_ols needs --truth (a model file) or a named design"));
    }
    let truth = truth_model.as_ref().map(SparsityInfo::from_model);
    if let Some(t) = &truth {
        if t.supports.len() != data.k() || truth_model.as_ref().unwrap().p() != data.p() {
            return Err(CliError::config("truth model dimensions do not match the data"));
        }
    }
    let opts = FitOptions {
        lambda: args.lambda.or(cfg.lambda),
        ..FitOptions::default()
    };
    let problem = var::stack(&data);
    let mut first_error = None;
    for (tag, fit) in estimators::fit_many(&problem, &tags, truth.as_ref(), &opts) {
        match fit {
            Ok(fit) => {
                let path = out_file(&g.out, &format!("fit_{tag}.json"))?;
                write_text(&path, &(serde_json::to_string_pretty(&fit.record()).expect("fit serializes") + "\n"))?;
                println!("{tag}: wrote {}", path.display());
                for (i, e) in fit.equations.iter().enumerate() {
                    println!("  equation {}: lambda={:.6e} active={}", i + 1, e.lambda_selected, e.active_set.len());
                }
            }
            Err(e) => {
                eprintln!("{tag}: infeasible: {e}");
                first_error.get_or_insert(CliError {
                    code: EXIT_ESTIMATOR,
                    message: format!("{tag}: {e}"),
                });
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_forecast(args: &ForecastArgs, cfg: &RunConfig, g: &Globals) -> CliResult<()> {
    let data_path = args.data.as_ref().or(cfg.data.as_ref()).ok_or_else(|| CliError::config("--data is required"))?;
    let fit_path = args.fit.as_ref().or(cfg.fit.as_ref()).ok_or_else(|| CliError::config("--fit is required"))?;
    let data = read_dataset(data_path)?;
    let text = fs::read_to_string(fit_path).map_err(|e| CliError::config(format!("cannot read fit {}: {e}", fit_path.display())))?;
    let record: SystemFitRecord = serde_json::from_str(&text).map_err(|e| CliError::config(format!("invalid fit file: {e}")))?;
    let forecast = record.forecast(&data).map_err(|e| CliError::config(e.to_string()))?;
    let path = out_file(&g.out, &format!("forecast_{}.csv", record.estimator))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=data.k()).map(|i| format!("y{i}")).collect();
    w.write_record(&header).map_err(|e| CliError::config(e.to_string()))?;
    w.write_record(forecast.iter().map(|v| format!("{v}"))).map_err(|e| CliError::config(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| CliError::config(e.to_string()))?;
    write_text(&path, &String::from_utf8(bytes).expect("utf-8"))?;
    println!("{}", forecast.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "));
    Ok(())
}

fn mc_spec(experiment: Option<&String>, k: Option<usize>, t: Option<usize>, reps: Option<usize>, tags: Vec<EstimatorTag>, theory: bool, seed: u64) -> CliResult<ExperimentSpec> {
    let experiment = parse_experiment(experiment.ok_or_else(|| CliError::config("--experiment is required"))?)?;
    let spec = ExperimentSpec {
        experiment,
        k: k.ok_or_else(|| CliError::config("--k is required"))?,
        t: t.ok_or_else(|| CliError::config("--T is required"))?,
        n_reps: reps.unwrap_or(100),
        base_seed: seed,
        estimators: tags,
        theory_checks: theory,
    };
    spec.validate().map_err(|e| CliError::from_error(e, EXIT_CONFIG))?;
    Ok(spec)
}

fn cmd_mc(args: &McArgs, cfg: &RunConfig, g: &Globals) -> CliResult<()> {
    let tags = parse_estimators(args.estimators.as_deref(), cfg.estimators.as_ref())?;
    let theory = args.theory || cfg.theory_checks.unwrap_or(false);
    let spec = mc_spec(
        args.experiment.as_ref().or(cfg.experiment.as_ref()),
        args.k.or(cfg.k),
        args.t.or(cfg.t),
        args.reps.or(cfg.reps),
        tags,
        theory,
        g.seed,
    )?;
    let report = mc::run_experiment(&spec, g.threads).map_err(|e| CliError::from_error(e, EXIT_MODEL))?;
    let path = report.write(&g.out, g.format).map_err(|e| CliError::from_error(e, EXIT_CONFIG))?;
    if args.histogram || cfg.histogram.unwrap_or(false) {
        let hist = out_file(&g.out, &format!("{}_density.csv", report.stem()))?;
        write_text(&hist, &report.density_csv_string().map_err(|e| CliError::from_error(e, EXIT_CONFIG))?)?;
    }
    println!("wrote {}", path.display());
    print_report(&report);
    eprintln!("runtime {:.2}s", report.runtime_secs);
    Ok(())
}

fn print_report(report: &mc::McReport) {
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
    println!(
        "{:<22} {:>9} {:>9} {:>7} {:>9} {:>7} {:>7}",
        "estimator", "uncovered", "included", "share", "selected", "rmse", "rmsfe"
    );
    for r in &report.rows {
        println!(
            "{:<22} {:>9} {:>9} {:>7} {:>9} {:>7} {:>7}",
            r.estimator.to_string(),
            cell(r.true_model_uncovered),
            cell(r.true_model_included),
            cell(r.share_relevant),
            r.n_selected.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into()),
            cell(r.rmse),
            r.rmsfe.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into()),
        );
    }
}

#[derive(Serialize)]
struct DiagOutput {
    lambda_override: Option<f64>,
    kappa_gamma: Vec<f64>,
    f_norm_sum: f64,
    replications: Vec<DiagReplication>,
}

#[derive(Serialize)]
struct DiagReplication {
    seed: Option<u64>,
    report: theory::DiagnosticReport,
}

fn cmd_diag(args: &DiagArgs, cfg: &RunConfig, g: &Globals) -> CliResult<()> {
    let model = resolve_model(&args.design, cfg)?.ok_or_else(|| CliError::config("diag needs --experiment/--k or --model"))?;
    let q = args.q.or(cfg.q).unwrap_or(0.5);
    let a_const = args.a_const.or(cfg.a_const).unwrap_or(1.0);
    let data_path = args.data.as_ref().or(cfg.data.as_ref());
    let datasets: Vec<(Option<u64>, Dataset)> = match data_path {
        Some(p) => vec![(None, read_dataset(p)?)],
        None => {
            let t = args.t.or(cfg.t).ok_or_else(|| CliError::config("--T or --data is required"))?;
            let reps = args.reps.or(cfg.reps).unwrap_or(1);
            let burn_in = var::default_burn_in(model.p());
            (0..reps as u64)
                .map(|r| {
                    let seed = g.seed.wrapping_add(r);
                    model.simulate(t, burn_in, seed).map(|d| (Some(seed), d)).map_err(|e| CliError::from_error(e, EXIT_MODEL))
                })
                .collect::<CliResult<_>>()?
        }
    };
    let t = datasets[0].1.t();
    if datasets[0].1.k() != model.k() || datasets[0].1.p() != model.p() {
        return Err(CliError::config("model dimensions do not match the data"));
    }
    let mut params = TheoryParams::from_model(&model, t, q, a_const, &ReBudget::default()).map_err(|e| CliError::from_error(e, EXIT_CONFIG))?;
    if let Some(l) = args.lambda.or(cfg.lambda) {
        params = params.with_lambda(l);
    }
    let mut replications = Vec::with_capacity(datasets.len());
    for (seed, data) in &datasets {
        let report = theory::diagnose(data, &model, &params, 1e-9).map_err(|e| CliError::from_error(e, EXIT_DIAGNOSTICS))?;
        let thm1_pass = report.equations.iter().all(|e| e.thm1.all_hold());
        println!(
            "seed {}: b_t={} c_t={} d_t={} lambda={:.4e} thm1={} pi_q={:.4e}",
            seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
            report.events.b_t,
            report.events.c_t,
            report.events.d_t,
            report.lambda,
            if thm1_pass { "pass" } else { "fail" },
            report.pi_q
        );
        replications.push(DiagReplication { seed: *seed, report });
    }
    let out = DiagOutput {
        lambda_override: params.lambda_override,
        kappa_gamma: params.kappa_gamma.clone(),
        f_norm_sum: params.f_norm_sum,
        replications,
    };
    let path = out_file(&g.out, "diagnostics.json")?;
    write_text(&path, &(serde_json::to_string_pretty(&out).map_err(|e| CliError::config(e.to_string()))? + "\n"))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_tables(args: &TablesArgs, cfg: &RunConfig, g: &Globals) -> CliResult<()> {
    let tags = parse_estimators(args.estimators.as_deref(), cfg.estimators.as_ref())?;
    let reps = args.reps.or(cfg.reps).unwrap_or(100);
    let ts: Vec<usize> = match (&args.t, &cfg.t_values) {
        (Some(s), _) => s
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|e| CliError::config(format!("bad --T list: {e}"))))
            .collect::<CliResult<_>>()?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![50, 100, 500],
    };
    let experiments: Vec<Experiment> = match args.experiment.as_ref().or(cfg.experiment.as_ref()) {
        Some(e) => vec![parse_experiment(e)?],
        None => Experiment::ALL.to_vec(),
    };
    for exp in experiments {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "T", "estimator", "true_model_uncovered", "true_model_included", "share_relevant", "n_selected", "rmse", "rmsfe"])
            .map_err(|e| CliError::config(e.to_string()))?;
        for &k in exp.dimensions() {
            for &t in &ts {
                let spec = ExperimentSpec {
                    experiment: exp,
                    k,
                    t,
                    n_reps: reps,
                    base_seed: g.seed,
                    estimators: tags.clone(),
                    theory_checks: false,
                };
                let report = mc::run_experiment(&spec, g.threads).map_err(|e| CliError::from_error(e, EXIT_MODEL))?;
                report.write(&g.out, g.format).map_err(|e| CliError::from_error(e, EXIT_CONFIG))?;
                let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
                for r in &report.rows {
                    w.write_record([
                        k.to_string(),
                        t.to_string(),
                        r.estimator.to_string(),
                        cell(r.true_model_uncovered),
                        cell(r.true_model_included),
                        cell(r.share_relevant),
                        cell(r.n_selected),
                        cell(r.rmse),
                        cell(r.rmsfe),
                    ])
                    .map_err(|e| CliError::config(e.to_string()))?;
                }
                eprintln!("experiment {exp} k={k} T={t}: {:.1}s", report.runtime_secs);
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::config(e.to_string()))?;
        let path = out_file(&g.out, &format!("table_{exp}.csv"))?;
        write_text(&path, &String::from_utf8(bytes).expect("utf-8"))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let format = match cli.format.as_ref().or(cfg.format.as_ref()) {
        Some(f) => f.parse::<ReportFormat>().map_err(|e| CliError::config(e.to_string()))?,
        None => ReportFormat::Csv,
    };
    if cli.threads.or(cfg.threads) == Some(0) {
        return Err(CliError::config("--threads must be at least 1"));
    }
    let g = Globals {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        threads: cli.threads.or(cfg.threads),
        out: cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
        format,
    };
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &cfg, &g),
        Command::Fit(a) => cmd_fit(a, &cfg, &g),
        Command::Forecast(a) => cmd_forecast(a, &cfg, &g),
        Command::Mc(a) => cmd_mc(a, &cfg, &g),
        Command::Diag(a) => cmd_diag(a, &cfg, &g),
        Command::PaperTables(a) => cmd_tables(a, &cfg, &g),
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
