//! Experiment runner behind the `maxmargin` binary.
//!
//! A TOML config ([`config::ExperimentConfig`]) describes one instance
//! (data, kernel, schedule) and a list of algorithms. [`run_experiment`]
//! executes every algorithm and writes, into the output directory:
//!
//! * `<name>_trace.csv` per algorithm, one row per iterate, with the fixed
//!   header `t,lambda_t,dual_obj,dual_gap,norm_error,margin,margin_gap,`
//!   `angle_gap,test_error,energy` (cells a run cannot compute stay empty);
//! * `summary.json` with the resolved settings, the oracle certificate when
//!   requested, and each algorithm's terminal row.
//!
//! [`run_comparison`] writes a single wide CSV aligned on the iteration
//! counter instead, for side-by-side plots. Trace bytes are a pure function
//! of the config: every float is printed in shortest round-trip form and all
//! randomness is seeded, so reruns produce identical CSV files (the JSON
//! summary additionally records wall time, which does vary).
//!
//! Process exit codes: 0 success, 2 bad configuration, 3 oracle failure
//! (such as non-separable data), 4 filesystem trouble.

pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use serde_json::json;
use thiserror::Error;

use maxmargin::baselines::{gd_margin_loss, subgrad_hinge, MarginLoss, PrimalTrace, StepRule};
use maxmargin::data::{prepare, save_csv, DataError, Prepared};
use maxmargin::metrics::{self, MetricsError};
use maxmargin::model::{classify, gram, signed_matrix, Dataset, Kernel, ModelError, SignedMatrix};
use maxmargin::oracle::{solve_max_margin, OracleError, OracleSolution};
use maxmargin::solvers::{
    run, solve_tikhonov_dual, Algorithm, Schedule, SolverConfig, SolverError,
};
use maxmargin::SignedGram;

use config::{AlgorithmSection, ConfigError, ExperimentConfig, GammaSetting, LossKind, RuleKind};

/// Exact header every trace CSV starts with.
pub const TRACE_HEADER: &str =
    "t,lambda_t,dual_obj,dual_gap,norm_error,margin,margin_gap,angle_gap,test_error,energy";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Oracle(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read(io) => CliError::Io(io),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io(io) => CliError::Io(io),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<maxmargin::baselines::BaselineError> for CliError {
    fn from(e: maxmargin::baselines::BaselineError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// One CSV row; `None` prints as an empty cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub lambda_t: Option<f64>,
    pub dual_obj: Option<f64>,
    pub dual_gap: Option<f64>,
    pub norm_error: Option<f64>,
    pub margin: Option<f64>,
    pub margin_gap: Option<f64>,
    pub angle_gap: Option<f64>,
    pub test_error: Option<f64>,
    pub energy: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

impl TraceRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.t,
            cell(self.lambda_t),
            cell(self.dual_obj),
            cell(self.dual_gap),
            cell(self.norm_error),
            cell(self.margin),
            cell(self.margin_gap),
            cell(self.angle_gap),
            cell(self.test_error),
            cell(self.energy),
        )
    }

    fn json(&self) -> serde_json::Value {
        json!({
            "t": self.t,
            "lambda_t": self.lambda_t,
            "dual_obj": self.dual_obj,
            "dual_gap": self.dual_gap,
            "norm_error": self.norm_error,
            "margin": self.margin,
            "margin_gap": self.margin_gap,
            "angle_gap": self.angle_gap,
            "test_error": self.test_error,
            "energy": self.energy,
        })
    }
}

impl From<&maxmargin::MetricRow> for TraceRow {
    fn from(r: &maxmargin::MetricRow) -> Self {
        TraceRow {
            t: r.t,
            lambda_t: Some(r.lambda_t),
            dual_obj: Some(r.dual_obj),
            dual_gap: r.dual_gap,
            norm_error: r.norm_error,
            margin: Some(r.margin),
            margin_gap: r.margin_gap,
            angle_gap: r.angle_gap,
            test_error: r.test_error,
            energy: r.energy,
        }
    }
}

/// Result of one algorithm on the shared instance.
pub struct AlgorithmOutcome {
    pub name: String,
    pub rows: Vec<TraceRow>,
    /// Per-penalty convergence flags; path-following runs only.
    pub converged: Option<Vec<bool>>,
}

/// Everything the algorithms shared: prepared data, Gram operator, resolved
/// step size, and the optional oracle solution.
pub struct ExperimentContext {
    pub prepared: Prepared,
    pub kernel: Kernel,
    pub schedule: Schedule,
    pub gamma: f64,
    pub op_norm: f64,
    pub oracle: Option<OracleSolution>,
}

/// Runs every configured algorithm and returns the shared context plus one
/// outcome per algorithm, in config order, with collision-free names.
pub fn execute(config: &ExperimentConfig) -> Result<(ExperimentContext, Vec<AlgorithmOutcome>), CliError> {
    let prepared = prepare(&config.data.to_data_config(config.seed)?)?;
    let kernel = config.kernel.to_kernel()?;
    let schedule = config.schedule.to_schedule()?;
    let train = &prepared.train;
    let g = gram(train, &kernel)?;
    let xs = signed_matrix(train);
    let op_norm = g.op_norm();
    let gamma = match config.gamma.resolve()? {
        Some(v) => v,
        None => {
            if op_norm > 0.0 {
                0.999 / op_norm
            } else {
                return Err(CliError::Config(
                    "automatic step size needs a nonzero Gram operator norm".to_string(),
                ));
            }
        }
    };
    let oracle = if config.compute_oracle {
        let sol = solve_max_margin(train, &kernel, config.oracle_tol)?;
        log::info!(
            "oracle: margin {:.6}, ||w*|| {:.6}, kkt residual {:.2e}",
            sol.margin_at_w_star / sol.norm_w_star,
            sol.norm_w_star,
            sol.kkt_residuals.max()
        );
        Some(sol)
    } else {
        None
    };
    let qu_star = oracle.as_ref().map(|sol| g.apply(&sol.u_star.u));

    let uses_primal = config.algorithms.iter().any(|a| {
        matches!(
            a,
            AlgorithmSection::GdMargin { .. } | AlgorithmSection::SubgradHinge { .. }
        )
    });
    if uses_primal && kernel != Kernel::Linear {
        return Err(CliError::Config(
            "primal baselines (gd_margin, subgrad_hinge) require the linear kernel".to_string(),
        ));
    }

    // Signed cross-kernel matrix against the test set, shared by the
    // non-solver algorithms; the solver loop builds its own internally.
    let cross = prepared.test.as_ref().map(|ts| {
        let mut kc = ndarray::Array2::<f64>::zeros((ts.n(), train.n()));
        for i in 0..ts.n() {
            for j in 0..train.n() {
                kc[[i, j]] = train.label(j) * kernel.eval(train.point(j), ts.point(i));
            }
        }
        kc
    });

    let mut outcomes = Vec::with_capacity(config.algorithms.len());
    let mut used_names: Vec<String> = Vec::new();
    for section in &config.algorithms {
        let base = section.name();
        let collisions = used_names.iter().filter(|n| **n == base).count();
        used_names.push(base.clone());
        let name = if collisions == 0 {
            base
        } else {
            format!("{base}_{}", collisions + 1)
        };
        log::info!("running {name}");
        let outcome = match section {
            AlgorithmSection::Alg1 => AlgorithmOutcome {
                name,
                rows: run_dual_solver(
                    config, train, &kernel, schedule, gamma, Algorithm::Alg1, 10.0,
                    oracle.as_ref(), prepared.test.as_ref(),
                )?,
                converged: None,
            },
            AlgorithmSection::Alg2 { alpha } => AlgorithmOutcome {
                name,
                rows: run_dual_solver(
                    config, train, &kernel, schedule, gamma, Algorithm::Alg2, *alpha,
                    oracle.as_ref(), prepared.test.as_ref(),
                )?,
                converged: None,
            },
            AlgorithmSection::TikhonovPath {
                lambdas,
                tol,
                max_iter,
            } => {
                let (rows, flags) = run_tikhonov_path(
                    &g, &xs, &kernel, lambdas, gamma, *tol, *max_iter,
                    oracle.as_ref(), qu_star.as_ref(),
                    prepared.test.as_ref(), cross.as_ref(),
                )?;
                AlgorithmOutcome {
                    name,
                    rows,
                    converged: Some(flags),
                }
            }
            AlgorithmSection::GdMargin {
                loss,
                step,
                iterations,
                w0,
            } => {
                let loss = match loss {
                    LossKind::Exponential => MarginLoss::Exponential,
                    LossKind::Logistic => MarginLoss::Logistic,
                };
                let start = primal_start(w0, train.d())?;
                let iters = iterations.unwrap_or(config.iterations) as usize;
                let trace = gd_margin_loss(train, loss, &start, *step, iters)?;
                AlgorithmOutcome {
                    name,
                    rows: primal_rows(
                        &trace, &xs, oracle.as_ref(),
                        prepared.test.as_ref(), cross.as_ref(),
                    ),
                    converged: None,
                }
            }
            AlgorithmSection::SubgradHinge {
                rule,
                step,
                iterations,
                w0,
            } => {
                let rule = match rule {
                    RuleKind::Constant => StepRule::Constant(*step),
                    RuleKind::InvSqrt => StepRule::InvSqrt(*step),
                };
                let start = primal_start(w0, train.d())?;
                let iters = iterations.unwrap_or(config.iterations) as usize;
                let trace = subgrad_hinge(train, &start, rule, iters)?;
                AlgorithmOutcome {
                    name,
                    rows: primal_rows(
                        &trace, &xs, oracle.as_ref(),
                        prepared.test.as_ref(), cross.as_ref(),
                    ),
                    converged: None,
                }
            }
        };
        outcomes.push(outcome);
    }

    Ok((
        ExperimentContext {
            prepared,
            kernel,
            schedule,
            gamma,
            op_norm,
            oracle,
        },
        outcomes,
    ))
}

#[allow(clippy::too_many_arguments)]
fn run_dual_solver(
    config: &ExperimentConfig,
    train: &Dataset,
    kernel: &Kernel,
    schedule: Schedule,
    gamma: f64,
    algorithm: Algorithm,
    alpha: f64,
    oracle: Option<&OracleSolution>,
    test: Option<&Dataset>,
) -> Result<Vec<TraceRow>, CliError> {
    let solver_config = SolverConfig {
        schedule,
        gamma: Some(gamma),
        alpha,
        iterations: config.iterations,
        u0: None,
    };
    let trace = run(train, kernel, &solver_config, algorithm, oracle, test)?;
    Ok(trace.rows.iter().map(TraceRow::from).collect())
}

#[allow(clippy::too_many_arguments)]
fn run_tikhonov_path(
    g: &SignedGram,
    xs: &SignedMatrix,
    kernel: &Kernel,
    lambdas: &[f64],
    gamma: f64,
    tol: f64,
    max_iter: usize,
    oracle: Option<&OracleSolution>,
    qu_star: Option<&Array1<f64>>,
    test: Option<&Dataset>,
    cross: Option<&ndarray::Array2<f64>>,
) -> Result<(Vec<TraceRow>, Vec<bool>), CliError> {
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut flags = Vec::with_capacity(lambdas.len());
    for (idx, &lambda) in lambdas.iter().enumerate() {
        let sol = solve_tikhonov_dual(g, xs, lambda, Some(gamma), tol, max_iter)?;
        if !sol.converged {
            log::warn!(
                "penalty {lambda}: no convergence within {max_iter} iterations; recording anyway"
            );
        }
        flags.push(sol.converged);
        let qu = g.apply(&sol.u.u);
        let dual_obj = 0.5 * sol.u.u.dot(&qu) + sol.u.u.sum();
        let dual_gap = oracle.map(|s| dual_obj - s.dual_value());
        let (margin, norm_error, margin_gap, angle_gap) = if *kernel == Kernel::Linear {
            let margin = metrics::margin(sol.w.view(), xs);
            let norm_error = oracle.map(|s| {
                sol.w
                    .iter()
                    .zip(s.w_star.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            });
            let (mg, ag) = match oracle {
                Some(s) => (
                    metrics::margin_gap(sol.w.view(), s, xs).ok(),
                    metrics::angle_gap(sol.w.view(), s).ok(),
                ),
                None => (None, None),
            };
            (margin, norm_error, mg, ag)
        } else {
            let reference = oracle.map(|s| (s, qu_star.expect("cached with the oracle")));
            let gaps = metrics::gram_space_gaps(&sol.u, &qu, reference);
            (gaps.margin, gaps.norm_error, gaps.margin_gap, gaps.angle_gap)
        };
        let test_error = match (test, cross) {
            (Some(ts), Some(kc)) => Some(test_error_from_scores(&(-kc.dot(&sol.u.u)), ts)),
            _ => None,
        };
        rows.push(TraceRow {
            t: idx as u64,
            lambda_t: Some(lambda),
            dual_obj: Some(dual_obj),
            dual_gap,
            norm_error,
            margin: Some(margin),
            margin_gap,
            angle_gap,
            test_error,
            energy: None,
        });
    }
    Ok((rows, flags))
}

fn primal_start(w0: &Option<Vec<f64>>, d: usize) -> Result<Array1<f64>, CliError> {
    match w0 {
        Some(v) => {
            if v.len() != d {
                return Err(CliError::Config(format!(
                    "w0 has length {}, data has {d} features",
                    v.len()
                )));
            }
            Ok(Array1::from_vec(v.clone()))
        }
        None => Ok(Array1::zeros(d)),
    }
}

fn test_error_from_scores(scores: &Array1<f64>, test: &Dataset) -> f64 {
    let mut wrong = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if classify(s) != test.label(i) {
            wrong += 1;
        }
    }
    wrong as f64 / test.n() as f64
}

/// Rows for a primal-iterate trace: margins always, direction gaps and norm
/// error against the oracle, test error when a held-out set exists. The
/// penalty and dual columns stay empty, these methods have neither.
fn primal_rows(
    trace: &PrimalTrace,
    xs: &SignedMatrix,
    oracle: Option<&OracleSolution>,
    test: Option<&Dataset>,
    cross: Option<&ndarray::Array2<f64>>,
) -> Vec<TraceRow> {
    let mut rows = Vec::with_capacity(trace.ws.len());
    for (t, w) in trace.ws.iter().enumerate() {
        let norm_error = oracle.map(|s| {
            w.iter()
                .zip(s.w_star.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        });
        let (margin_gap, angle_gap) = match oracle {
            Some(s) => (
                metrics::margin_gap(w.view(), s, xs).ok(),
                metrics::angle_gap(w.view(), s).ok(),
            ),
            None => (None, None),
        };
        // Under the linear kernel the cross matrix rows are the signed test
        // points, so scores against w are one inner product per row: the
        // cross product with u is not available here, compute directly.
        let test_error = test.map(|ts| {
            let _ = cross;
            let mut wrong = 0usize;
            for i in 0..ts.n() {
                let score = ts.point(i).dot(w);
                if classify(score) != ts.label(i) {
                    wrong += 1;
                }
            }
            wrong as f64 / ts.n() as f64
        });
        rows.push(TraceRow {
            t: t as u64,
            lambda_t: None,
            dual_obj: None,
            dual_gap: None,
            norm_error,
            margin: Some(trace.margins[t]),
            margin_gap,
            angle_gap,
            test_error,
            energy: None,
        });
    }
    rows
}

fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    let mut out = String::with_capacity(rows.len() * 64 + TRACE_HEADER.len() + 1);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn oracle_json(sol: &OracleSolution) -> serde_json::Value {
    json!({
        "w_star": sol.w_star.to_vec(),
        "u_star": sol.u_star.u.to_vec(),
        "norm_w_star": sol.norm_w_star,
        "margin": sol.margin_at_w_star,
        "normalized_margin": sol.margin_at_w_star / sol.norm_w_star,
        "dual_value": sol.dual_value(),
        "kkt_residuals": {
            "primal_feasibility": sol.kkt_residuals.primal_feasibility,
            "complementary_slackness": sol.kkt_residuals.complementary_slackness,
            "stationarity": sol.kkt_residuals.stationarity,
        },
    })
}

/// Paths written by [`run_experiment`].
pub struct RunOutput {
    pub summary_path: PathBuf,
    pub trace_paths: Vec<PathBuf>,
}

/// Runs the whole experiment and writes one trace CSV per algorithm plus
/// `summary.json` into the output directory (the config's `output_dir`
/// unless overridden).
pub fn run_experiment(
    config: &ExperimentConfig,
    output_override: Option<&Path>,
) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let out_dir = output_override.unwrap_or(&config.output_dir).to_path_buf();
    std::fs::create_dir_all(&out_dir)?;
    let (ctx, outcomes) = execute(config)?;

    let mut trace_paths = Vec::with_capacity(outcomes.len());
    let mut algo_entries = Vec::with_capacity(outcomes.len());
    for outcome in &outcomes {
        let file_name = format!("{}_trace.csv", outcome.name);
        let path = out_dir.join(&file_name);
        write_trace(&path, &outcome.rows)?;
        let mut entry = json!({
            "name": outcome.name,
            "file": file_name,
            "rows": outcome.rows.len(),
            "terminal": outcome.rows.last().map(|r| r.json()),
        });
        if let Some(flags) = &outcome.converged {
            entry["converged"] = json!(flags);
        }
        algo_entries.push(entry);
        trace_paths.push(path);
    }

    let train = &ctx.prepared.train;
    let summary = json!({
        "seed": config.seed,
        "iterations": config.iterations,
        "gamma": ctx.gamma,
        "gamma_setting": match &config.gamma {
            GammaSetting::Value(v) => json!(v),
            GammaSetting::Named(s) => json!(s),
        },
        "op_norm": ctx.op_norm,
        "kernel": match ctx.kernel {
            Kernel::Linear => json!({"kind": "linear"}),
            Kernel::Gaussian { sigma2 } => json!({"kind": "gaussian", "sigma2": sigma2}),
        },
        "schedule": {
            "family": format!("{:?}", ctx.schedule.family).to_lowercase(),
            "lambda0": ctx.schedule.lambda0,
        },
        "data": {
            "n_train": train.n(),
            "n_test": ctx.prepared.test.as_ref().map_or(0, |t| t.n()),
            "d": train.d(),
            "noise_p": config.data.noise_p,
            "split": config.data.split,
            "standardize": config.data.standardize,
        },
        "oracle": ctx.oracle.as_ref().map(oracle_json),
        "algorithms": algo_entries,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    let summary_path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(&summary_path, text)?;
    log::info!(
        "wrote {} traces and {} in {:.2}s",
        trace_paths.len(),
        summary_path.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(RunOutput {
        summary_path,
        trace_paths,
    })
}

/// Runs every algorithm and writes a single `comparison.csv` aligned on the
/// iteration counter: a `t` column followed by `<name>_margin_gap` and
/// `<name>_test_error` per algorithm. Shorter traces leave empty cells.
pub fn run_comparison(
    config: &ExperimentConfig,
    output_override: Option<&Path>,
) -> Result<PathBuf, CliError> {
    let out_dir = output_override.unwrap_or(&config.output_dir).to_path_buf();
    std::fs::create_dir_all(&out_dir)?;
    let (_, outcomes) = execute(config)?;

    let mut header = String::from("t");
    for outcome in &outcomes {
        header.push_str(&format!(
            ",{0}_margin_gap,{0}_test_error",
            outcome.name
        ));
    }
    let rows = outcomes.iter().map(|o| o.rows.len()).max().unwrap_or(0);
    let mut out = String::with_capacity(rows * outcomes.len() * 32);
    out.push_str(&header);
    out.push('\n');
    for t in 0..rows {
        out.push_str(&format!("{t}"));
        for outcome in &outcomes {
            match outcome.rows.get(t) {
                Some(row) => {
                    out.push(',');
                    out.push_str(&cell(row.margin_gap));
                    out.push(',');
                    out.push_str(&cell(row.test_error));
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    let path = out_dir.join("comparison.csv");
    std::fs::write(&path, out)?;
    Ok(path)
}

/// Solves the configured instance to optimality and returns the solution
/// as JSON (the `oracle` subcommand prints it).
pub fn oracle_report(config: &ExperimentConfig) -> Result<serde_json::Value, CliError> {
    let prepared = prepare(&config.data.to_data_config(config.seed)?)?;
    let kernel = config.kernel.to_kernel()?;
    let sol = solve_max_margin(&prepared.train, &kernel, config.oracle_tol)?;
    let mut value = oracle_json(&sol);
    value["n_train"] = json!(prepared.train.n());
    Ok(value)
}

/// Generates the configured dataset and writes it as headerless CSV. The
/// train split goes to `out`; a held-out split, when present, goes next to
/// it with `_test` appended to the file stem.
pub fn generate_dataset(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let prepared = prepare(&config.data.to_data_config(config.seed)?)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_csv(&prepared.train, out)?;
    let mut written = vec![out.to_path_buf()];
    if let Some(test) = &prepared.test {
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".to_string());
        let ext = out
            .extension()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "csv".to_string());
        let test_path = out.with_file_name(format!("{stem}_test.{ext}"));
        save_csv(test, &test_path)?;
        written.push(test_path);
    }
    Ok(written)
}
