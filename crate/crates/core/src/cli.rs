//! The `hexflow` command line.
//!
//! Exit codes: 0 success or converged, 2 invalid input or configuration,
//! 3 inadmissible conformal factor (`curvature`), 4 time horizon or
//! iteration cap reached, 5 step underflow or failed line search.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::complex::SurfaceComplex;
use crate::conformal::{check_admissible, curvature_at, BackgroundMetric, ConformalFactor, CurvatureVector};
use crate::energy::{newton_solve, SolveStatus};
use crate::error::{Error, Result};
use crate::flows::{run_flow, FlowSpec, FlowStatus, FlowSummary};
use crate::io;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;
pub const EXIT_HORIZON: i32 = 4;
pub const EXIT_STALLED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "hexflow", version, about = "Curvature flows on hyperbolic surfaces glued from right-angled hexagons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a surface file and print its combinatorics.
    Validate {
        /// Surface file, or `random:<F>` for a seeded random gluing.
        #[arg(long)]
        surface: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print boundary lengths and the boundary margin.
    Curvature {
        #[arg(long)]
        surface: String,
        /// Metric file, or `uniform:<length>`.
        #[arg(long)]
        metric: String,
        /// Factor file; defaults to w = 0.
        #[arg(long)]
        factors: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the flow dw/dt = Δˢ(K̄ − K) for one or several exponents.
    Flow(RunConfig),
    /// Solve K(w) = K̄ with a damped Newton method.
    Solve(RunConfig),
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Surface file, or `random:<F>` for a seeded random gluing.
    #[arg(long)]
    pub surface: String,
    /// Metric file, or `uniform:<length>`.
    #[arg(long)]
    pub metric: String,
    /// Initial factor file; defaults to w = 0.
    #[arg(long)]
    pub factors: Option<PathBuf>,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub s: f64,
    /// Comma-separated exponents, each run independently.
    #[arg(long, allow_hyphen_values = true)]
    pub s_list: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt0: f64,
    #[arg(long, default_value_t = 1e4)]
    pub t_max: f64,
    /// Record every n-th accepted step in the trace.
    #[arg(long, default_value_t = 1)]
    pub sample_every: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INVALID;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match &cli.command {
        Command::Validate { surface, seed } => cmd_validate(surface, *seed, out),
        Command::Curvature {
            surface,
            metric,
            factors,
            seed,
        } => cmd_curvature(surface, metric, factors.as_deref(), *seed, out),
        Command::Flow(cfg) => cmd_flow(cfg, out),
        Command::Solve(cfg) => cmd_solve(cfg, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, error }) => {
            let _ = writeln!(err, "error: {error}");
            code
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    error: Error,
}

type CmdResult = std::result::Result<i32, Failure>;

fn invalid(error: Error) -> Failure {
    Failure {
        code: EXIT_INVALID,
        error,
    }
}

fn io_failure(error: std::io::Error) -> Failure {
    invalid(error.into())
}

fn load_surface(spec: &str, seed: u64) -> Result<SurfaceComplex> {
    match spec.strip_prefix("random:") {
        Some(faces) => {
            let faces = faces
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad face count in {spec:?}")))?;
            SurfaceComplex::random(faces, seed)
        }
        None => io::load_surface(Path::new(spec)),
    }
}

fn load_metric(spec: &str, cx: &SurfaceComplex) -> Result<BackgroundMetric> {
    let bg = match spec.strip_prefix("uniform:") {
        Some(length) => {
            let length = length
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad length in {spec:?}")))?;
            BackgroundMetric::uniform(cx.num_edges(), length)?
        }
        None => io::load_metric(Path::new(spec))?,
    };
    if bg.len() != cx.num_edges() {
        return Err(Error::DimensionMismatch {
            what: "metric edge_lengths",
            expected: cx.num_edges(),
            found: bg.len(),
        });
    }
    Ok(bg)
}

fn load_factors(path: Option<&Path>, cx: &SurfaceComplex) -> Result<ConformalFactor> {
    let w = match path {
        Some(p) => io::load_factors(p)?,
        None => ConformalFactor::zeros(cx.num_components()),
    };
    if w.len() != cx.num_components() {
        return Err(Error::DimensionMismatch {
            what: "factors w",
            expected: cx.num_components(),
            found: w.len(),
        });
    }
    Ok(w)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&x| io::format_number(x)).collect::<Vec<_>>().join(",")
}

fn cmd_validate(surface: &str, seed: u64, out: &mut dyn Write) -> CmdResult {
    let cx = load_surface(surface, seed).map_err(invalid)?;
    writeln!(
        out,
        "F={} E={} n={} chi={}",
        cx.num_faces(),
        cx.num_edges(),
        cx.num_components(),
        cx.euler_characteristic()
    )
    .map_err(io_failure)?;
    let lengths: Vec<String> = cx.boundary_cycle_lengths().iter().map(|l| l.to_string()).collect();
    writeln!(out, "boundary_cycle_lengths={}", lengths.join(",")).map_err(io_failure)?;
    Ok(EXIT_OK)
}

fn cmd_curvature(surface: &str, metric: &str, factors: Option<&Path>, seed: u64, out: &mut dyn Write) -> CmdResult {
    let cx = load_surface(surface, seed).map_err(invalid)?;
    let bg = load_metric(metric, &cx).map_err(invalid)?;
    let w = load_factors(factors, &cx).map_err(invalid)?;
    let margin = check_admissible(&w, &bg, &cx).map_err(|error| Failure {
        code: EXIT_INADMISSIBLE,
        error,
    })?;
    let k = curvature_at(&w, &bg, &cx).map_err(invalid)?;
    for (i, ki) in k.0.iter().enumerate() {
        writeln!(out, "K_{i}={}", io::format_number(*ki)).map_err(io_failure)?;
    }
    writeln!(out, "boundary_margin={}", io::format_number(margin)).map_err(io_failure)?;
    Ok(EXIT_OK)
}

struct Problem {
    cx: SurfaceComplex,
    bg: BackgroundMetric,
    w0: ConformalFactor,
    k_bar: CurvatureVector,
}

fn load_problem(cfg: &RunConfig) -> Result<Problem> {
    let cx = load_surface(&cfg.surface, cfg.seed)?;
    let bg = load_metric(&cfg.metric, &cx)?;
    let w0 = load_factors(cfg.factors.as_deref(), &cx)?;
    let k_bar = io::load_target(&cfg.target)?;
    if k_bar.len() != cx.num_components() {
        return Err(Error::DimensionMismatch {
            what: "target K_bar",
            expected: cx.num_components(),
            found: k_bar.len(),
        });
    }
    check_admissible(&w0, &bg, &cx)?;
    Ok(Problem { cx, bg, w0, k_bar })
}

fn parse_s_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .ok()
                .filter(|s| s.is_finite())
                .ok_or_else(|| Error::InvalidSpec(format!("bad exponent {item:?} in --s-list")))
        })
        .collect()
}

/// `trace.csv` becomes `trace.s0.5.csv` for a sweep member.
fn sweep_path(path: &Path, s: f64) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.s{s}.{}", ext.to_string_lossy()),
        None => format!("{stem}.s{s}"),
    };
    path.with_file_name(name)
}

fn flow_exit_code(status: FlowStatus) -> i32 {
    match status {
        FlowStatus::Converged => EXIT_OK,
        FlowStatus::HorizonReached => EXIT_HORIZON,
        FlowStatus::StepUnderflow => EXIT_STALLED,
    }
}

fn cmd_flow(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let problem = load_problem(cfg).map_err(invalid)?;
    let (exponents, sweep) = match &cfg.s_list {
        Some(list) => (parse_s_list(list).map_err(invalid)?, true),
        None => (vec![cfg.s], false),
    };
    let specs: Vec<FlowSpec> = exponents
        .iter()
        .map(|&s| FlowSpec {
            s,
            k_bar: problem.k_bar.clone(),
            w0: problem.w0.clone(),
            tol: cfg.tol,
            dt0: cfg.dt0,
            t_max: cfg.t_max,
            sample_every: cfg.sample_every,
        })
        .collect();
    for spec in &specs {
        spec.validate(&problem.bg, &problem.cx).map_err(invalid)?;
    }

    // Sweep members are independent; each writes only its own files.
    let results: Vec<Result<FlowSummary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| {
                let problem = &problem;
                scope.spawn(move || -> Result<FlowSummary> {
                    let trajectory = run_flow(spec, &problem.bg, &problem.cx)?;
                    let summary = trajectory.summary(&spec.k_bar);
                    let target = |p: &PathBuf| if sweep { sweep_path(p, spec.s) } else { p.clone() };
                    if let Some(p) = &cfg.trace {
                        io::save_trace(&target(p), &trajectory)?;
                    }
                    if let Some(p) = &cfg.report {
                        io::write_json(&target(p), &summary)?;
                    }
                    Ok(summary)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("flow worker panicked"))
            .collect()
    });

    let mut code = EXIT_OK;
    for (s, result) in exponents.iter().zip(results) {
        let summary = result.map_err(|error| Failure {
            code: match error {
                Error::NotNegativeDefinite { .. } => EXIT_STALLED,
                _ => EXIT_INVALID,
            },
            error,
        })?;
        writeln!(
            out,
            "s={s} status={} t_final={} curvature_error={} w_final={}",
            status_name(&summary.status),
            io::format_number(summary.t_final),
            io::format_number(summary.curvature_error),
            join(&summary.w_final.0)
        )
        .map_err(io_failure)?;
        code = code.max(flow_exit_code(summary.status));
    }
    Ok(code)
}

fn status_name<T: serde::Serialize>(status: &T) -> String {
    serde_json::to_value(status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn cmd_solve(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let problem = load_problem(cfg).map_err(invalid)?;
    let report = newton_solve(&problem.k_bar, &problem.w0, &problem.bg, &problem.cx, cfg.tol, cfg.max_iter)
        .map_err(invalid)?;
    if let Some(p) = &cfg.report {
        io::write_json(p, &report).map_err(invalid)?;
    }
    writeln!(
        out,
        "status={} iterations={} residual={} w_star={}",
        status_name(&report.status),
        report.iterations,
        io::format_number(*report.residual_history.last().unwrap_or(&f64::NAN)),
        join(&report.w_star.0)
    )
    .map_err(io_failure)?;
    Ok(match report.status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIterations => EXIT_HORIZON,
        SolveStatus::LineSearchFailed => EXIT_STALLED,
    })
}
