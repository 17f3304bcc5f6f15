//! `quermass`: run inequality checks, sharpness sweeps, the identity suite and
//! semi-discrete transport solves from the command line.
//!
//! Exit codes: 0 success, 1 bad configuration, 2 inequality violated or an
//! identity failed, 3 cone hypothesis failed, 4 transport solver did not converge.

mod domain;
mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use quermass::geometry::{DomainSpec, Family, QuadratureGrid};
use quermass::series::SeriesConfig;
use quermass::transport::{
    closed_form_potential, default_smoothing_radius, potential_from_weights, DualWeights, Potential,
    SemiDiscreteSolver, SolverOptions,
};
use quermass::verify::identities::{run_identity_suite, IdentityOptions};
use quermass::verify::{check_af1, check_af2, check_af_family, CheckConfig, CheckReport, Verdict, DEFAULT_TOL_MAP};

use domain::DomainArgs;

/// Overrides the default output directory (the working directory).
const OUT_DIR_ENV: &str = "QUERMASS_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "quermass",
    version,
    about = "Curvature-integral isoperimetric inequalities checked through optimal transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check one inequality chain on one domain and write the JSON report.
    Check(CheckArgs),
    /// Scan the perturbed-sphere family and write a CSV table and SVG plot.
    Sweep(SweepArgs),
    /// Evaluate every identity the chains rely on.
    Identities(IdentityArgs),
    /// Solve the planar semi-discrete transport problem and write a checkpoint.
    OtSolve(OtArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ineq {
    Af1,
    Af2,
    AfFamily,
}

impl Ineq {
    fn name(self) -> &'static str {
        match self {
            Ineq::Af1 => "af1",
            Ineq::Af2 => "af2",
            Ineq::AfFamily => "af_family",
        }
    }
}

#[derive(Debug, Clone, Args)]
struct SeriesArgs {
    /// Number of retained series terms.
    #[arg(long = "series-K", default_value_t = 100)]
    series_k: usize,
    /// Largest series argument.
    #[arg(long, default_value_t = 0.9)]
    s_max: f64,
}

impl SeriesArgs {
    fn config(&self) -> Result<SeriesConfig<f64>> {
        Ok(SeriesConfig::new(self.series_k, self.s_max)?)
    }
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    /// Number of target points of the semi-discrete solver.
    #[arg(short = 'N', long = "n-targets", default_value_t = 1024)]
    n_targets: usize,
    #[arg(long, default_value_t = 1e-9)]
    mass_tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, value_enum, default_value = "af1")]
    ineq: Ineq,
    #[arg(long, default_value_t = 24)]
    quad_order: usize,
    #[command(flatten)]
    series: SeriesArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Relative tolerance of the verdict; defaults by potential provenance.
    #[arg(long)]
    tol: Option<f64>,
    /// Check only the curvature inequality, without a transport potential.
    #[arg(long)]
    geometry_only: bool,
    /// Report path; defaults to `<ineq>_report.json` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    /// Perturbation sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.2")]
    eps: Vec<f64>,
    #[arg(long, value_enum, default_value = "af1")]
    ineq: Ineq,
    #[arg(long, default_value_t = 24)]
    quad_order: usize,
    #[arg(long)]
    tol: Option<f64>,
    /// CSV path; defaults to `sweep.csv` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG path; defaults to the CSV path with an `.svg` extension.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    no_plot: bool,
}

#[derive(Debug, Args)]
struct IdentityArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    quad_order: usize,
    /// Random matrices for the Newton tensor identities.
    #[arg(long, default_value_t = 1000)]
    matrices: usize,
    /// JSON path; defaults to `identities.json` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OtArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Checkpoint path; defaults to `ot_checkpoint.json` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Convergence log path; defaults to the checkpoint path with `.log.csv`.
    #[arg(long)]
    log: Option<PathBuf>,
}

/// How a run ended, mapped onto the exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Success,
    Violated,
    ConeFailure,
    NoConvergence,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Violated => 2,
            Outcome::ConeFailure => 3,
            Outcome::NoConvergence => 4,
        }
    }

    fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Holds | Verdict::EqualityWithinTol => Outcome::Success,
            Verdict::Violated => Outcome::Violated,
            Verdict::Degraded => Outcome::ConeFailure,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(args) => cmd_check(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Identities(args) => cmd_identities(&args),
        Command::OtSolve(args) => cmd_ot_solve(&args),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(solver_failure(&err).unwrap_or(1))
        }
    }
}

fn solver_failure(err: &anyhow::Error) -> Option<u8> {
    match err.downcast_ref::<quermass::Error>() {
        Some(quermass::Error::SolverDivergence { .. } | quermass::Error::DampingFloor { .. }) => {
            Some(Outcome::NoConvergence.code())
        }
        _ => None,
    }
}

fn output_path(explicit: &Option<PathBuf>, default_name: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.clone();
    }
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(default_name)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Closed form for balls and ellipsoids, a semi-discrete solve for planar
/// radial graphs, and none for radial graphs in higher dimensions.
fn potential_for(spec: &DomainSpec, solver: &SolverArgs) -> Result<Option<Potential>> {
    match spec.family() {
        Family::Ball { .. } | Family::Ellipsoid { .. } => Ok(Some(closed_form_potential(spec)?)),
        Family::RadialGraph(_) if spec.dim() == 2 => {
            let weights = solve(spec, solver, None)?.weights;
            Ok(Some(potential_from_weights(&weights, default_smoothing_radius(&weights))?))
        }
        Family::RadialGraph(_) => Ok(None),
    }
}

fn run_check(
    spec: &DomainSpec,
    ineq: Ineq,
    p: Option<&Potential>,
    order: usize,
    cfg: &CheckConfig,
) -> Result<CheckReport> {
    let grid = QuadratureGrid::new(spec, order)?;
    Ok(match ineq {
        Ineq::Af1 => check_af1(spec, p, &grid, cfg)?,
        Ineq::Af2 => check_af2(spec, p, &grid, cfg)?,
        Ineq::AfFamily => check_af_family(spec, &grid, cfg)?,
    })
}

fn cmd_check(args: &CheckArgs) -> Result<Outcome> {
    let spec = args.domain.resolve()?;
    let cfg = CheckConfig { series: args.series.config()?, tol: args.tol, tol_map: DEFAULT_TOL_MAP };
    let potential =
        if args.geometry_only || args.ineq == Ineq::AfFamily { None } else { potential_for(&spec, &args.solver)? };
    let mut report = run_check(&spec, args.ineq, potential.as_ref(), args.quad_order, &cfg)?;
    if potential.is_none() && !args.geometry_only && args.ineq != Ineq::AfFamily {
        report.notes.push("no transport potential for this family and dimension; geometry-only check".into());
    }
    let path = output_path(&args.out, &format!("{}_report.json", args.ineq.name()));
    write_file(&path, &(report.to_json()? + "\n"))?;
    println!(
        "{} lhs={} rhs={} ratio={} verdict={} report={}",
        report.id,
        report.lhs,
        report.rhs,
        report.ratio,
        serde_json::to_string(&report.verdict)?.trim_matches('"'),
        path.display()
    );
    Ok(Outcome::from_verdict(report.verdict))
}

fn cmd_sweep(args: &SweepArgs) -> Result<Outcome> {
    if args.eps.is_empty() {
        bail!("--eps needs at least one value");
    }
    if args.ineq == Ineq::AfFamily {
        bail!("sweeps support af1 and af2");
    }
    let cfg = CheckConfig { tol: args.tol, ..CheckConfig::default() };
    let mut csv = String::from("eps,lhs,rhs,ratio,min_cone_margin,flagged\n");
    let mut points = Vec::new();
    let mut outcome = Outcome::Success;
    for &eps in &args.eps {
        let spec = domain::perturbed_sphere(args.dim, eps, args.amplitude)?;
        let report = run_check(&spec, args.ineq, None, args.quad_order, &cfg)?;
        let flagged = !spec.is_known_convex() || report.cone.flagged_count > 0;
        if !flagged && report.verdict == Verdict::Violated {
            outcome = Outcome::Violated;
        }
        let _ =
            writeln!(csv, "{eps},{},{},{},{},{flagged}", report.lhs, report.rhs, report.ratio, report.cone.min_margin);
        println!("eps={eps} ratio={} min_cone_margin={} flagged={flagged}", report.ratio, report.cone.min_margin);
        points.push((eps, report.ratio));
    }
    let path = output_path(&args.out, "sweep.csv");
    write_file(&path, &csv)?;
    if !args.no_plot {
        let plot_path = args.plot.clone().unwrap_or_else(|| path.with_extension("svg"));
        let title = format!("{} ratio", args.ineq.name());
        write_file(&plot_path, &plot::line_plot(&points, "eps", &title))?;
    }
    Ok(outcome)
}

fn cmd_identities(args: &IdentityArgs) -> Result<Outcome> {
    let opts = IdentityOptions {
        series: args.series.config()?,
        seed: args.seed,
        order: args.quad_order,
        matrices: args.matrices,
        ..IdentityOptions::default()
    };
    let rows = run_identity_suite(&opts)?;
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &rows {
        println!(
            "{:width$}  {:>12.3e}  <= {:>8.1e}  {}",
            r.name,
            r.value,
            r.threshold,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let path = output_path(&args.out, "identities.json");
    write_file(&path, &(serde_json::to_string_pretty(&rows)? + "\n"))?;
    Ok(if rows.iter().all(|r| r.pass) { Outcome::Success } else { Outcome::Violated })
}

fn solve(
    spec: &DomainSpec,
    args: &SolverArgs,
    resume: Option<&DualWeights>,
) -> Result<quermass::transport::SolveOutcome> {
    let options = SolverOptions { mass_tol: args.mass_tol, max_iterations: args.max_iter, ..SolverOptions::default() };
    let solver = SemiDiscreteSolver::new(spec, args.n_targets, args.seed, options)?;
    Ok(match resume {
        Some(w) => solver.resume(w)?,
        None => solver.solve()?,
    })
}

fn cmd_ot_solve(args: &OtArgs) -> Result<Outcome> {
    let checkpoint: Option<DualWeights> = match &args.resume {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing checkpoint {}", path.display()))?)
        }
        None => None,
    };
    let (spec, solver_args) = match &checkpoint {
        Some(w) => {
            let solver_args = SolverArgs { n_targets: w.len(), seed: w.seed, ..args.solver.clone() };
            (w.domain.clone(), solver_args)
        }
        None => (args.domain.resolve()?, args.solver.clone()),
    };
    if spec.dim() != 2 {
        bail!("the semi-discrete solver handles planar domains only, got dimension {}", spec.dim());
    }
    let outcome = solve(&spec, &solver_args, checkpoint.as_ref())?;
    let w = &outcome.weights;
    let path = output_path(&args.out, "ot_checkpoint.json");
    write_file(&path, &(serde_json::to_string(w)? + "\n"))?;
    let log_path = args.log.clone().unwrap_or_else(|| path.with_extension("log.csv"));
    let mut log = String::from("iteration,dual_value,residual,step\n");
    for r in &outcome.log {
        let _ = writeln!(log, "{},{},{},{}", r.iteration, r.dual_value, r.residual, r.step);
    }
    write_file(&log_path, &log)?;
    let iterations = outcome.log.len() - 1;
    print!("converged iterations={iterations} residual={} N={}", w.residual, w.len());
    if let Some([sx, sy]) = domain::reference_map(&spec) {
        print!(" mean_map_deviation={}", w.mean_map_deviation(|c| [sx * c[0], sy * c[1]]));
    }
    println!(" checkpoint={}", path.display());
    Ok(Outcome::Success)
}
