//! The `cduality` command line: solve, verify, sweep and deflators.
//!
//! Exit codes: 0 success, 1 a check or solve failed, 2 usage or config error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::ModelConfig;
use crate::corpus::Instance;
use crate::duality_harness::{self, Suite, VerificationReport};
use crate::error::Error;
use crate::market::MarketModel;
use crate::solvers::{self, MarketSolver};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cduality", version, about = "Consumption-investment duality on finite event trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the primal problem at capital `x` or the dual problem at `y`.
    Solve(SolveArgs),
    /// Run verification suites on a model file or on the seeded corpus.
    Verify(VerifyArgs),
    /// Tabulate u, u', v, v' over grids.
    Sweep(SweepArgs),
    /// Dump the vertices of the deflator polytope.
    Deflators(DeflatorArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("point").required(true).args(["x", "y"]))]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Theorem1,
    Theorem2,
    Prop1,
    Abstract,
    All,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::Theorem1 => vec![Suite::Theorem1],
            SuiteArg::Theorem2 => vec![Suite::Theorem2],
            SuiteArg::Prop1 => vec![Suite::Prop1],
            SuiteArg::Abstract => vec![Suite::Abstract],
            SuiteArg::All => Suite::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Model file; the seeded corpus is used when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Overrides the seed in the model file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON-lines report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary CSV; stderr when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `geom:a:b:n`, `lin:a:b:n` or a comma list.
    #[arg(long)]
    pub x_grid: Option<String>,
    #[arg(long)]
    pub y_grid: Option<String>,
    /// CSV file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeflatorArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn check(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CHECK, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::usage(e.to_string()),
            other => Failure::check(other.to_string()),
        }
    }
}

/// Parses a grid spec: `geom:a:b:n`, `lin:a:b:n` or comma-separated values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    let ranged = |rest: &str, geometric: bool| -> Result<Vec<f64>, String> {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{spec}`: expected three fields after the kind"));
        }
        let a: f64 = parts[0].parse().map_err(|_| format!("grid `{spec}`: bad start `{}`", parts[0]))?;
        let b: f64 = parts[1].parse().map_err(|_| format!("grid `{spec}`: bad end `{}`", parts[1]))?;
        let n: usize = parts[2].parse().map_err(|_| format!("grid `{spec}`: bad count `{}`", parts[2]))?;
        if !(a.is_finite() && b.is_finite()) || (geometric && !(a > 0.0 && b > 0.0)) {
            return Err(format!("grid `{spec}`: geometric grids need positive finite ends"));
        }
        Ok(match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n)
                .map(|i| {
                    let s = i as f64 / (n - 1) as f64;
                    if geometric {
                        a * (b / a).powf(s)
                    } else {
                        a + (b - a) * s
                    }
                })
                .collect(),
        })
    };
    let points = if let Some(rest) = spec.strip_prefix("geom:") {
        ranged(rest, true)?
    } else if let Some(rest) = spec.strip_prefix("lin:") {
        ranged(rest, false)?
    } else if spec.is_empty() {
        Vec::new()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| format!("grid `{spec}`: bad value `{}`", s.trim())))
            .collect::<Result<_, _>>()?
    };
    if points.is_empty() {
        return Err(format!("grid `{spec}` is empty"));
    }
    if let Some(p) = points.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(format!("grid `{spec}`: point {p} is not positive"));
    }
    Ok(points)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).and_then(|_| so.flush()).map_err(|e| Failure::check(e.to_string()))
        }
    }
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("reports serialize");
    s.push('\n');
    s
}

fn load_model(path: &Path) -> Result<(ModelConfig, MarketModel), Failure> {
    let cfg = ModelConfig::load(path)?;
    let model = cfg.build()?;
    Ok((cfg, model))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, Failure> {
    let (cfg, model) = load_model(&args.config)?;
    let mut solver = MarketSolver::new(&model)?;
    solver.options = cfg.solve_options();
    let report = match (args.x, args.y) {
        (Some(x), None) => solver.primal(x)?,
        (None, Some(y)) => solver.dual(y)?,
        _ => return Err(Failure::usage("exactly one of --x and --y is required")),
    };
    emit(args.out.as_deref(), &json_line(&report))?;
    Ok(if report.converged { EXIT_OK } else { EXIT_CHECK })
}

/// The report for `verify`; exposed for the acceptance suite.
pub fn run_verify(args: &VerifyArgs) -> Result<VerificationReport, Failure> {
    let suites = args.suite.suites();
    match &args.config {
        Some(path) => {
            let (cfg, model) = load_model(path)?;
            let opts = cfg.harness_options(args.seed);
            let stem = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
            let inst = Instance { id: stem, description: String::new(), model };
            Ok(duality_harness::verify(&suites, &[inst], false, &opts))
        }
        None => {
            let opts = duality_harness::HarnessOptions::new(args.seed.unwrap_or(crate::config::DEFAULT_SEED));
            Ok(duality_harness::verify_corpus(&suites, &opts)?)
        }
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32, Failure> {
    let report = run_verify(args)?;
    emit(args.out.as_deref(), &report.to_json_lines())?;
    let csv = report.summary_csv();
    match &args.summary {
        Some(p) => std::fs::write(p, &csv).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => eprint!("{csv}"),
    }
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_CHECK })
}

pub fn sweep_csv(rows: &[solvers::SweepRow]) -> String {
    let cell = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.12e}"));
    let mut out = String::from("kind,point,u,u_prime,v,v_prime,status\n");
    for r in rows {
        let status = r.status.replace([',', '\n'], ";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.kind,
            r.point,
            cell(r.u),
            cell(r.u_prime),
            cell(r.v),
            cell(r.v_prime),
            status
        ));
    }
    out
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32, Failure> {
    let grid = |g: &Option<String>| g.as_deref().map(parse_grid).transpose().map_err(Failure::usage);
    let xs = grid(&args.x_grid)?.unwrap_or_default();
    let ys = grid(&args.y_grid)?.unwrap_or_default();
    if xs.is_empty() && ys.is_empty() {
        return Err(Failure::usage("at least one of --x-grid and --y-grid is required"));
    }
    let (cfg, model) = load_model(&args.config)?;
    let mut solver = MarketSolver::new(&model)?;
    solver.options = cfg.solve_options();
    let rows = solvers::sweep_with(&solver, &xs, &ys);
    emit(args.out.as_deref(), &sweep_csv(&rows))?;
    Ok(if rows.iter().all(|r| r.status == "ok") { EXIT_OK } else { EXIT_CHECK })
}

#[derive(Serialize)]
struct VertexLine<'a> {
    vertex: usize,
    leaves: Vec<u64>,
    density: &'a [f64],
    process: Vec<(u64, f64)>,
}

pub fn cmd_deflators(args: &DeflatorArgs) -> Result<i32, Failure> {
    let (_, model) = load_model(&args.config)?;
    let verts = model.deflators.require_vertices()?;
    let leaves: Vec<u64> = model.tree.leaves().iter().map(|&l| model.tree.id(l)).collect();
    let mut text = String::new();
    for (i, v) in verts.iter().enumerate() {
        let process = v.process.iter().enumerate().map(|(k, z)| (model.tree.id(k), *z)).collect();
        text.push_str(&json_line(&VertexLine { vertex: i, leaves: leaves.clone(), density: &v.density, process }));
    }
    emit(args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let res = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Deflators(a) => cmd_deflators(a),
    };
    match res {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_has_requested_points() {
        let g = parse_grid("geom:0.1:10:10").unwrap();
        assert_eq!(g.len(), 10);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[9] - 10.0).abs() < 1e-12);
        assert!((g[1] / g[0] - g[2] / g[1]).abs() < 1e-12);
    }

    #[test]
    fn linear_and_list_grids() {
        assert_eq!(parse_grid("lin:1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn empty_and_bad_grids_are_rejected() {
        assert!(parse_grid("").is_err());
        assert!(parse_grid("geom:1:2:0").is_err());
        assert!(parse_grid("geom:0:2:4").is_err());
        assert!(parse_grid("1,-2").is_err());
        assert!(parse_grid("lin:1:2").is_err());
    }

    #[test]
    fn unknown_suite_is_a_usage_error() {
        assert_eq!(run(["cduality", "verify", "--suite", "theorem9"]), EXIT_USAGE);
    }

    #[test]
    fn missing_config_is_a_usage_error() {
        assert_eq!(run(["cduality", "solve", "--config", "/nonexistent/model.json", "--x", "1"]), EXIT_USAGE);
    }

    #[test]
    fn solve_needs_a_point() {
        assert_eq!(run(["cduality", "solve", "--config", "m.json"]), EXIT_USAGE);
        assert_eq!(run(["cduality", "solve", "--config", "m.json", "--x", "1", "--y", "1"]), EXIT_USAGE);
    }
}
