//! Command line front end: argument parsing, the commands, and CSV/JSON output.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::ansatz::{SpectralPoint, C};
use crate::error::{Error, Result};
use crate::jost::{solve_jost_at, JostOptions};
use crate::model::{CoefficientModel, HARD_CAP};
use crate::oracle::oracle_compare;
use crate::recurrence::{eval_poly_real, limit_qnpn, LimitOptions};
use crate::spectral::{
    default_intervals, find_eigenvalues, predict_sequence, resolvent_jump, uniform_grid, weight_scan, weight_with,
    EigenOptions, ScanOptions, SpectralOptions,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    WeightScan,
    AsymptCheck,
    Eig,
    Resolvent,
    Limits,
    OracleCompare,
    Convergence,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::WeightScan => "weight-scan",
            Command::AsymptCheck => "asympt-check",
            Command::Eig => "eig",
            Command::Resolvent => "resolvent",
            Command::Limits => "limits",
            Command::OracleCompare => "oracle-compare",
            Command::Convergence => "convergence",
        }
    }

    fn default_grid(self) -> Grid {
        match self {
            Command::Limits => Grid { lo: 1.5, hi: 3.0, count: 4 },
            Command::AsymptCheck | Command::Resolvent => Grid { lo: -0.5, hi: 0.5, count: 3 },
            Command::OracleCompare => Grid { lo: -0.95, hi: 0.95, count: 20 },
            _ => Grid { lo: -0.99, hi: 0.99, count: 199 },
        }
    }

    fn default_nmax(self) -> usize {
        match self {
            Command::AsymptCheck => 10_000,
            Command::Resolvent => 4,
            Command::Limits => 100_000,
            Command::Convergence => 1 << 17,
            _ => 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// lo:hi:count
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}` is not of the form lo:hi:count"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("grid bound `{t}`: {e}"));
        let count = parts[2].trim().parse::<usize>().map_err(|e| format!("grid count `{}`: {e}", parts[2]))?;
        Ok(Grid { lo: num(parts[0])?, hi: num(parts[1])?, count })
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        uniform_grid(self.lo, self.hi, self.count)
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "jacobi-jost", version, about = "Spectral data of Jacobi matrices with bounded-variation coefficients")]
pub struct Cli {
    /// Command to run.
    #[arg(value_enum)]
    pub command: Command,
    /// Model JSON: a file path, or the JSON text itself.
    #[arg(long)]
    pub model: String,
    /// Grid as lo:hi:count.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<Grid>,
    /// Largest index (tail cap, sequence length or resolvent index, depending on the command).
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Truncation size for oracle-compare.
    #[arg(long, default_value_t = 2000)]
    pub trunc_size: usize,
    /// Leave the eigenvalue rows out of weight-scan.
    #[arg(long)]
    pub no_eigen: bool,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: CoefficientModel,
    pub grid: Grid,
    pub n_max: usize,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub trunc_size: usize,
    /// weight-scan also searches for eigenvalues.
    pub eigen: bool,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let text = if cli.model.trim_start().starts_with('{') {
            cli.model.clone()
        } else {
            std::fs::read_to_string(&cli.model).map_err(|e| Error::Io(format!("{}: {e}", cli.model)))?
        };
        let model = CoefficientModel::from_json(&text)?;
        let config = RunConfig {
            command: cli.command,
            model,
            grid: cli.grid.unwrap_or(cli.command.default_grid()),
            n_max: cli.nmax.unwrap_or(cli.command.default_nmax()),
            tol: cli.tol,
            out: cli.out,
            format: cli.format,
            trunc_size: cli.trunc_size,
            eigen: !cli.no_eigen,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol = {} must be positive", self.tol));
        }
        if self.n_max == 0 || self.n_max > HARD_CAP {
            return bad(format!("nmax = {} must lie in 1..={HARD_CAP}", self.n_max));
        }
        let Grid { lo, hi, count } = self.grid;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("grid bounds {lo}:{hi} must be finite and ordered"));
        }
        if count == 0 {
            return Ok(());
        }
        let inside = lo > -1.0 && hi < 1.0;
        match self.command {
            Command::WeightScan | Command::AsymptCheck | Command::Resolvent if !inside => {
                bad(format!("{} needs a grid inside (−1, 1)", self.command.name()))
            }
            Command::OracleCompare if !(lo >= -1.0 && hi <= 1.0) => bad("oracle-compare bins must lie in [−1, 1]".into()),
            Command::Limits if !(lo > 1.0 || hi < -1.0) => bad("limits needs real z with |z| > 1 on one side".into()),
            Command::Convergence if !(inside || lo > 1.0 || hi < -1.0) => {
                bad("convergence grid must lie inside (−1, 1) or on one side outside [−1, 1]".into())
            }
            Command::OracleCompare if self.trunc_size < 2 || self.trunc_size > HARD_CAP / 2 => {
                bad(format!("trunc-size {} out of range", self.trunc_size))
            }
            _ => Ok(()),
        }
    }
}

/// Result of a command: a table for CSV and JSON, plus JSON-only extras.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub extra: serde_json::Map<String, Value>,
}

impl Report {
    fn new(columns: Vec<&'static str>) -> Self {
        Report { columns, rows: Vec::new(), extra: serde_json::Map::new() }
    }
}

fn num(x: f64) -> Value {
    // NaN and infinities have no JSON form and become null
    json!(x)
}

fn spectral_opts(config: &RunConfig) -> SpectralOptions {
    SpectralOptions {
        jost: JostOptions { max_index: config.n_max, ..JostOptions::with_tol(config.tol) },
        ..Default::default()
    }
}

/// Weight rows, then one row per eigenvalue with its point mass in the w column.
fn run_weight_scan(config: &RunConfig) -> Result<Report> {
    let opts = ScanOptions {
        spectral: spectral_opts(config),
        eigen: config.eigen.then(EigenOptions::default),
        ..Default::default()
    };
    let s = weight_scan(&config.model, &config.grid.points(), &opts)?;
    let mut r = empty_report(Command::WeightScan);
    for i in 0..s.lambda_grid.len() {
        r.rows.push(vec![num(s.lambda_grid[i]), num(s.w[i]), num(s.kappa[i]), num(s.eta[i]), json!(s.tail_index[i]), json!("ac")]);
    }
    for e in &s.eigenvalues {
        r.rows.push(vec![num(e.lambda), num(e.weight.unwrap_or(f64::NAN)), num(f64::NAN), num(f64::NAN), Value::Null, json!("eigenvalue")]);
    }
    r.extra.insert("warnings".into(), json!(s.warnings));
    Ok(r)
}

fn run_asympt_check(config: &RunConfig) -> Result<Report> {
    let n_max = config.n_max.max(20);
    let opts = SpectralOptions { jost: JostOptions::with_tol(config.tol), ..Default::default() };
    let model = &config.model;
    let per_point: Vec<Vec<Vec<Value>>> = config
        .grid
        .points()
        .par_iter()
        .map(|&lam| {
            let pred = predict_sequence(model, lam, n_max, &opts)?;
            let p = eval_poly_real(model, lam, n_max)?;
            let mut rows = Vec::new();
            let mut start = 10;
            while 2 * start <= n_max {
                let residual = (start..=2 * start).map(|n| (p[n] - pred[n]).abs()).fold(0.0, f64::max);
                let eps = model.eps(start);
                rows.push(vec![num(lam), json!(start), json!(2 * start), num(residual), num(eps)]);
                start *= 10;
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut r = Report::new(vec!["lambda", "window_start", "window_end", "residual", "eps"]);
    r.rows = per_point.into_iter().flatten().collect();
    Ok(r)
}

fn run_eig(config: &RunConfig) -> Result<Report> {
    let opts = EigenOptions {
        jost: JostOptions { residual_tol: None, max_index: config.n_max, ..JostOptions::with_tol(config.tol) },
        ..Default::default()
    };
    let s = find_eigenvalues(&config.model, &default_intervals(&config.model, opts.delta), &opts)?;
    let mut r = Report::new(vec!["lambda", "weight", "plateau_spread"]);
    for e in &s.eigenvalues {
        r.rows.push(vec![num(e.lambda), num(e.weight.unwrap_or(f64::NAN)), num(e.plateau_spread.unwrap_or(f64::NAN))]);
    }
    r.extra.insert("warnings".into(), json!(s.warnings));
    Ok(r)
}

fn run_resolvent(config: &RunConfig) -> Result<Report> {
    // nmax is the largest matrix index here, not a tail cap
    let k = config.n_max;
    let model = &config.model;
    let opts = SpectralOptions { jost: JostOptions::with_tol(config.tol), ..Default::default() };
    let per_point: Vec<Vec<Vec<Value>>> = config
        .grid
        .points()
        .par_iter()
        .map(|&lam| {
            let wp = weight_with(crate::jost::Coefficients::new(model), lam, &opts)?;
            let p = eval_poly_real(model, lam, k)?;
            let mut rows = Vec::new();
            for n in 0..=k {
                for m in n..=k {
                    let jump = resolvent_jump(model, lam, n, m, config.tol)?;
                    let density = wp.w * p[n] * p[m];
                    rows.push(vec![num(lam), json!(n), json!(m), num(jump.re), num(jump.im), num(density), num((jump.re - density).abs())]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut r = Report::new(vec!["lambda", "n", "m", "jump_re", "jump_im", "density", "difference"]);
    r.rows = per_point.into_iter().flatten().collect();
    Ok(r)
}

fn run_limits(config: &RunConfig) -> Result<Report> {
    let opts = LimitOptions { tol: config.tol, max_index: config.n_max, jost: JostOptions::with_tol(config.tol.min(1e-10)) };
    let model = &config.model;
    let rows: Vec<Vec<Value>> = config
        .grid
        .points()
        .par_iter()
        .map(|&z| {
            let zc = C::new(z, 0.0);
            match limit_qnpn(model, zc, &opts) {
                Ok(l) => {
                    let (value, eigen) = match l.eigen {
                        Some(e) => (e.plateau, true),
                        None => (l.value, false),
                    };
                    Ok(vec![
                        num(z), num(value.re), num(value.im), num(l.jost_route.re), num(l.jost_route.im),
                        num((value - l.jost_route).norm()), json!(l.n), num(l.delta), json!(true), json!(eigen),
                    ])
                }
                Err(Error::NotStabilized { n, delta }) => {
                    let p = SpectralPoint::off_axis(zc)?;
                    let omega = crate::jost::jost_function(model, &p, &opts.jost)?.omega;
                    let route = -omega / crate::ansatz::branch_sqrt(&p);
                    Ok(vec![
                        num(z), num(f64::NAN), num(f64::NAN), num(route.re), num(route.im),
                        num(f64::NAN), json!(n), num(delta), json!(false), json!(false),
                    ])
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut r = Report::new(vec![
        "z", "limit_re", "limit_im", "jost_route_re", "jost_route_im", "difference", "n", "delta", "converged", "eigen",
    ]);
    r.rows = rows;
    Ok(r)
}

fn run_oracle_compare(config: &RunConfig) -> Result<Report> {
    let g = config.grid;
    let jost_eigen: Vec<f64> = if g.count == 0 {
        Vec::new()
    } else {
        let opts = EigenOptions { weights: false, ..Default::default() };
        find_eigenvalues(&config.model, &default_intervals(&config.model, opts.delta), &opts)?
            .eigenvalues
            .iter()
            .map(|e| e.lambda)
            .collect()
    };
    let report = oracle_compare(&config.model, (g.lo, g.hi, g.count), config.trunc_size, &jost_eigen, &spectral_opts(config))?;
    let mut r = Report::new(vec!["lo", "hi", "truncation", "integral", "difference"]);
    for b in &report.bins {
        r.rows.push(vec![num(b.lo), num(b.hi), num(b.truncation), num(b.integral), num((b.truncation - b.integral).abs())]);
    }
    r.extra.insert("max_bin_discrepancy".into(), num(report.max_bin_discrepancy));
    r.extra.insert("eigenvalues".into(), serde_json::to_value(&report.eigen).map_err(|e| Error::Io(e.to_string()))?);
    r.extra.insert("unmatched_jost".into(), json!(report.unmatched_jost));
    r.extra.insert("trunc_size".into(), json!(report.trunc_size));
    Ok(r)
}

/// Ω at tail indices 512, 1024, … ≤ nmax, with the relative change between successive ones.
fn run_convergence(config: &RunConfig) -> Result<Report> {
    let model = &config.model;
    let per_point: Vec<Vec<Vec<Value>>> = config
        .grid
        .points()
        .par_iter()
        .map(|&x| {
            let p = if x.abs() < 1.0 { SpectralPoint::upper(x)? } else { SpectralPoint::off_axis(C::new(x, 0.0))? };
            let mut rows = Vec::new();
            let mut prev: Option<C> = None;
            let mut n = 512.min(config.n_max);
            loop {
                let sol = solve_jost_at(model, &p, n)?;
                let omega = sol.omega / sol.k_lambda.unwrap_or(1.0);
                let change = prev.map_or(f64::NAN, |o| (omega - o).norm() / omega.norm());
                rows.push(vec![num(x), json!(n), num(omega.re), num(omega.im), num(change)]);
                prev = Some(omega);
                if 2 * n > config.n_max {
                    break;
                }
                n *= 2;
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut r = Report::new(vec!["lambda", "tail_index", "omega_re", "omega_im", "relative_change"]);
    r.rows = per_point.into_iter().flatten().collect();
    Ok(r)
}

/// Executes the command; an empty grid yields an empty table.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    if config.grid.count == 0 && !matches!(config.command, Command::Eig | Command::OracleCompare) {
        return Ok(empty_report(config.command));
    }
    match config.command {
        Command::WeightScan => run_weight_scan(config),
        Command::AsymptCheck => run_asympt_check(config),
        Command::Eig => run_eig(config),
        Command::Resolvent => run_resolvent(config),
        Command::Limits => run_limits(config),
        Command::OracleCompare => run_oracle_compare(config),
        Command::Convergence => run_convergence(config),
    }
}

fn empty_report(command: Command) -> Report {
    Report::new(match command {
        Command::WeightScan => vec!["lambda", "w", "kappa", "eta", "tail_index", "kind"],
        Command::AsymptCheck => vec!["lambda", "window_start", "window_end", "residual", "eps"],
        Command::Resolvent => vec!["lambda", "n", "m", "jump_re", "jump_im", "density", "difference"],
        Command::Limits => vec!["z", "limit_re", "limit_im", "jost_route_re", "jost_route_im", "difference", "n", "delta", "converged", "eigen"],
        Command::Convergence => vec!["lambda", "tail_index", "omega_re", "omega_im", "relative_change"],
        Command::Eig => vec!["lambda", "weight", "plateau_spread"],
        Command::OracleCompare => vec!["lo", "hi", "truncation", "integral", "difference"],
    })
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => "NaN".into(),
        // Debug gives the shortest round-trip form, with an exponent only at extreme magnitudes
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => format!("{x:?}"),
            _ => n.to_string(),
        },
        Value::Bool(b) => b.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Serializes a report in the requested format.
pub fn render(config: &RunConfig, report: &Report) -> String {
    match config.format {
        Format::Csv => {
            let mut s = report.columns.join(",");
            s.push('\n');
            for row in &report.rows {
                s.push_str(&row.iter().map(csv_cell).collect::<Vec<_>>().join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
            obj.insert("command".into(), json!(config.command.name()));
            obj.insert("model".into(), serde_json::to_value(config.model.to_spec()).unwrap_or(Value::Null));
            obj.insert(
                "config".into(),
                json!({
                    "grid": {"lo": config.grid.lo, "hi": config.grid.hi, "count": config.grid.count},
                    "nmax": config.n_max,
                    "tol": config.tol,
                    "trunc_size": config.trunc_size,
                    "eigen": config.eigen,
                }),
            );
            obj.insert("columns".into(), json!(report.columns));
            obj.insert("rows".into(), json!(report.rows));
            for (k, v) in &report.extra {
                obj.insert(k.clone(), v.clone());
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(obj)).unwrap_or_default();
            s.push('\n');
            s
        }
    }
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Machine-readable error object printed on standard error.
pub fn error_json(err: &Error) -> String {
    json!({
        "schema_version": SCHEMA_VERSION,
        "error": {"kind": err.kind(), "exit_code": err.exit_code(), "message": err.to_string()},
    })
    .to_string()
}

fn execute(cli: Cli) -> Result<()> {
    let config = RunConfig::from_cli(cli)?;
    let text = render(&config, &run(&config)?);
    match &config.out {
        Some(path) => write_atomic(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string())),
    }
}

/// Full command line entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // help and version
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = Error::Config(e.to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            err.exit_code()
        }
    }
}
