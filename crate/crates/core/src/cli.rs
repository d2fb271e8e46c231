//! Command-line front end: configuration, dispatch and file output.
//!
//! Exit codes: 0 success, 2 bad configuration, 3 solver failure, 4 some
//! grid points failed (completed rows are still written).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dicke::StateSpace;
use crate::ed::{solve_ed, AutoTruncation, TruncationPolicy};
use crate::error::Error;
use crate::inhomogeneous::{inhom_observables, inhom_steady, InhomSpec};
use crate::observables::ObservablesRecord;
use crate::oracle::{oracle_observables, oracle_steady};
use crate::params::{effective_pump_rates, ModelParams, PumpLevelScheme};
use crate::rates::build_rate_matrix;
use crate::scan::{find_min_xi2, fit_power_law, linspace, sweep_points, Evaluator, Method, PowerLawFit};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

const DEFAULT_GAMMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// `start:stop:points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::config(format!("grid must look like start:stop:points, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let g = GridSpec {
            start: parts[0].trim().parse().map_err(|_| bad())?,
            stop: parts[1].trim().parse().map_err(|_| bad())?,
            points: parts[2].trim().parse().map_err(|_| bad())?,
        };
        g.values()?;
        Ok(g)
    }

    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points == 0 || !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::config("grid needs finite ends and at least one point"));
        }
        if self.points > 1 && !(self.stop > self.start) {
            return Err(CliError::config("grid stop must exceed start"));
        }
        Ok(linspace(self.start, self.stop, self.points))
    }
}

/// Everything a run needs. Every field is optional in the file; command
/// line flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_atoms: Option<u32>,
    pub gamma: Option<f64>,
    pub w: Option<f64>,
    pub gamma_c: Option<f64>,
    pub t2_inv: Option<f64>,
    /// Dephasing tied to the repump, `1/T2 = alpha w`.
    pub alpha: Option<f64>,
    pub pump_scheme: Option<PumpLevelScheme>,
    pub method: Option<Method>,
    pub truncation: Option<TruncationPolicy>,
    pub grid: Option<GridSpec>,
    /// Atom numbers for `scaling`.
    pub n_list: Option<Vec<u32>>,
    /// Search bracket for the minimum, in units of `gamma`.
    pub bracket: Option<[f64; 2]>,
    pub tol: Option<f64>,
    pub inhom: Option<InhomSpec>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

/// Sidecar written next to output files; accepted back by `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self {
            code: EXIT_SOLVER,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match root(&e) {
            Error::Config(_)
            | Error::InvalidParams(_)
            | Error::InvalidScheme(_)
            | Error::Domain(_)
            | Error::Capability { .. } => EXIT_CONFIG,
            _ => EXIT_SOLVER,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::AtPoint { source, .. } => root(source),
        e => e,
    }
}

#[derive(Debug, Parser)]
#[command(name = "badcavity", version, about = "Steady states of the bad-cavity laser")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Observables at one parameter point.
    Steady(Flags),
    /// Observables over a grid of repump rates.
    Sweep(Flags),
    /// Minimum squeezing against atom number, with a power-law fit.
    Scaling(Flags),
    /// Binned inhomogeneous coupling over a grid of repump rates.
    Inhom(Flags),
    /// Compares the rate equations with the full master equation (N <= 4).
    OracleCheck(Flags),
    /// Writes the rate matrix as a list of entries.
    DumpRates(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Steady(_) => "steady",
            Command::Sweep(_) => "sweep",
            Command::Scaling(_) => "scaling",
            Command::Inhom(_) => "inhom",
            Command::OracleCheck(_) => "oracle-check",
            Command::DumpRates(_) => "dump-rates",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Steady(f)
            | Command::Sweep(f)
            | Command::Scaling(f)
            | Command::Inhom(f)
            | Command::OracleCheck(f)
            | Command::DumpRates(f) => f,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration (or a sidecar written by an earlier run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "gamma-c")]
    pub gamma_c: Option<f64>,
    #[arg(long = "t2-inv")]
    pub t2_inv: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// ed, cumulant2, cumulant3, meanfield, analytic or inhom.
    #[arg(long)]
    pub method: Option<String>,
    /// Keep ladders with J <= jmax.
    #[arg(long, conflicts_with = "jmax_auto")]
    pub jmax: Option<f64>,
    /// Grow the retained window automatically.
    #[arg(long = "jmax-auto")]
    pub jmax_auto: bool,
    /// start:stop:points in w.
    #[arg(long)]
    pub grid: Option<String>,
    /// Comma-separated atom numbers for `scaling`.
    #[arg(long = "n-list", value_delimiter = ',')]
    pub n_list: Option<Vec<u32>>,
    /// lo:hi in units of gamma.
    #[arg(long)]
    pub bracket: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Uniform bins for `inhom`.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub threads: Option<usize>,
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let value = match value.get("config") {
        Some(inner) if value.get("version").is_some() => inner.clone(),
        _ => value,
    };
    serde_json::from_value(value).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Applies command-line overrides.
    pub fn merge(mut self, f: &Flags) -> Result<Self, CliError> {
        macro_rules! set {
            ($($field:ident <- $flag:expr),*) => {$(if let Some(v) = $flag { self.$field = Some(v); })*};
        }
        set!(n_atoms <- f.n, gamma <- f.gamma, w <- f.w, gamma_c <- f.gamma_c, t2_inv <- f.t2_inv,
             alpha <- f.alpha, tol <- f.tol, format <- f.format, threads <- f.threads);
        if let Some(m) = &f.method {
            self.method = Some(m.parse()?);
        }
        if let Some(j) = f.jmax {
            if !(j.is_finite() && j >= 0.0) {
                return Err(CliError::config(format!("jmax must be non-negative, got {j}")));
            }
            self.truncation = Some(TruncationPolicy::Fixed {
                two_j_max: (2.0 * j).round() as u32,
            });
        }
        if f.jmax_auto {
            self.truncation = Some(TruncationPolicy::Auto(AutoTruncation::default()));
        }
        if let Some(g) = &f.grid {
            self.grid = Some(GridSpec::parse(g)?);
        }
        if let Some(l) = &f.n_list {
            self.n_list = Some(l.clone());
        }
        if let Some(b) = &f.bracket {
            let v: Vec<f64> = b.split(':').filter_map(|x| x.trim().parse().ok()).collect();
            if v.len() != 2 {
                return Err(CliError::config(format!("bracket must look like lo:hi, got '{b}'")));
            }
            self.bracket = Some([v[0], v[1]]);
        }
        if let Some(b) = f.bins {
            self.inhom = Some(InhomSpec::uniform(b));
        }
        if let Some(o) = &f.out {
            self.out = Some(o.clone());
        }
        Ok(self)
    }

    /// Parameters for `n_atoms` atoms; `w` may be absent for grid runs.
    pub fn params(&self, n_atoms: u32, need_w: bool) -> Result<ModelParams, CliError> {
        let mut p = ModelParams::new(n_atoms, self.gamma.unwrap_or(DEFAULT_GAMMA), self.w.unwrap_or(0.0))
            .gamma_c(self.gamma_c.unwrap_or(1.0));
        if self.alpha.is_some() && self.t2_inv.is_some() {
            return Err(CliError::config("give at most one of t2_inv and alpha"));
        }
        if let Some(s) = &self.pump_scheme {
            if self.w.is_some() || self.t2_inv.is_some() || self.alpha.is_some() {
                return Err(CliError::config("a pump scheme fixes w and the dephasing; do not give them as well"));
            }
            let e = effective_pump_rates(s)?;
            p = p.w(e.w).t2_inv(e.t2_inv);
        } else {
            if need_w && self.w.is_none() {
                return Err(CliError::config("w is required"));
            }
            p = p.t2_inv(self.t2_inv.unwrap_or(0.0));
            if let Some(a) = self.alpha {
                p = p.alpha(a);
            }
        }
        p.validate()?;
        Ok(p)
    }

    fn n(&self) -> Result<u32, CliError> {
        self.n_atoms.ok_or_else(|| CliError::config("n_atoms is required (--n)"))
    }

    fn evaluator(&self, method: Method) -> Result<Evaluator, CliError> {
        let mut ev = Evaluator::new(method);
        ev.truncation = self.truncation;
        ev.inhom = self.inhom.clone();
        ev.alpha = match (&self.pump_scheme, self.alpha) {
            (Some(s), _) => Some(effective_pump_rates(s)?.alpha),
            (None, a) => a,
        };
        Ok(ev)
    }

    fn grid_values(&self) -> Result<Vec<f64>, CliError> {
        self.grid
            .ok_or_else(|| CliError::config("a grid is required (--grid start:stop:points)"))?
            .values()
    }
}

/// 17 significant digits; NaN for absent values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

struct Output {
    path: Option<PathBuf>,
    text: String,
}

impl Output {
    fn new(path: Option<PathBuf>) -> Self {
        Self {
            path,
            text: String::new(),
        }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn flush(self, record: &RunRecord) -> Result<(), CliError> {
        match &self.path {
            Some(p) => {
                fs::write(p, &self.text).map_err(|e| CliError::io(p, e))?;
                let meta = sidecar(p, "meta.json");
                let json = serde_json::to_string_pretty(record).expect("config serializes");
                fs::write(&meta, json + "\n").map_err(|e| CliError::io(&meta, e))
            }
            None => io::stdout()
                .write_all(self.text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
        }
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

const SWEEP_HEADER: &str = "w,jz_mean,jz_var,jpjm,sf,xi2,g2,method,n_atoms";

fn sweep_row(w: f64, r: &ObservablesRecord, method: Method) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        num(w),
        num(r.jz_mean),
        num(r.jz_var),
        num(r.jpjm),
        num(r.sf),
        num(r.xi2),
        num(r.g2.unwrap_or(f64::NAN)),
        method.name(),
        r.n_atoms
    )
}

#[derive(Serialize)]
struct Failure {
    w: f64,
    error: String,
}

fn report_failures(cfg: &RunConfig, failures: &[Failure], total: usize) -> Result<(), CliError> {
    if failures.is_empty() {
        return Ok(());
    }
    let manifest = serde_json::to_string_pretty(failures).expect("failures serialize");
    match &cfg.out {
        Some(p) => {
            let path = sidecar(p, "failures.json");
            fs::write(&path, manifest + "\n").map_err(|e| CliError::io(&path, e))?;
        }
        None => eprintln!("{manifest}"),
    }
    Err(CliError {
        code: if failures.len() == total { EXIT_SOLVER } else { EXIT_PARTIAL },
        message: format!("{} of {} grid points failed", failures.len(), total),
    })
}

fn cmd_steady(cfg: &RunConfig, rec: &RunRecord) -> Result<(), CliError> {
    let p = cfg.params(cfg.n()?, true)?;
    let ev = cfg.evaluator(cfg.method.unwrap_or(Method::Ed))?;
    let r = ev.evaluate(&p)?;
    let mut out = Output::new(cfg.out.clone());
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => out.line(serde_json::to_string_pretty(&r).expect("record serializes")),
        Format::Csv => {
            out.line(SWEEP_HEADER);
            out.line(sweep_row(p.w, &r, ev.method));
        }
    }
    out.flush(rec)
}

fn cmd_sweep(cfg: &RunConfig, rec: &RunRecord) -> Result<(), CliError> {
    let p = cfg.params(cfg.n()?, false)?;
    let ev = cfg.evaluator(cfg.method.unwrap_or(Method::Ed))?;
    let grid = cfg.grid_values()?;
    let results = sweep_points(&p, &grid, &ev);
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (&w, r) in grid.iter().zip(results) {
        match r {
            Ok(r) => ok.push((w, r)),
            Err(e) => failures.push(Failure { w, error: e.to_string() }),
        }
    }
    let mut out = Output::new(cfg.out.clone());
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            out.line(SWEEP_HEADER);
            for (w, r) in &ok {
                out.line(sweep_row(*w, r, ev.method));
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Point<'a> {
                w: f64,
                record: &'a ObservablesRecord,
            }
            let points: Vec<Point> = ok.iter().map(|(w, record)| Point { w: *w, record }).collect();
            let v = serde_json::json!({ "method": ev.method, "params": p, "points": points });
            out.line(serde_json::to_string_pretty(&v).expect("sweep serializes"));
        }
    }
    out.flush(rec)?;
    report_failures(cfg, &failures, grid.len())
}

#[derive(Debug, Clone, Serialize)]
struct ScalingPoint {
    n_atoms: u32,
    w_star: f64,
    xi2_min: f64,
    at_jump: bool,
}

fn cmd_scaling(cfg: &RunConfig, rec: &RunRecord) -> Result<(), CliError> {
    let ns = cfg
        .n_list
        .clone()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| CliError::config("an atom-number list is required (--n-list)"))?;
    let ev = cfg.evaluator(cfg.method.unwrap_or(Method::Ed))?;
    let [lo, hi] = cfg.bracket.unwrap_or([0.8, 1.2]);
    let tol = cfg.tol.unwrap_or(1e-4);
    let points: Vec<Result<ScalingPoint, Error>> = ns
        .par_iter()
        .map(|&n| {
            let p = cfg.params(n, false).map_err(|e| Error::Config(e.message))?;
            let m = find_min_xi2(&p, &ev, Some((lo * p.gamma, hi * p.gamma)), tol)?;
            Ok(ScalingPoint {
                n_atoms: n,
                w_star: m.w_star,
                xi2_min: m.value,
                at_jump: m.at_jump,
            })
        })
        .collect();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (n, r) in ns.iter().zip(points) {
        match r {
            Ok(pt) => ok.push(pt),
            Err(e) => failures.push(Failure {
                w: f64::from(*n),
                error: format!("n_atoms = {n}: {e}"),
            }),
        }
    }
    let fit: Option<PowerLawFit> = if ok.len() >= 3 {
        fit_power_law(&ok.iter().map(|p| (f64::from(p.n_atoms), p.xi2_min)).collect::<Vec<_>>()).ok()
    } else {
        None
    };
    let mut out = Output::new(cfg.out.clone());
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            out.line("n_atoms,w_star,xi2_min,at_jump,method");
            for pt in &ok {
                out.line(format!(
                    "{},{},{},{},{}",
                    pt.n_atoms,
                    num(pt.w_star),
                    num(pt.xi2_min),
                    pt.at_jump,
                    ev.method.name()
                ));
            }
            out.line(format!("# {}", serde_json::json!({ "fit": fit })));
        }
        Format::Json => {
            let v = serde_json::json!({ "method": ev.method, "points": ok, "fit": fit });
            out.line(serde_json::to_string_pretty(&v).expect("scaling serializes"));
        }
    }
    out.flush(rec)?;
    report_failures(cfg, &failures, ns.len())
}

fn cmd_inhom(cfg: &RunConfig, rec: &RunRecord) -> Result<(), CliError> {
    let n = cfg.n()?;
    let p = cfg.params(n, false)?;
    let spec = cfg
        .inhom
        .clone()
        .ok_or_else(|| CliError::config("a bin configuration is required (--bins)"))?;
    let bins = spec.resolve(n)?;
    bins.validate(&p)?;
    let ev = cfg.evaluator(Method::Inhom)?;
    let grid = cfg.grid_values()?;
    let results: Vec<_> = grid
        .par_iter()
        .map(|&w| {
            let q = ev.at(&p, w);
            inhom_steady(&bins, &q).map(|s| inhom_observables(&s, &bins, &q))
        })
        .collect();
    let mut out = Output::new(cfg.out.clone());
    let mut failures = Vec::new();
    let json = cfg.format == Some(Format::Json);
    let mut rows = Vec::new();
    if !json {
        out.line("w,jz_mean,power,sf,method,n_atoms,bins");
    }
    for (&w, r) in grid.iter().zip(results) {
        match r {
            Ok(o) if json => rows.push(serde_json::json!({ "w": w, "observables": o })),
            Ok(o) => out.line(format!(
                "{},{},{},{},inhom,{},{}",
                num(w),
                num(o.jz_mean),
                num(o.power),
                num(o.sf),
                o.n_atoms,
                bins.bins()
            )),
            Err(e) => failures.push(Failure { w, error: e.to_string() }),
        }
    }
    if json {
        let v = serde_json::json!({ "bins": bins, "params": p, "points": rows });
        out.line(serde_json::to_string_pretty(&v).expect("inhom serializes"));
    }
    out.flush(rec)?;
    report_failures(cfg, &failures, grid.len())
}

fn cmd_oracle_check(cfg: &RunConfig, rec: &RunRecord) -> Result<(), CliError> {
    let p = cfg.params(cfg.n()?, true)?;
    let ed = solve_ed(&p, &TruncationPolicy::Full)?.observables;
    let or = oracle_observables(&oracle_steady(&p)?);
    let fields = [
        ("jz_mean", ed.jz_mean, or.jz_mean),
        ("jz_var", ed.jz_var, or.jz_var),
        ("jpjm", ed.jpjm, or.jpjm),
        ("j2_mean", ed.j2_mean, or.j2_mean),
        ("sf", ed.sf, or.sf),
        ("xi2", ed.xi2, or.xi2),
        ("spm_corr", ed.spm_corr, or.spm_corr),
        ("jp2jm2", ed.jp2jm2.unwrap_or(f64::NAN), or.jp2jm2.unwrap_or(f64::NAN)),
    ];
    let mut out = Output::new(cfg.out.clone());
    out.line("field,ed,oracle,abs_diff");
    let mut worst = 0.0f64;
    for (name, a, b) in fields {
        let d = (a - b).abs();
        if !d.is_nan() {
            worst = worst.max(d);
        }
        out.line(format!("{name},{},{},{}", num(a), num(b), num(d)));
    }
    out.flush(rec)?;
    if worst > 1e-8 {
        return Err(CliError {
            code: EXIT_SOLVER,
            message: format!("rate equations and master equation differ by {worst:e}"),
        });
    }
    Ok(())
}

fn cmd_dump_rates(cfg: &RunConfig, rec: &RunRecord) -> Result<(), CliError> {
    let n = cfg.n()?;
    let p = cfg.params(n, true)?;
    let space = match cfg.truncation {
        None | Some(TruncationPolicy::Full) => StateSpace::full(n),
        Some(TruncationPolicy::Fixed { two_j_max }) => StateSpace::truncated(n, Some(two_j_max)),
        Some(TruncationPolicy::Auto(_)) => {
            return Err(CliError::config("dump-rates needs a fixed window; use --jmax"));
        }
    };
    let r = build_rate_matrix(&p, &space);
    let mut out = Output::new(cfg.out.clone());
    out.line("row,col,two_j_row,two_m_row,two_j_col,two_m_col,rate");
    let states: Vec<_> = space.iter().collect();
    let mut line = String::new();
    for k in 0..r.size() {
        let mut entries: Vec<(usize, f64)> = r.column(k).collect();
        entries.push((k, r.diag()[k]));
        entries.sort_by_key(|e| e.0);
        for (i, v) in entries {
            line.clear();
            let (a, b) = (states[i], states[k]);
            write!(line, "{i},{k},{},{},{},{},{}", a.two_j, a.two_m, b.two_j, b.two_m, num(v)).expect("string write");
            out.line(&line);
        }
    }
    out.flush(rec)
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    let flags = command.flags();
    let base = match &flags.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let cfg = base.merge(flags)?;
    let rec = RunRecord {
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
    };
    let go = || match command {
        Command::Steady(_) => cmd_steady(&cfg, &rec),
        Command::Sweep(_) => cmd_sweep(&cfg, &rec),
        Command::Scaling(_) => cmd_scaling(&cfg, &rec),
        Command::Inhom(_) => cmd_inhom(&cfg, &rec),
        Command::OracleCheck(_) => cmd_oracle_check(&cfg, &rec),
        Command::DumpRates(_) => cmd_dump_rates(&cfg, &rec),
    };
    match cfg.threads {
        Some(0) => Err(CliError::config("threads must be positive")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::config(e.to_string()))?
            .install(go),
        None => go(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(GridSpec::parse("0.05:0.15:11").unwrap().values().unwrap().len(), 11);
        assert!(GridSpec::parse("0.05:0.15").is_err());
        assert!(GridSpec::parse("0.2:0.1:5").is_err());
        assert!(GridSpec::parse("a:b:c").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"n_atoms": 10, "bogus": 1}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"n_atoms": 10, "method": "cumulant3"}"#).unwrap();
        assert_eq!(c.method, Some(Method::Cumulant3));
    }

    #[test]
    fn flags_override_file_values() {
        let file = RunConfig {
            n_atoms: Some(10),
            w: Some(0.3),
            ..Default::default()
        };
        let flags = Flags {
            w: Some(0.5),
            jmax: Some(3.0),
            ..Default::default()
        };
        let c = file.merge(&flags).unwrap();
        assert_eq!(c.n_atoms, Some(10));
        assert_eq!(c.w, Some(0.5));
        assert_eq!(c.truncation, Some(TruncationPolicy::Fixed { two_j_max: 6 }));
    }

    #[test]
    fn conflicting_dephasing_is_a_config_error() {
        let c = RunConfig {
            w: Some(0.1),
            t2_inv: Some(0.1),
            alpha: Some(1.0),
            ..Default::default()
        };
        assert_eq!(c.params(10, true).unwrap_err().code, EXIT_CONFIG);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["badcavity", "steady", "--n", "4"]), EXIT_CONFIG);
        assert_eq!(run(["badcavity", "steady", "--n", "4", "--w", "0.1", "--method", "nope"]), EXIT_CONFIG);
        assert_eq!(run(["badcavity", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["badcavity", "oracle-check", "--n", "9", "--w", "0.1"]), EXIT_CONFIG);
    }

    #[test]
    fn numbers_have_17_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(f64::NAN), "NaN");
    }
}
