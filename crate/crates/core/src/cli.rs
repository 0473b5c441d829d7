//! The `sarop` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::{feasibility_residual, Anchors};
use crate::error::{Error, Result};
use crate::geometry::{bound_summary, enumerate_components, enumerate_relevant, BoundSummary};
use crate::homotopy::TrackerOptions;
use crate::optimize::{
    batch_experiment, brute_force, projected_gradient, run_critical_points, solve_boundary_sweep, solve_kkt,
    BatchConfig, Method, SolveOptions, SolveReport,
};
use crate::polysys::{build_kkt_system, build_lagrange_system, component_anchors};
use crate::pomdp::{
    phi, random_policy, random_pomdp_with_discount, reward_partials, reward_value, validate, Policy, Pomdp,
    StateActionFrequency, DEFAULT_DISCOUNT,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sarop", version, about = "Reward maximization for POMDPs with aggregated states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary component counts and critical-point degree bounds.
    Bounds(BoundsArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Solution-count statistics over random instances.
    Batch(BatchArgs),
    /// Run the invariant checks.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Kkt,
    LagrangeAll,
    LagrangeRelevant,
    Pgd,
    Brute,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Kkt => Method::Kkt,
            MethodArg::LagrangeAll => Method::LagrangeAll,
            MethodArg::LagrangeRelevant => Method::LagrangeRelevant,
            MethodArg::Pgd => Method::ProjectedGradient,
            MethodArg::Brute => Method::BruteForce,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub na: usize,
    /// Semicolon-separated fiber sizes, e.g. `3;2,1;1,1,1`.
    #[arg(long)]
    pub partitions: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TrackerArgs {
    /// Seed of the random constant in the homotopy.
    #[arg(long, default_value_t = 0)]
    pub gamma_seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Largest total number of homotopy paths.
    #[arg(long, env = "SAROP_BUDGET")]
    pub budget: Option<u128>,
    #[arg(long)]
    pub initial_step: Option<f64>,
    #[arg(long)]
    pub min_step: Option<f64>,
    #[arg(long)]
    pub corrector_tol: Option<f64>,
    #[arg(long)]
    pub endpoint_tol: Option<f64>,
    #[arg(long)]
    pub max_path_steps: Option<usize>,
    #[arg(long)]
    pub dedupe_radius: Option<f64>,
    /// Skip the re-run of the winning system with a fresh constant.
    #[arg(long)]
    pub no_verify: bool,
    /// Run the α-test on every converged endpoint.
    #[arg(long)]
    pub certify: bool,
}

impl TrackerArgs {
    pub fn options(&self) -> SolveOptions {
        let mut t = TrackerOptions { gamma_seed: self.gamma_seed, threads: self.threads, ..Default::default() };
        if let Some(b) = self.budget {
            t.budget = b;
        }
        if let Some(v) = self.initial_step {
            t.initial_step = v;
        }
        if let Some(v) = self.min_step {
            t.min_step = v;
        }
        if let Some(v) = self.corrector_tol {
            t.corrector_tol = v;
        }
        if let Some(v) = self.endpoint_tol {
            t.endpoint_tol = v;
        }
        if let Some(v) = self.max_path_steps {
            t.max_path_steps = v;
        }
        if let Some(v) = self.dedupe_radius {
            t.dedupe_radius = v;
        }
        SolveOptions { tracker: t, verify: !self.no_verify, certify: self.certify, ..Default::default() }
    }
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long, conflicts_with_all = ["states", "actions", "partition", "discount"])]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub states: Option<usize>,
    #[arg(long)]
    pub actions: Option<usize>,
    /// Fiber sizes, e.g. `2,1`.
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long, default_value_t = DEFAULT_DISCOUNT)]
    pub discount: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl InstanceArgs {
    pub fn load(&self) -> Result<Pomdp> {
        if let Some(path) = &self.input {
            return load_instance(path);
        }
        let (Some(na), Some(part)) = (self.actions, self.partition.as_deref()) else {
            return Err(Error::InvalidInput("give --input or both --actions and --partition".into()));
        };
        let fibers = parse_partition(part)?;
        let ns: usize = fibers.iter().sum();
        if self.states.is_some_and(|s| s != ns) {
            return Err(Error::InvalidInput(format!("--states {} does not match partition {part}", self.states.unwrap())));
        }
        random_pomdp_with_discount(ns, na, &fibers, self.seed, self.discount)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::LagrangeRelevant)]
    pub method: MethodArg,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Write the polynomial system(s) as JSON to this file.
    #[arg(long)]
    pub dump_system: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub pgd_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub pgd_rate: f64,
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub na: usize,
    /// Semicolon-separated fiber sizes; one batch per partition.
    #[arg(long)]
    pub partitions: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Comma-separated methods.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Kkt, MethodArg::LagrangeAll, MethodArg::LagrangeRelevant])]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value_t = DEFAULT_DISCOUNT)]
    pub discount: f64,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance applied to every check instead of the defaults.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random (instance, policy) pairs for the feasibility check.
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    /// Also validate this instance file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Parses `2,1` into fiber sizes.
pub fn parse_partition(s: &str) -> Result<Vec<usize>> {
    let parts = s
        .trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| Error::InvalidInput(format!("bad partition {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts)
}

/// Parses `3;2,1;1,1,1`.
pub fn parse_partitions(s: &str) -> Result<Vec<Vec<usize>>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_partition).collect()
}

fn load_instance(path: &Path) -> Result<Pomdp> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Pomdp::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::InvalidInput(format!("{}: parse error: {j}", path.display())),
        other => other,
    })
}

fn emit(out: &OutputArgs, text: &str) -> Result<()> {
    match &out.output {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut s = String::new();
    let line = |cells: Vec<&str>, s: &mut String| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(s, "{}", padded.join("  ").trim_end());
    };
    line(header.to_vec(), &mut s);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut s);
    }
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_text<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[derive(Serialize)]
struct BoundsRow {
    n_states: usize,
    n_actions: usize,
    partition: Vec<usize>,
    #[serde(flatten)]
    summary: BoundSummary,
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<String> {
    if args.na == 0 {
        return Err(Error::InvalidInput("--na must be positive".into()));
    }
    let rows = parse_partitions(&args.partitions)?
        .into_iter()
        .map(|p| {
            let ns = p.iter().sum();
            Ok(BoundsRow { n_states: ns, n_actions: args.na, summary: bound_summary(ns, args.na, &p)?, partition: p })
        })
        .collect::<Result<Vec<_>>>()?;
    let header = ["n_states", "n_actions", "partition", "total_components", "relevant_components", "total_bound", "relevant_bound"];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let part: Vec<String> = r.partition.iter().map(|d| d.to_string()).collect();
            vec![
                r.n_states.to_string(),
                r.n_actions.to_string(),
                format!("({})", part.join(",")),
                r.summary.total_components.to_string(),
                r.summary.relevant_components.to_string(),
                r.summary.total_bound.to_string(),
                r.summary.relevant_bound.to_string(),
            ]
        })
        .collect();
    match args.out.format.unwrap_or(Format::Table) {
        Format::Json => json_text(&rows),
        Format::Csv => csv_text(&header, &cells),
        Format::Table => Ok(table(&header, &cells)),
    }
}

/// Result of a gradient or grid baseline.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub method: Method,
    pub best_eta: StateActionFrequency,
    pub best_policy: Policy,
    pub best_value: f64,
    pub wall_time: f64,
}

fn dump_systems(pomdp: &Pomdp, method: Method, path: &Path) -> Result<()> {
    let value = match method {
        Method::Kkt => {
            let anchors = Anchors::default_for(pomdp);
            serde_json::json!({ "kkt": build_kkt_system(pomdp, &anchors)?.to_json() })
        }
        Method::LagrangeAll | Method::LagrangeRelevant => {
            let comps = if method == Method::LagrangeAll {
                enumerate_components(pomdp.n_actions, &pomdp.fiber_sizes())?
            } else {
                enumerate_relevant(pomdp.n_actions, &pomdp.fiber_sizes())?
            };
            let list = comps
                .iter()
                .map(|c| {
                    let sys = build_lagrange_system(pomdp, c, &component_anchors(pomdp, c))?;
                    Ok(serde_json::json!({ "component": c.label(), "system": sys.to_json() }))
                })
                .collect::<Result<Vec<_>>>()?;
            serde_json::Value::Array(list)
        }
        other => return Err(Error::InvalidInput(format!("{other} has no polynomial system to dump"))),
    };
    std::fs::write(path, serde_json::to_string_pretty(&value)?)?;
    Ok(())
}

fn solve_report_text(r: &SolveReport, format: Format) -> Result<String> {
    let header = ["component", "variables", "bezout", "complex", "real", "positive", "best_local_objective"];
    let rows: Vec<Vec<String>> = r
        .per_component
        .iter()
        .map(|c| {
            vec![
                c.component.clone(),
                c.n_variables.to_string(),
                c.bezout_number.to_string(),
                c.n_complex.to_string(),
                c.n_real.to_string(),
                c.n_positive.to_string(),
                c.best_local_objective.map_or(String::new(), |v| v.to_string()),
            ]
        })
        .collect();
    match format {
        Format::Json => json_text(r),
        Format::Csv => csv_text(&header, &rows),
        Format::Table => {
            let mut s = table(&header, &rows);
            let policy: Vec<String> = r
                .best_policy
                .columns()
                .iter()
                .map(|c| format!("[{}]", c.iter().map(|p| format!("{p:.6}")).collect::<Vec<_>>().join(", ")))
                .collect();
            let _ = writeln!(s, "method: {}", r.method);
            let _ = writeln!(s, "counts: complex {} real {} positive {}", r.counts.complex, r.counts.real, r.counts.positive);
            let _ = writeln!(s, "best value: {}", r.best_value);
            let _ = writeln!(s, "best policy: {}", policy.join(" "));
            let _ = writeln!(s, "verified: {}", r.verified);
            Ok(s)
        }
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<String> {
    let pomdp = args.instance.load()?;
    let method: Method = args.method.into();
    if let Some(path) = &args.dump_system {
        dump_systems(&pomdp, method, path)?;
    }
    let format = args.out.format.unwrap_or(Format::Json);
    let opts = args.tracker.options();
    let report = match method {
        Method::Kkt => solve_kkt(&pomdp, &opts)?,
        Method::LagrangeAll => solve_boundary_sweep(&pomdp, false, &opts)?,
        Method::LagrangeRelevant => solve_boundary_sweep(&pomdp, true, &opts)?,
        Method::ProjectedGradient | Method::BruteForce => {
            let errors = validate(&pomdp);
            if !errors.is_empty() {
                let list: Vec<String> = errors.iter().map(|v| v.to_string()).collect();
                return Err(Error::InvalidInput(list.join("; ")));
            }
            let start = std::time::Instant::now();
            let (policy, value) = if method == Method::BruteForce {
                brute_force(&pomdp, args.grid_step)?
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(args.instance.seed);
                let init = random_policy(pomdp.n_actions, pomdp.n_observations, &mut rng);
                projected_gradient(&pomdp, &init, args.pgd_steps, args.pgd_rate)?
            };
            let r = BaselineReport {
                method,
                best_eta: phi(&pomdp, &policy)?,
                best_policy: policy,
                best_value: value,
                wall_time: start.elapsed().as_secs_f64(),
            };
            return match format {
                Format::Json => json_text(&r),
                Format::Csv => csv_text(&["method", "best_value"], &[vec![method.to_string(), value.to_string()]]),
                Format::Table => Ok(format!("method: {method}\nbest value: {value}\n")),
            };
        }
    };
    solve_report_text(&report, format)
}

pub fn cmd_batch(args: &BatchArgs) -> Result<String> {
    let opts = args.tracker.options();
    let methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for fibers in parse_partitions(&args.partitions)? {
        let ns = fibers.iter().sum();
        let mut cfg = BatchConfig::new(ns, args.na, fibers, args.trials, args.seed);
        cfg.methods = methods.clone();
        cfg.discount = args.discount;
        let result = batch_experiment(&cfg, &opts)?;
        rows.extend(result.rows.clone());
        results.push(result);
    }
    match args.out.format.unwrap_or(Format::Csv) {
        Format::Json => json_text(&results),
        Format::Csv | Format::Table => {
            let merged = crate::optimize::BatchResult { config: results.first().map_or_else(
                || BatchConfig::new(0, args.na, Vec::new(), args.trials, args.seed),
                |r| r.config.clone(),
            ), rows };
            let mut buf = Vec::new();
            merged.write_csv(&mut buf)?;
            let text = String::from_utf8(buf).expect("csv output is utf-8");
            if args.out.format == Some(Format::Table) {
                let mut reader = csv::Reader::from_reader(text.as_bytes());
                let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let body = reader
                    .records()
                    .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
                    .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
                Ok(table(&header, &body))
            } else {
                Ok(text)
            }
        }
    }
}

/// Outcome of one named invariant.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

const CHECK_SHAPES: [(usize, usize, &[usize]); 5] =
    [(3, 2, &[3]), (3, 2, &[2, 1]), (3, 2, &[1, 1, 1]), (4, 3, &[2, 2]), (4, 2, &[3, 1])];

fn check_feasibility(seed: u64, pairs: usize, tol: f64) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let (ns, na, fibers) = CHECK_SHAPES[i % CHECK_SHAPES.len()];
        let s = seed.wrapping_add(i as u64);
        let p = random_pomdp_with_discount(ns, na, fibers, s, DEFAULT_DISCOUNT)?;
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let pi = random_policy(na, p.n_observations, &mut rng);
        let r = feasibility_residual(&p, &phi(&p, &pi)?, &Anchors::default_for(&p))?;
        worst = worst.max(r.max_equality()).max(-r.min_entry);
    }
    Ok(CheckOutcome {
        name: "phi_feasibility".into(),
        passed: worst <= tol,
        worst,
        tolerance: tol,
        detail: format!("{pairs} random (instance, policy) pairs"),
    })
}

fn check_gradient(seed: u64, tol: f64) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for i in 0..20u64 {
        let (ns, na, fibers) = CHECK_SHAPES[i as usize % CHECK_SHAPES.len()];
        let p = random_pomdp_with_discount(ns, na, fibers, seed.wrapping_add(i), DEFAULT_DISCOUNT)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + i));
        let pi = random_policy(na, p.n_observations, &mut rng);
        let g = reward_partials(&p, &pi)?;
        let mut fd = Vec::with_capacity(g.as_slice().len());
        for k in 0..g.as_slice().len() {
            let shifted = |d: f64| -> Result<f64> {
                let mut probs = pi.as_slice().to_vec();
                probs[k] += d;
                reward_value(&p, &Policy::new(na, p.n_observations, probs)?)
            };
            fd.push((shifted(h)? - shifted(-h)?) / (2.0 * h));
        }
        let scale = fd.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
        let err = g.as_slice().iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
    }
    Ok(CheckOutcome {
        name: "gradient_vs_differences".into(),
        passed: worst <= tol,
        worst,
        tolerance: tol,
        detail: "20 instances, central differences".into(),
    })
}

fn check_kkt_lagrange(seed: u64, tol: f64, threads: Option<usize>) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut opts = SolveOptions::default();
    opts.tracker.threads = threads;
    opts.verify = false;
    for i in 0..2u64 {
        let p = random_pomdp_with_discount(3, 2, &[2, 1], seed.wrapping_add(i), DEFAULT_DISCOUNT)?;
        let a = run_critical_points(&p, Method::Kkt, &opts)?.best.map(|b| b.0);
        let b = run_critical_points(&p, Method::LagrangeAll, &opts)?.best.map(|b| b.0);
        let gap = match (a, b) {
            (Some(x), Some(y)) => (x - y).abs(),
            _ => f64::INFINITY,
        };
        worst = worst.max(gap);
    }
    Ok(CheckOutcome {
        name: "kkt_vs_lagrange".into(),
        passed: worst <= tol,
        worst,
        tolerance: tol,
        detail: "best values on 2 random (3,2,(2,1)) instances".into(),
    })
}

pub fn run_checks(args: &CheckArgs) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    if let Some(path) = &args.input {
        let p = load_instance(path)?;
        let v = validate(&p);
        out.push(CheckOutcome {
            name: "instance_validation".into(),
            passed: v.is_empty(),
            worst: v.len() as f64,
            tolerance: 0.0,
            detail: if v.is_empty() {
                format!("{} is valid", path.display())
            } else {
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
            },
        });
    }
    out.push(check_feasibility(args.seed, args.pairs, args.tol.unwrap_or(1e-10))?);
    out.push(check_gradient(args.seed, args.tol.unwrap_or(1e-5))?);
    out.push(check_kkt_lagrange(args.seed, args.tol.unwrap_or(1e-7), args.threads)?);
    Ok(out)
}

fn check_text(results: &[CheckOutcome], format: Format) -> Result<String> {
    let header = ["check", "status", "worst", "tolerance", "detail"];
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                if c.passed { "pass" } else { "FAIL" }.to_string(),
                format!("{:.3e}", c.worst),
                format!("{:.1e}", c.tolerance),
                c.detail.clone(),
            ]
        })
        .collect();
    match format {
        Format::Json => json_text(&results),
        Format::Csv => csv_text(&header, &rows),
        Format::Table => Ok(table(&header, &rows)),
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Json(_) | Error::Io(_) | Error::Csv(_) | Error::DimensionMismatch { .. } => {
            EXIT_USAGE
        }
        _ => EXIT_SOLVER,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Bounds(a) => cmd_bounds(a).and_then(|t| emit(&a.out, &t)).map(|_| EXIT_OK),
        Command::Solve(a) => cmd_solve(a).and_then(|t| emit(&a.out, &t)).map(|_| EXIT_OK),
        Command::Batch(a) => cmd_batch(a).and_then(|t| emit(&a.out, &t)).map(|_| EXIT_OK),
        Command::Check(a) => run_checks(a).and_then(|r| {
            emit(&a.out, &check_text(&r, a.out.format.unwrap_or(Format::Table))?)?;
            let failed: Vec<&str> = r.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            if failed.is_empty() {
                Ok(EXIT_OK)
            } else {
                eprintln!("failed checks: {}", failed.join(", "));
                Ok(EXIT_CHECK)
            }
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_parse() {
        assert_eq!(parse_partitions("3;2,1;1,1,1").unwrap(), vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(parse_partition("(2, 2)").unwrap(), vec![2, 2]);
        assert!(parse_partition("2,0").is_err());
        assert!(parse_partition("a").is_err());
    }

    #[test]
    fn trivial_bounds_row() {
        let args = BoundsArgs {
            na: 1,
            partitions: "2".into(),
            out: OutputArgs { format: Some(Format::Csv), output: None },
        };
        let text = cmd_bounds(&args).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "2,1,(2),1,1,1,1");
    }

    #[test]
    fn table_alignment() {
        let t = table(&["a", "bbb"], &[vec!["10".into(), "1".into()]]);
        assert_eq!(t, " a  bbb\n10    1\n");
    }
}
