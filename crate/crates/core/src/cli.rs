//! The `qdecide` command line.
//!
//! Exit codes: 0 on success (or a verified optimum), 1 when `verify` finds
//! the POM non-optimal, 2 on usage errors. CSV output starts with the
//! schema line `# qdecide-csv v1`. Every subcommand accepts
//! `--config FILE` with `key = value` lines mirroring its flags; flags given
//! on the command line win.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::decision::{
    binary_bayes_cost_eigen, binary_optimal_pom, check_optimality, combined_cost_closed,
    expected_cost_from_risks, risk_operators, BinaryProblem, Pom, OPTIMALITY_TOL,
};
use crate::error::Error;
use crate::montecarlo::{simulate, SimulationConfig};
use crate::sequential::{
    enumerate_tree, partition_cost, sequential_cost_closed, Partition, ENUMERATION_CAP,
};
use crate::states::DENSE_CAP;

pub const CSV_SCHEMA_LINE: &str = "# qdecide-csv v1";
/// Largest `n` accepted with `compare --partitions all`.
pub const COMPARE_ALL_CAP: usize = 8;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qdecide",
    version,
    about = "Bayes decision costs for polarised spin ensembles"
)]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bayes cost of a single problem.
    Cost {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = Method::Closed)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Costs over a cartesian grid of priors, half-angles and particle counts.
    Sweep {
        /// Single value, comma list, or START:STOP:STEP.
        #[arg(long)]
        xi: String,
        #[arg(long)]
        delta: String,
        /// Single value, comma list, or START:STOP[:STEP].
        #[arg(long)]
        n: String,
        #[arg(long, value_enum, default_value_t = Method::Closed)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        degrees: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Grouped-measurement costs against the combined measurement.
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
        /// `all`, or a comma list of partitions such as `2+1,1+2`.
        #[arg(long, default_value = "all")]
        partitions: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Checks the optimality conditions for a POM.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = PomChoice::Optimal)]
        pom: PomChoice,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Monte Carlo error rate of a strategy.
    Simulate {
        #[command(flatten)]
        problem: ProblemArgs,
        /// `sequential`, `combined`, or groups such as `2+1`.
        #[arg(long, default_value = "sequential")]
        partition: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Lists every branch of the adaptive posterior tree.
    Tree {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Prior probability of hypothesis 1.
    #[arg(long)]
    xi: f64,
    /// Half-angle between the two polarisation directions.
    #[arg(long, conflicts_with_all = ["theta1", "theta2"], required_unless_present_all = ["theta1", "theta2"])]
    delta: Option<f64>,
    #[arg(long, requires = "theta2")]
    theta1: Option<f64>,
    #[arg(long, requires = "theta1")]
    theta2: Option<f64>,
    /// Number of particles.
    #[arg(long)]
    n: usize,
    /// Read angle flags in degrees.
    #[arg(long)]
    degrees: bool,
    /// Key-value file mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Closed,
    Eigen,
    Tree,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PomChoice {
    Optimal,
    AlwaysFirst,
    AlwaysSecond,
}

/// One evaluated (problem, strategy, method) cell.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub xi: f64,
    pub delta_rad: f64,
    pub n: usize,
    pub strategy: String,
    pub cost: f64,
    pub method: String,
    pub extra: BTreeMap<String, Value>,
}

/// Failure modes of a subcommand, mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Formats with 12 significant digits, switching to lowercase scientific
/// notation outside `1e-4 <= |x| < 1e6`. Trailing zeros are trimmed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string().to_lowercase();
    }
    let ax = x.abs();
    if (1e-4..1e6).contains(&ax) {
        let decimals = (11 - ax.log10().floor() as i32).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exponent) = s
            .split_once('e')
            .expect("scientific format has an exponent");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

/// Entry point shared by the binary and the tests.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse_with_config(&args) {
        Ok(cli) => cli,
        Err(ParseFailure::Clap(e)) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
        Err(ParseFailure::Config(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };

    // Commands render into a buffer so they can run inside a worker pool.
    let mut buffer: Vec<u8> = Vec::new();
    let result = match worker_pool() {
        Some(pool) => pool.install(|| dispatch(cli.command, &mut buffer)),
        None => dispatch(cli.command, &mut buffer),
    };
    if let Err(e) = out.write_all(&buffer).and_then(|_| out.flush()) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn worker_pool() -> Option<rayon::ThreadPool> {
    let threads: usize = std::env::var("QDECIDE_THREADS").ok()?.parse().ok()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .ok()
}

enum ParseFailure {
    Clap(clap::Error),
    Config(String),
}

fn parse_with_config(args: &[OsString]) -> std::result::Result<Cli, ParseFailure> {
    let Some(path) = config_path(args) else {
        return Cli::try_parse_from(args).map_err(ParseFailure::Clap);
    };
    let file_args = read_config(&path).map_err(ParseFailure::Config)?;
    // Config values go right after the subcommand so command-line flags override them.
    let mut merged: Vec<OsString> = args[..2].to_vec();
    merged.extend(file_args.into_iter().map(OsString::from));
    merged.extend_from_slice(&args[2..]);
    Cli::try_parse_from(merged).map_err(ParseFailure::Clap)
}

/// Finds `--config PATH` or `--config=PATH` after the subcommand. Scanned
/// before parsing so the file may supply required flags.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut iter = args.iter().skip(2);
    while let Some(arg) = iter.next() {
        let arg = arg.to_str()?;
        if arg == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(path));
        }
    }
    None
}

/// Turns `key = value` lines into `--key=value` arguments. `true` marks a
/// bare flag, `false` omits it; `#` starts a comment.
pub fn read_config(path: &Path) -> std::result::Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut args = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected `key = value`", path.display(), lineno + 1))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        if key == "config" {
            return Err(format!(
                "{}:{}: nested config files are not supported",
                path.display(),
                lineno + 1
            ));
        }
        match value {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => args.push(format!("--{key}={value}")),
        }
    }
    Ok(args)
}

fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Cost {
            problem,
            method,
            format,
        } => cmd_cost(&problem, method, format, out),
        Command::Sweep {
            xi,
            delta,
            n,
            method,
            format,
            degrees,
            ..
        } => cmd_sweep(&xi, &delta, &n, method, format, degrees, out),
        Command::Compare {
            problem,
            partitions,
            format,
        } => cmd_compare(&problem, &partitions, format, out),
        Command::Verify {
            problem,
            pom,
            format,
        } => cmd_verify(&problem, pom, format, out),
        Command::Simulate {
            problem,
            partition,
            trials,
            seed,
            format,
        } => cmd_simulate(&problem, &partition, trials, seed, format, out),
        Command::Tree { problem, format } => cmd_tree(&problem, format, out),
    }
}

fn to_radians(x: f64, degrees: bool) -> f64 {
    if degrees {
        x.to_radians()
    } else {
        x
    }
}

fn check_xi(xi: f64) -> std::result::Result<(), Failure> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Failure::Usage(format!("--xi must lie in [0, 1], got {xi}")));
    }
    Ok(())
}

fn check_n(n: usize) -> std::result::Result<(), Failure> {
    if n == 0 || n > DENSE_CAP {
        return Err(Failure::Usage(format!(
            "--n must lie in 1..={DENSE_CAP}, got {n}"
        )));
    }
    Ok(())
}

/// Accepts `[0, π/2]`, snapping values within `1e-9` above `π/2` (decimal
/// renderings of π/2) onto it.
fn check_delta(delta: f64) -> std::result::Result<f64, Failure> {
    const SLACK: f64 = 1e-9;
    let half_pi = std::f64::consts::FRAC_PI_2;
    if (0.0..=half_pi).contains(&delta) {
        Ok(delta)
    } else if delta > half_pi && delta <= half_pi + SLACK {
        Ok(half_pi)
    } else {
        Err(Failure::Usage(format!(
            "--delta must lie in [0, pi/2] radians, got {delta}"
        )))
    }
}

fn problem_from_args(args: &ProblemArgs) -> std::result::Result<BinaryProblem, Failure> {
    check_xi(args.xi)?;
    check_n(args.n)?;
    let problem = match (args.delta, args.theta1, args.theta2) {
        (Some(d), _, _) => {
            let d = check_delta(to_radians(d, args.degrees))?;
            BinaryProblem::from_delta(args.xi, d, args.n)?
        }
        (None, Some(t1), Some(t2)) => BinaryProblem::from_angles(
            args.xi,
            to_radians(t1, args.degrees),
            to_radians(t2, args.degrees),
            args.n,
        )?,
        _ => {
            return Err(Failure::Usage(
                "give --delta or both --theta1 and --theta2".into(),
            ))
        }
    };
    Ok(problem)
}

fn evaluate(
    problem: &BinaryProblem,
    method: Method,
) -> std::result::Result<Vec<OutputRecord>, Failure> {
    let (xi, delta, n) = (problem.prior_xi, problem.delta, problem.n_particles);
    let record = |strategy: &str, method: &str, cost: f64| OutputRecord {
        xi,
        delta_rad: delta.radians(),
        n,
        strategy: strategy.into(),
        cost,
        method: method.into(),
        extra: BTreeMap::new(),
    };
    let mut records = Vec::new();
    if matches!(method, Method::Closed | Method::All) {
        records.push(record(
            "combined",
            "closed",
            combined_cost_closed(xi, delta, n),
        ));
    }
    if matches!(method, Method::Eigen | Method::All) {
        records.push(record(
            "combined",
            "eigen",
            binary_bayes_cost_eigen(problem)?,
        ));
    }
    let tree_fits = n <= ENUMERATION_CAP;
    if method == Method::Tree || (method == Method::All && tree_fits) {
        let tree = enumerate_tree(xi, problem.theta1, problem.theta2, n)?;
        records.push(record("sequential", "tree", tree.weighted_cost()));
    }
    Ok(records)
}

const RECORD_HEADER: &str = "xi,delta_rad,n,strategy,method,cost";

fn record_row(r: &OutputRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        format_number(r.xi),
        format_number(r.delta_rad),
        r.n,
        r.strategy,
        r.method,
        format_number(r.cost)
    )
}

fn write_records(
    records: &[OutputRecord],
    format: Format,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{CSV_SCHEMA_LINE}")?;
            writeln!(out, "{RECORD_HEADER}")?;
            for r in records {
                writeln!(out, "{}", record_row(r))?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, records).map_err(std::io::Error::other)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn cmd_cost(args: &ProblemArgs, method: Method, format: Format, out: &mut dyn Write) -> CmdResult {
    let problem = problem_from_args(args)?;
    let records = evaluate(&problem, method)?;
    write_records(&records, format, out)?;
    Ok(EXIT_OK)
}

/// Parses `a`, `a,b,c` or `start:stop:step` (inclusive).
fn parse_real_range(text: &str, name: &str) -> std::result::Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("bad --{name} range {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) = (
                start.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|k| start + k as f64 * step).collect()
        }
        _ => return Err(bad()),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

/// Parses `n`, `a,b,c`, `start:stop` or `start:stop:step` (inclusive).
fn parse_count_range(text: &str) -> std::result::Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("bad --n range {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let values: Vec<usize> = match parts.as_slice() {
        [single] => single
            .split(',')
            .map(parse)
            .collect::<std::result::Result<_, _>>()?,
        [start, stop] => (parse(start)?..=parse(stop)?).collect(),
        [start, stop, step] => {
            let step = parse(step)?;
            if step == 0 {
                return Err(bad());
            }
            (parse(start)?..=parse(stop)?).step_by(step).collect()
        }
        _ => return Err(bad()),
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

fn cmd_sweep(
    xi: &str,
    delta: &str,
    n: &str,
    method: Method,
    format: Format,
    degrees: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let xis = parse_real_range(xi, "xi")?;
    let deltas: Vec<f64> = parse_real_range(delta, "delta")?
        .into_iter()
        .map(|d| check_delta(to_radians(d, degrees)))
        .collect::<std::result::Result<_, _>>()?;
    let ns = parse_count_range(n)?;
    xis.iter().try_for_each(|&x| check_xi(x))?;
    ns.iter().try_for_each(|&k| check_n(k))?;
    if method == Method::Tree {
        if let Some(&k) = ns.iter().find(|&&k| k > ENUMERATION_CAP) {
            return Err(Error::TreeTooDeep {
                n: k,
                cap: ENUMERATION_CAP,
            }
            .into());
        }
    }

    let mut cells = Vec::with_capacity(xis.len() * deltas.len() * ns.len());
    for &x in &xis {
        for &d in &deltas {
            for &k in &ns {
                cells.push((x, d, k));
            }
        }
    }
    // Collecting from an indexed parallel iterator keeps the cell order.
    let records: Vec<Vec<OutputRecord>> = cells
        .par_iter()
        .map(|&(x, d, k)| evaluate(&BinaryProblem::from_delta(x, d, k)?, method))
        .collect::<std::result::Result<_, _>>()?;
    let records: Vec<OutputRecord> = records.into_iter().flatten().collect();
    write_records(&records, format, out)?;
    Ok(EXIT_OK)
}

fn cmd_compare(
    args: &ProblemArgs,
    partitions: &str,
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let problem = problem_from_args(args)?;
    let n = problem.n_particles;
    let list: Vec<Partition> = if partitions.trim() == "all" {
        if n > COMPARE_ALL_CAP {
            return Err(Failure::Usage(format!(
                "--partitions all enumerates 2^(n-1) strategies and needs n <= {COMPARE_ALL_CAP}, got {n}"
            )));
        }
        Partition::compositions(n)
    } else {
        partitions
            .split(',')
            .map(|p| parse_partition(p.trim(), n))
            .collect::<std::result::Result<_, _>>()?
    };

    let combined = combined_cost_closed(problem.prior_xi, problem.delta, n);
    let mut records = Vec::with_capacity(list.len());
    for p in &list {
        if p.total() != n {
            return Err(Failure::Usage(format!(
                "partition {p} does not sum to n = {n}"
            )));
        }
        let cost = partition_cost(problem.prior_xi, problem.theta1, problem.theta2, p)?;
        let mut extra = BTreeMap::new();
        extra.insert("gap".to_string(), json!(cost - combined));
        records.push(OutputRecord {
            xi: problem.prior_xi,
            delta_rad: problem.delta.radians(),
            n,
            strategy: p.to_string(),
            cost,
            method: "partition".into(),
            extra,
        });
    }

    match format {
        Format::Csv => {
            writeln!(out, "{CSV_SCHEMA_LINE}")?;
            writeln!(out, "{RECORD_HEADER},gap")?;
            for r in &records {
                let gap = r.extra["gap"].as_f64().unwrap_or(f64::NAN);
                writeln!(out, "{},{}", record_row(r), format_number(gap))?;
            }
        }
        Format::Json => write_records(&records, format, out)?,
    }
    Ok(EXIT_OK)
}

fn parse_partition(text: &str, n: usize) -> std::result::Result<Partition, Failure> {
    Ok(match text {
        "sequential" => Partition::sequential(n)?,
        "combined" => Partition::combined(n)?,
        other => other.parse()?,
    })
}

fn cmd_verify(
    args: &ProblemArgs,
    choice: PomChoice,
    format: ReportFormat,
    out: &mut dyn Write,
) -> CmdResult {
    let problem = problem_from_args(args)?;
    let (rho1, rho2) = problem.states()?;
    let risks = risk_operators(&problem.hypotheses()?, &problem.costs)?;
    let pom = match choice {
        PomChoice::Optimal => binary_optimal_pom(&rho1, &rho2, problem.prior_xi, &problem.costs)?,
        PomChoice::AlwaysFirst => Pom::always(0, 2, rho1.dim()),
        PomChoice::AlwaysSecond => Pom::always(1, 2, rho1.dim()),
    };
    let report = check_optimality(&risks, &pom, OPTIMALITY_TOL)?;
    let cost = expected_cost_from_risks(&risks, &pom)?;
    match format {
        ReportFormat::Text => {
            let mut text = String::new();
            let _ = writeln!(
                text,
                "upsilon_asymmetry {}",
                format_number(report.upsilon_asymmetry)
            );
            for (j, e) in report.min_eigenvalue_excess.iter().enumerate() {
                let _ = writeln!(text, "min_excess_h{} {}", j + 1, format_number(*e));
            }
            let _ = writeln!(
                text,
                "trace_upsilon {}",
                format_number(report.trace_upsilon)
            );
            let _ = writeln!(text, "expected_cost {}", format_number(cost));
            let _ = writeln!(text, "tolerance {}", format_number(report.tolerance));
            let verdict = if report.is_optimal {
                "optimal"
            } else {
                "not-optimal"
            };
            let _ = writeln!(text, "verdict {verdict}");
            out.write_all(text.as_bytes())?;
        }
        ReportFormat::Json => {
            let value = json!({ "report": report, "expected_cost": cost });
            serde_json::to_writer_pretty(&mut *out, &value).map_err(std::io::Error::other)?;
            writeln!(out)?;
        }
    }
    Ok(if report.is_optimal {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn cmd_simulate(
    args: &ProblemArgs,
    partition: &str,
    trials: u64,
    seed: u64,
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let problem = problem_from_args(args)?;
    let n = problem.n_particles;
    let strategy = parse_partition(partition, n)?;
    if strategy.total() != n {
        return Err(Failure::Usage(format!(
            "partition {strategy} does not sum to n = {n}"
        )));
    }
    let (xi, delta) = (problem.prior_xi, problem.delta);
    let analytic = if strategy.is_sequential() {
        sequential_cost_closed(xi, delta, n)
    } else if strategy.groups().len() == 1 {
        combined_cost_closed(xi, delta, n)
    } else {
        partition_cost(xi, problem.theta1, problem.theta2, &strategy)?
    };
    let config = SimulationConfig {
        problem,
        strategy: strategy.clone(),
        trials,
        seed,
    };
    let result = simulate(&config)?;
    let sigma = (analytic * (1.0 - analytic) / trials as f64).sqrt();
    let sigma = if sigma > 0.0 {
        sigma
    } else {
        result.standard_error
    };
    let diff = result.error_rate - analytic;
    let z = if sigma > 0.0 { diff / sigma } else { 0.0 };

    let mut extra = BTreeMap::new();
    extra.insert("standard_error".to_string(), json!(result.standard_error));
    extra.insert("analytic_cost".to_string(), json!(analytic));
    extra.insert("z_score".to_string(), json!(z));
    extra.insert("trials".to_string(), json!(trials));
    extra.insert("seed".to_string(), json!(seed));
    extra.insert(
        "per_hypothesis_error".to_string(),
        json!(result.per_hypothesis_error),
    );
    let record = OutputRecord {
        xi,
        delta_rad: delta.radians(),
        n,
        strategy: strategy.to_string(),
        cost: result.error_rate,
        method: "montecarlo".into(),
        extra,
    };
    match format {
        Format::Csv => {
            writeln!(out, "{CSV_SCHEMA_LINE}")?;
            writeln!(
                out,
                "xi,delta_rad,n,strategy,method,error_rate,standard_error,analytic_cost,z_score,trials,seed"
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                format_number(xi),
                format_number(delta.radians()),
                n,
                record.strategy,
                record.method,
                format_number(result.error_rate),
                format_number(result.standard_error),
                format_number(analytic),
                format_number(z),
                trials,
                seed
            )?;
        }
        Format::Json => write_records(std::slice::from_ref(&record), format, out)?,
    }
    Ok(EXIT_OK)
}

/// First 8 bytes of SHA-256 over the little-endian bits of each angle, as hex.
pub fn phi_sequence_hash(angles: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for a in angles {
        hasher.update(a.to_bits().to_le_bytes());
    }
    hasher.finalize()[..8]
        .iter()
        .fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn cmd_tree(args: &ProblemArgs, format: Format, out: &mut dyn Write) -> CmdResult {
    let problem = problem_from_args(args)?;
    let n = problem.n_particles;
    if n > ENUMERATION_CAP {
        return Err(Error::TreeTooDeep {
            n,
            cap: ENUMERATION_CAP,
        }
        .into());
    }
    let tree = enumerate_tree(problem.prior_xi, problem.theta1, problem.theta2, n)?;
    let closed = sequential_cost_closed(problem.prior_xi, problem.delta, n);
    let distinct: Vec<usize> = (1..=n)
        .map(|d| tree.distinct_posteriors(d, 1e-10).len())
        .collect();

    match format {
        Format::Csv => {
            let mut w = std::io::BufWriter::new(&mut *out);
            writeln!(w, "{CSV_SCHEMA_LINE}")?;
            writeln!(w, "depth,outcomes,weight,posterior,phi_sequence_hash")?;
            for b in tree.leaves() {
                let outcomes: String = b.outcomes.iter().map(|o| o.symbol()).collect();
                writeln!(
                    w,
                    "{n},{outcomes},{},{},{}",
                    format_number(b.weight),
                    format_number(b.posterior),
                    phi_sequence_hash(&b.detector_angles)
                )?;
            }
            writeln!(w, "# weighted_cost={}", format_number(tree.weighted_cost()))?;
            writeln!(w, "# closed_form_cost={}", format_number(closed))?;
            for (d, count) in distinct.iter().enumerate() {
                writeln!(w, "# depth={} distinct_posteriors={count}", d + 1)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let branches: Vec<Value> = tree
                .leaves()
                .map(|b| {
                    json!({
                        "outcomes": b.outcomes.iter().map(|o| o.symbol()).collect::<String>(),
                        "weight": b.weight,
                        "posterior": b.posterior,
                        "detector_angles": b.detector_angles,
                    })
                })
                .collect();
            let value = json!({
                "xi": problem.prior_xi,
                "delta_rad": problem.delta.radians(),
                "n": n,
                "branches": branches,
                "weighted_cost": tree.weighted_cost(),
                "closed_form_cost": closed,
                "distinct_posteriors": distinct,
            });
            serde_json::to_writer_pretty(&mut *out, &value).map_err(std::io::Error::other)?;
            writeln!(out)?;
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(0.032291617771), "0.032291617771");
        assert_eq!(format_number(123456.789), "123456.789");
        assert_eq!(format_number(2.5e-5), "2.5e-5");
        assert_eq!(format_number(-1.0 / 3.0 * 1e-7), "-3.33333333333e-8");
        assert_eq!(format_number(1e6), "1e6");
        assert_eq!(format_number(12.0), "12");
    }

    #[test]
    fn ranges() {
        let v = parse_real_range("0.1:0.5:0.1", "xi").ok().unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(
            parse_real_range("0.2,0.4", "xi").ok().unwrap(),
            vec![0.2, 0.4]
        );
        assert!(parse_real_range("0.5:0.1:0.1", "xi").is_err());
        assert!(parse_real_range("a", "xi").is_err());
        assert_eq!(parse_count_range("1:4").ok().unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_count_range("2:9:3").ok().unwrap(), vec![2, 5, 8]);
        assert_eq!(parse_count_range("7").ok().unwrap(), vec![7]);
        assert!(parse_count_range("4:1").is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(phi_sequence_hash(&[]).len(), 16);
        assert_eq!(
            phi_sequence_hash(&[1.0, 2.0]),
            phi_sequence_hash(&[1.0, 2.0])
        );
        assert_ne!(
            phi_sequence_hash(&[1.0, 2.0]),
            phi_sequence_hash(&[2.0, 1.0])
        );
    }
}
