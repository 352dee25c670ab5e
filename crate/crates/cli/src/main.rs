//! `tcpkit`: solve and analyze tensor complementarity problems from JSON files.
//!
//! Exit codes: 0 success, 1 when the report carries a failed property, a
//! GUS violation, a failed reproduction or a non-converged iterative solve,
//! 2 when no report could be produced (usage or IO error).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use tcpkit::solvers::q_grid;
use tcpkit::{
    check_property, eigenpairs, enumerate_solutions, gus_probe, run_all, run_repro,
    solve_iterative, CheckOptions, EigenKind, EigenOptions, GusVerdict, Property, ReproCase,
    SolverOptions, TcpError, TcpInstance, Tensor, VerdictStatus,
};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "tcpkit", version, about = "Tensor complementarity toolkit")]
struct Cli {
    /// Indent the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    /// Also write the report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Random seed; defaults to $TCPKIT_SEED, then 42.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Enumerate,
    Iterative,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyArg {
    P,
    Ssp,
    R,
    StrongP,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    H,
    Z,
}

#[derive(Subcommand)]
enum Verb {
    /// Solve TCP(q, A) for the instance in FILE.
    Solve {
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "enumerate")]
        method: Method,
    },
    /// Enumerate every solution found by the active-set search.
    Enumerate {
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
    },
    /// Search for a witness against a tensor class.
    Check {
        #[arg(long, value_enum)]
        property: PropertyArg,
        #[arg(long, value_name = "FILE")]
        tensor: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Real H- or Z-eigenpairs.
    Eigen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_name = "FILE")]
        tensor: PathBuf,
    },
    /// Count solutions over a grid of q vectors.
    GusProbe {
        #[arg(long, value_name = "FILE")]
        tensor: PathBuf,
        /// Per-axis grid `lo:hi:steps`.
        #[arg(long, default_value = "-4:4:9", allow_hyphen_values = true)]
        grid: String,
        /// Explicit q vectors (comma separated); replaces the grid.
        #[arg(long = "q", allow_hyphen_values = true)]
        q: Vec<String>,
    },
    /// Recompute the worked examples.
    Repro {
        /// example1, example2, example3, theorem31, prop41 or all
        case: String,
    },
}

#[derive(Debug)]
struct UsageError(String);

impl From<TcpError> for UsageError {
    fn from(e: TcpError) -> Self {
        UsageError(e.to_string())
    }
}

fn read_json(path: &Path) -> Result<Value, UsageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<TcpInstance, UsageError> {
    serde_json::from_value(read_json(path)?)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

/// A tensor file, or the tensor of an instance file.
fn load_tensor(path: &Path) -> Result<Tensor, UsageError> {
    let mut v = read_json(path)?;
    if let Some(t) = v.get_mut("tensor") {
        v = t.take();
    }
    serde_json::from_value(v).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn parse_vec(s: &str) -> Result<Vec<f64>, UsageError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| UsageError(format!("bad vector {s:?}: {e}")))
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize), UsageError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || UsageError(format!("grid must be lo:hi:steps, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let steps: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || steps == 0 {
        return Err(bad());
    }
    Ok((lo, hi, steps))
}

fn env_seed() -> Result<Option<u64>, UsageError> {
    match std::env::var("TCPKIT_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| UsageError(format!("TCPKIT_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Runs one verb; the bool says whether the report signals a failure.
fn run(cli: &Cli) -> Result<(Value, bool), UsageError> {
    let seed = match cli.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(DEFAULT_SEED),
    };
    let solver = SolverOptions::default().with_seed(seed);
    Ok(match &cli.verb {
        Verb::Solve { instance, method } => {
            let inst = load_instance(instance)?;
            match method {
                Method::Enumerate => (to_value(enumerate_solutions(&inst, &solver)?), false),
                Method::Iterative => match solve_iterative(&inst, None, &solver) {
                    Ok(sol) => (to_value(sol), false),
                    Err(TcpError::NoConvergence { best, residual }) => (
                        json!({"status": "no_convergence", "best": best, "residual": residual}),
                        true,
                    ),
                    Err(e) => return Err(e.into()),
                },
            }
        }
        Verb::Enumerate { instance } => {
            let inst = load_instance(instance)?;
            (to_value(enumerate_solutions(&inst, &solver)?), false)
        }
        Verb::Check {
            property,
            tensor,
            samples,
        } => {
            let a = load_tensor(tensor)?;
            let mut opts = CheckOptions::default().with_seed(seed);
            if let Some(n) = samples {
                if *n == 0 {
                    return Err(UsageError("--samples must be positive".into()));
                }
                opts = opts.with_samples(*n);
            }
            let property = match property {
                PropertyArg::P => Property::P,
                PropertyArg::Ssp => Property::StrictlySemiPositive,
                PropertyArg::R => Property::R,
                PropertyArg::StrongP => Property::StrongP,
            };
            let v = check_property(&a, property, &opts)?;
            let failed = matches!(v.status, VerdictStatus::Fails | VerdictStatus::CertifiedFails);
            (to_value(v), failed)
        }
        Verb::Eigen { kind, tensor } => {
            let a = load_tensor(tensor)?;
            let kind = match kind {
                KindArg::H => EigenKind::H,
                KindArg::Z => EigenKind::Z,
            };
            let opts = EigenOptions {
                seed,
                ..EigenOptions::default()
            };
            (to_value(eigenpairs(&a, kind, &opts)), false)
        }
        Verb::GusProbe { tensor, grid, q } => {
            let a = load_tensor(tensor)?;
            let q_list = if q.is_empty() {
                let (lo, hi, steps) = parse_grid(grid)?;
                q_grid(a.dim(), lo, hi, steps)
            } else {
                q.iter().map(|s| parse_vec(s)).collect::<Result<_, _>>()?
            };
            let report = gus_probe(&a, &q_list, &solver)?;
            let violated = report.verdict == GusVerdict::Violated;
            (to_value(report), violated)
        }
        Verb::Repro { case } => {
            if case == "all" {
                let reports = run_all(seed)?;
                let failed = reports.iter().any(|r| !r.pass);
                (to_value(reports), failed)
            } else {
                let case: ReproCase = case.parse()?;
                let report = run_repro(case, seed)?;
                let failed = !report.pass;
                (to_value(report), failed)
            }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, failed) = match run(&cli) {
        Ok(r) => r,
        Err(UsageError(msg)) => {
            eprintln!("tcpkit: {msg}");
            return ExitCode::from(2);
        }
    };
    let text = if cli.pretty {
        serde_json::to_string_pretty(&report)
    } else {
        serde_json::to_string(&report)
    }
    .expect("reports serialize");
    println!("{text}");
    if let Some(path) = &cli.output {
        if let Err(e) = fs::write(path, format!("{text}\n")) {
            eprintln!("tcpkit: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(u8::from(failed))
}
