//! `quartic-dual`: generate instances, certify critical points, tabulate
//! certificates.
//!
//! Exit codes: 0 success or certificate passed, 1 certificate failed,
//! 2 input error, 3 numerical precondition failure.

mod report;
mod summary;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use quartic_dual::certify::{
    CertifyConfig, GAP_TOL, LEGENDRE_SAMPLES, LEGENDRE_TOL, MULTISTART, SAMPLES, STAT_TOL,
};
use quartic_dual::primal::{MAX_ITER, STATIONARITY_TOL};
use quartic_dual::sampling::{normal_vec, sample_rng};
use quartic_dual::{certify, generate_random, load_instance, save_instance, CaseTarget, ProblemInstance};

#[derive(Parser)]
#[command(name = "quartic-dual", version, about = "Duality certificates for quartic-quadratic functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write its canonical document
    Gen(GenArgs),
    /// Certify the critical point reached from an initial guess
    Certify(CertifyArgs),
    /// Tabulate a set of certificate files
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    /// State dimension
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of quartic terms
    #[arg(long = "N", value_parser = clap::value_parser!(u64).range(1..))]
    terms: u64,
    #[arg(long = "case", value_parser = parse_case)]
    case: CaseTarget,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// `zero`, `random:SEED`, or a comma-separated vector
    #[arg(long = "x-init", default_value = "zero")]
    x_init: XInit,
    /// `auto` runs the doubling rule; a number fixes K
    #[arg(long = "K", default_value = "auto")]
    k: KArg,
    /// Primal ball radius [default: 0.05 (1 + |x0|)]
    #[arg(long)]
    r: Option<f64>,
    /// Dual ball radius [default: 0.05 (1 + |v*|)]
    #[arg(long)]
    r1: Option<f64>,
    /// Multiplier ball radius [default: 0.1 (1 + |v0*|_inf)]
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long, default_value_t = SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = MULTISTART)]
    multistart: usize,
    #[arg(long = "gap-tol", default_value_t = GAP_TOL)]
    gap_tol: f64,
    #[arg(long = "stat-tol", default_value_t = STAT_TOL)]
    stat_tol: f64,
    #[arg(long = "newton-tol", default_value_t = STATIONARITY_TOL)]
    newton_tol: f64,
    #[arg(long = "max-iter", default_value_t = MAX_ITER)]
    max_iter: usize,
    #[arg(long = "legendre-samples", default_value_t = LEGENDRE_SAMPLES)]
    legendre_samples: usize,
    #[arg(long = "legendre-tol", default_value_t = LEGENDRE_TOL)]
    legendre_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Glob pattern selecting certificate files
    #[arg(long)]
    certs: String,
    #[arg(long, value_enum, default_value_t = report::Format::Text)]
    format: report::Format,
}

#[derive(Clone, Debug)]
enum XInit {
    Zero,
    Random(u64),
    Explicit(Vec<f64>),
}

impl FromStr for XInit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "zero" {
            return Ok(XInit::Zero);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed.parse().map(XInit::Random).map_err(|e| format!("bad seed `{seed}`: {e}"));
        }
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad entry `{t}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(XInit::Explicit)
    }
}

impl XInit {
    fn resolve(&self, n: usize) -> Result<Vec<f64>, Failure> {
        match self {
            XInit::Zero => Ok(vec![0.0; n]),
            XInit::Random(seed) => Ok(normal_vec(&mut sample_rng(*seed, 0, 0), n)),
            XInit::Explicit(v) if v.len() == n => Ok(v.clone()),
            XInit::Explicit(v) => {
                Err(Failure::Input(format!("--x-init has {} entries but the instance has n = {n}", v.len())))
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum KArg {
    Auto,
    Fixed(f64),
}

impl FromStr for KArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(KArg::Auto);
        }
        let k: f64 = s.parse().map_err(|e| format!("expected `auto` or a number: {e}"))?;
        if k > 0.0 && k.is_finite() {
            Ok(KArg::Fixed(k))
        } else {
            Err(format!("K must be positive, got {s}"))
        }
    }
}

fn parse_case(s: &str) -> Result<CaseTarget, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = CaseTarget::ALL.iter().map(|c| c.as_str()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<quartic_dual::Error> for Failure {
    fn from(e: quartic_dual::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_gen(args: &GenArgs) -> Result<ExitCode, Failure> {
    let inst: ProblemInstance = generate_random(args.seed, args.n as usize, args.terms as usize, args.case)?;
    write_file(&args.out, &save_instance(&inst)?)?;
    println!("{}", inst.digest()?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(args: &CertifyArgs) -> Result<ExitCode, Failure> {
    let inst: ProblemInstance = load_instance(&read_file(&args.instance)?, true)?;
    let x_init = args.x_init.resolve(inst.dim())?;
    let cfg = CertifyConfig {
        r: args.r,
        r1: args.r1,
        r2: args.r2,
        samples: args.samples,
        seed: args.seed,
        gap_tol: args.gap_tol,
        stat_tol: args.stat_tol,
        multistart: args.multistart,
        k: match args.k {
            KArg::Auto => None,
            KArg::Fixed(k) => Some(k),
        },
        newton_tol: args.newton_tol,
        max_iter: args.max_iter,
        legendre_samples: args.legendre_samples,
        legendre_tol: args.legendre_tol,
    };
    let cert = certify(&inst, &x_init, &cfg)?;
    write_file(&args.out, &cert.to_bytes()?)?;
    print!("{}", summary::render(&cert));
    Ok(if cert.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode, Failure> {
    let paths = glob::glob(&args.certs).map_err(|e| Failure::Input(format!("bad glob `{}`: {e}", args.certs)))?;
    let mut files = Vec::new();
    for entry in paths {
        files.push(entry.map_err(|e| Failure::Input(format!("cannot access {}: {e}", e.path().display())))?);
    }
    files.sort();
    if files.is_empty() {
        eprintln!("warning: no certificate files match `{}`", args.certs);
    }
    let mut rows = Vec::with_capacity(files.len());
    for path in &files {
        let cert = quartic_dual::Certificate::from_bytes(&read_file(path)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        rows.push(report::Row::from_certificate(&path.display().to_string(), &cert));
    }
    let table = report::render(&rows, args.format).map_err(|e| Failure::Input(e.to_string()))?;
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical precondition failed: {msg}");
            ExitCode::from(3)
        }
    }
}
