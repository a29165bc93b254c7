//! `hardy-lab`: command-line experiments on Hardy and Hardy-Sobolev quotients.
//!
//! Every command appends run records to `records.ndjson` in the output directory and,
//! for curves and series, rows to a CSV table next to it.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod record;
pub mod verify;

pub use record::{read_records, write_record, write_table, RunRecord, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "HARDY_LAB_OUT";
pub const DEFAULT_OUT: &str = "hardy-lab-out";

#[derive(Debug, Parser)]
#[command(name = "hardy-lab", version, about = "Hardy and Hardy-Sobolev quotients on model manifolds")]
pub struct Cli {
    /// Output directory for records and tables [default: $HARDY_LAB_OUT or ./hardy-lab-out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key = value` file supplying defaults for any flag of the subcommand
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hardy, Sobolev and Hardy-Sobolev constants
    Constants(ConstantsArgs),
    /// Moments of the Euclidean ground state
    BubbleMoments(BubbleArgs),
    /// Minimize the quotient on one model
    Solve(SolveArgs),
    /// Sweep the least Hardy eigenvalue over lambda
    MuCurve(MuCurveArgs),
    /// Bracket the attainment threshold lambda*
    LambdaStar(LambdaStarArgs),
    /// Test the strict inequality below the sharp constant
    #[command(name = "theorem2-check")]
    Theorem2Check(Theorem2Args),
    /// Quotients of concentrating bubbles and their expansion in 1/n
    ExpansionFit(ExpansionArgs),
    /// Run a suite of invariant checks
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub dim: u32,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct BubbleArgs {
    #[arg(long)]
    pub dim: u32,
    #[arg(long)]
    pub sigma: f64,
    /// Quadrature tolerance
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ManifoldArgs {
    /// sphere, euclidean or hyperbolic
    #[arg(long, default_value = "sphere")]
    pub manifold: String,
    /// Curvature radius
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 3)]
    pub dim: u32,
    /// Domain radius: a number, `pi`, `<k>pi` or `pi/<k>` [default: antipode for the
    /// sphere, 1 otherwise]
    #[arg(long)]
    pub rmax: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// `log` (hybrid log grid, sigma = 2 only) or `graded`
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 256)]
    pub cells: usize,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    /// dirichlet or reflected [default: reflected on a full sphere, dirichlet otherwise]
    #[arg(long)]
    pub bc: Option<String>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct MuCurveArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = -3.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 9)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct LambdaStarArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = -10.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
    /// Detection threshold below the Hardy constant [default: measured from one refinement]
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct Theorem2Args {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub sigma: f64,
    /// Cells of the coarse grid; the fine grid doubles them
    #[arg(long, default_value_t = 128)]
    pub cells: usize,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ExpansionArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[arg(long, default_value_t = -1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Comma-separated bubble scales
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    pub n: Vec<f64>,
    /// Cutoff radius [default: half the domain radius]
    #[arg(long)]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// all, constants, bubble, manifold, thresholds, refined-hardy or expansion
    #[arg(long, default_value = "all")]
    pub suite: String,
}

/// Output directory: `--out`, else `$HARDY_LAB_OUT`, else `./hardy-lab-out`.
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn parse_argv(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    Cli::try_parse_from(argv)
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString>,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let text: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let args = match config::config_path(&text) {
        Some(p) => match config::read_config(p.as_ref()).and_then(|c| config::merge(args, &c)) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        },
        None => args,
    };
    let cli = match parse_argv(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
        }
    };
    let out = output_dir(cli.out.clone());
    let run_id = format!("{}-{}", chrono::Utc::now().format("%Y%m%dT%H%M%S%.6fZ"), std::process::id());
    let outcome = match commands::execute(&cli.command, &run_id) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    for r in &outcome.records {
        if let Err(e) = write_record(r, &out) {
            eprintln!("error: cannot write record to {}: {e}", out.display());
            return EXIT_ERROR;
        }
        match serde_json::to_string(&r.results) {
            Ok(s) => println!("{} {s}", r.command),
            Err(e) => eprintln!("error: {e}"),
        }
    }
    for t in &outcome.tables {
        if let Err(e) = write_table(t, &run_id, &out) {
            eprintln!("error: cannot write table to {}: {e}", out.display());
            return EXIT_ERROR;
        }
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    outcome.exit
}
