use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

mod format;
mod run;

/// Realizability certificates and determinacy checks for moment data.
#[derive(Debug, Parser)]
#[command(name = "realizability", version)]
pub struct Cli {
    /// Relative tolerance of every PSD test.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a seeded atomic ensemble and write it with its exact moments.
    Gen(GenArgs),
    #[command(subcommand)]
    /// Necessary-condition checks on moment data.
    Check(CheckCmd),
    #[command(subcommand)]
    /// Quasi-analyticity of positive sequences.
    Qa(QaCmd),
    #[command(subcommand)]
    /// Weighted Sobolev norms and test-function bounds.
    Sobolev(SobolevCmd),
    #[command(subcommand)]
    /// Brute-force realizability and perturbation.
    Oracle(OracleCmd),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub atoms: usize,
    /// Sample point atoms in the unit box instead of grid measures.
    #[arg(long)]
    pub point: bool,
    /// Dimension of the points or of the grid.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
    /// Grid spacing; defaults to `1/grid`.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub max_density: f64,
    /// Highest moment order.
    #[arg(long = "N", default_value_t = 4)]
    pub n: usize,
    /// Directory for `ensemble.json` and `moments.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CheckCmd {
    /// Moment matrix (or generalized moment matrix) positivity.
    Psd(MomentsArgs),
    /// Localizing matrices for a semi-algebraic set.
    Semialgebraic {
        #[command(flatten)]
        m: MomentsArgs,
        /// `{"d", "constraints": [...]}` or `{"box": [[lo, hi], ...]}`.
        #[arg(long)]
        spec: String,
    },
    /// Necessary conditions for a random Radon measure.
    Radon(MomentsArgs),
    /// Necessary conditions for densities bounded by `c`.
    BoundedDensity {
        #[command(flatten)]
        m: MomentsArgs,
        #[arg(long)]
        c: f64,
    },
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Moment file (path or inline JSON).
    #[arg(long)]
    pub moments: String,
    /// Truncation level; defaults to the largest admissible one.
    #[arg(long)]
    pub t: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum QaCmd {
    /// Quasi-analytic, not quasi-analytic or inconclusive.
    Classify(SeqArgs),
    /// Log-convex regularization of the first `n` terms.
    Regularize(SeqArgs),
    /// Denjoy-Carleman partial sums.
    Sums(SeqArgs),
    /// Slower-decaying summable sequence dominating `a`.
    Dominate {
        /// `geometric` or `inverse_power`.
        #[arg(long)]
        family: String,
        /// Ratio `r` or exponent `p`.
        #[arg(long)]
        param: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    /// Sequence JSON (path or inline).
    #[arg(long)]
    pub seq: String,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
pub enum SobolevCmd {
    /// Weighted Sobolev norm of a sampled function.
    Norm {
        #[arg(long)]
        f: String,
        /// `{"k1": int, "k2": weight}`.
        #[arg(long)]
        k: String,
    },
    /// Norms of the modulated bump against their bound.
    Bound {
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long)]
        k: String,
        /// Derivative bound sequence `d_n`.
        #[arg(long)]
        seq: String,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Condition (D) partner index.
    ConditionD {
        #[arg(long)]
        k: String,
        #[arg(long, default_value_t = 10.0)]
        window: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleCmd {
    /// Non-negative fit on candidate points.
    Fit {
        #[arg(long)]
        moments: String,
        /// JSON list of points, e.g. `[[0], [0.5], [1]]`.
        #[arg(long)]
        candidates: String,
        #[arg(long)]
        t: usize,
    },
    /// Shift one moment entry.
    Perturb {
        #[arg(long)]
        moments: String,
        /// Multi-index (point moments) or cell tuple (tensors), as JSON.
        #[arg(long)]
        at: String,
        #[arg(long, allow_negative_numbers = true)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Outcome classes and their exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Disproved,
    Inconclusive,
    InputError,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Passed => 0,
            Status::Disproved => 1,
            Status::Inconclusive => 2,
            Status::InputError => 3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Digest {
    pub source: String,
    pub sha256: String,
}

/// Everything a subcommand hands back for the report.
pub struct Outcome {
    pub status: Status,
    pub result: Value,
}

#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl From<realizability::Error> for Failure {
    fn from(e: realizability::Error) -> Self {
        use realizability::Error as E;
        let status = match e {
            E::SequenceIsQuasiAnalytic | E::DerivativeBoundViolated { .. } | E::NegativeContraction { .. } => Status::Disproved,
            E::ClassificationInconclusive => Status::Inconclusive,
            _ => Status::InputError,
        };
        Failure { status, message: e.to_string() }
    }
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { status: Status::InputError, message: message.into() }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let start = Instant::now();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let fail = Failure::input(e.to_string().trim_start_matches("error: ").trim_end().to_string());
            return emit(&argv, &[], Err(fail), start);
        }
    };
    let mut ctx = run::Context::default();
    let outcome = run::dispatch(&cli, &mut ctx);
    emit(&argv, &ctx.digests, outcome, start)
}

fn emit(argv: &[String], digests: &[Digest], outcome: Result<Outcome, Failure>, start: Instant) -> ExitCode {
    let (status, result, error) = match outcome {
        Ok(o) => (o.status, o.result, None),
        Err(f) => {
            eprintln!("error: {}", f.message);
            (f.status, Value::Null, Some(f.message))
        }
    };
    let report = json!({
        "command": argv.get(1..).unwrap_or_default(),
        "inputs": digests,
        "status": status,
        "exit_code": status.code(),
        "result": result,
        "error": error,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    println!("{}", format::to_string(&report));
    ExitCode::from(status.code())
}

/// Writes `value` as a report-formatted JSON file.
pub fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    std::fs::write(path, format::to_string(value) + "\n").map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}
