//! Command-line front end: `shel analyze | certify | bench | lenscheck`.
//!
//! Every subcommand prints a human-readable summary by default and a single
//! JSON document with `--json`. Exit codes:
//!
//! | code | meaning                                                     |
//! |------|-------------------------------------------------------------|
//! | 0    | success (including "no lens found")                         |
//! | 1    | a check failed (certification, benchmark row, lens check)   |
//! | 2    | the input could not be read or parsed, or bad arguments     |
//! | 3    | the program uses an operator the enabled rules cannot handle|
//! |      | (or one the expression language does not define)            |

pub mod analyze;
pub mod bench;
pub mod checks;

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::contexts::Bound;
use crate::lenses::EvalConfig;
use crate::numerics::{parse_expr, unit_roundoff, Expr, Format, ParseError, DEFAULT_PRECISION};
use crate::synth::{EngineConfig, EngineError, RuleSet};

pub use analyze::{analyze_program, build_output, status_of, AnalysisOutput, ReportOut, Status};
pub use bench::{BenchRow, Outcome, Suite};

/// Version of every JSON document the CLI emits.
pub const SCHEMA_VERSION: u32 = 1;

/// Exit code for parse and input errors.
pub const EXIT_PARSE: i32 = 2;
/// Exit code for operators outside the enabled rule set.
pub const EXIT_UNSUPPORTED: i32 = 3;
/// Exit code for failed checks.
pub const EXIT_CHECK_FAILED: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "shel",
    version,
    about = "Synthesize and certify backward error bounds for floating-point programs"
)]
pub struct Cli {
    /// Oracle precision in bits for all multiprecision evaluation.
    #[arg(long, global = true, env = "SHEL_PRECISION", default_value_t = DEFAULT_PRECISION,
          value_parser = clap::value_parser!(u32).range(64..=65536))]
    pub precision: u32,

    /// Floating-point format of the analyzed programs.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Binary64)]
    pub format: FormatArg,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Binary32,
    Binary64,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Binary32 => Format::Binary32,
            FormatArg::Binary64 => Format::Binary64,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize per-variable backward error bounds for a program.
    Analyze(AnalyzeArgs),
    /// Synthesize bounds, then check them numerically on random inputs.
    Certify(CertifyArgs),
    /// Run a benchmark suite and compare against the expected bounds.
    Bench(BenchArgs),
    /// Check the lens conditions of every catalog lens on random inputs.
    Lenscheck(LenscheckArgs),
}

/// Saturation limits and rule selection shared by `analyze` and `certify`.
#[derive(Clone, Debug, Args)]
pub struct EngineArgs {
    /// Maximum number of saturation rounds.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iters: usize,
    /// Maximum number of facts in the database.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_facts: usize,
    /// Largest bound (in ε units, e.g. `64` or `129/2`) any context may carry.
    #[arg(long, default_value = "64", value_parser = parse_bound)]
    pub bound_cap: Bound,
    /// Comma-separated rules: `default`, `all`, rule names, `-name` to drop.
    #[arg(long, default_value = "default", value_parser = parse_rules)]
    pub rules: RuleSet,
    /// Wall-clock limit for saturation, in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
}

impl EngineArgs {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            max_iterations: self.max_iters,
            max_facts: self.max_facts,
            rules: self.rules,
            bound_cap: self.bound_cap.clone(),
            timeout: self.timeout.map(Duration::from_secs_f64),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// An s-expression, a path to a file holding one, or `-` for stdin.
    pub input: String,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Print every Pareto-minimal bound vector, not only the smallest-max one.
    #[arg(long)]
    pub all_bounds: bool,
    /// Print the derivation behind each printed bound vector.
    #[arg(long)]
    pub derivation: bool,
    /// Print machine-readable JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// An s-expression, a path to a file holding one, or `-` for stdin.
    pub input: String,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Random input samples per bound vector.
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    /// Seed of the input sampler.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Draw only positive inputs (for programs with square roots of inputs).
    #[arg(long)]
    pub positive: bool,
    /// Certify every Pareto-minimal bound vector, not only the smallest-max one.
    #[arg(long)]
    pub all_bounds: bool,
    /// Print machine-readable JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Per-program saturation time limit in seconds.
    #[arg(long, default_value_t = 120.0)]
    pub timeout: f64,
    /// Also run the larger sizes (slow; may exceed desk-scale limits).
    #[arg(long)]
    pub extended: bool,
    /// Run only rows whose name contains this string.
    #[arg(long)]
    pub only: Option<String>,
    /// Random samples per case study.
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    /// Print machine-readable JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct LenscheckArgs {
    /// Random samples per lens.
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    /// Seed of the input samplers.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Check only lenses whose name contains this string.
    #[arg(long)]
    pub only: Option<String>,
    /// Print machine-readable JSON instead of text
    #[arg(long)]
    pub json: bool,
}

fn parse_bound(s: &str) -> Result<Bound, String> {
    s.parse::<Bound>().map_err(|e| e.to_string())
}

fn parse_rules(s: &str) -> Result<RuleSet, String> {
    s.parse::<RuleSet>().map_err(|e| e.to_string())
}

/// Errors that end a command before it produces output.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Unsupported(#[from] EngineError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            // A well-formed application of an operator we do not know is
            // unsupported rather than malformed.
            CliError::Parse(ParseError::UnknownOperator { .. }) => EXIT_UNSUPPORTED,
            CliError::Io { .. } | CliError::Parse(_) => EXIT_PARSE,
            CliError::Unsupported(_) => EXIT_UNSUPPORTED,
            CliError::Other(_) => EXIT_CHECK_FAILED,
        }
    }
}

/// Reads the program text: `-` is stdin, an existing path is a file,
/// anything else is the expression itself.
pub fn read_input(input: &str) -> Result<String, CliError> {
    if input == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdin>"),
            source,
        })?;
        return Ok(s);
    }
    let path = Path::new(input);
    if !input.trim_start().starts_with('(') && path.is_file() {
        return std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        });
    }
    Ok(input.to_string())
}

/// Reads and parses the program named by `input`.
pub fn load_program(input: &str) -> Result<Expr, CliError> {
    Ok(parse_expr(&read_input(input)?)?)
}

/// Evaluation settings from the global flags.
pub fn eval_config(cli: &Cli) -> EvalConfig {
    EvalConfig::new(unit_roundoff(cli.format.into())).with_precision(cli.precision)
}

/// Runs a parsed command line, writing results to `out` and diagnostics to
/// `err`. Returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Analyze(a) => analyze::cmd_analyze(cli, a, out),
        Command::Certify(a) => checks::cmd_certify(cli, a, out),
        Command::Bench(a) => bench::cmd_bench(cli, a, out),
        Command::Lenscheck(a) => checks::cmd_lenscheck(cli, a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "shel: {e}");
            e.exit_code()
        }
    }
}

/// Writes a value as one line of pretty JSON.
pub(crate) fn write_json<T: serde::Serialize>(out: &mut dyn Write, v: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Other(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_err)
}

pub(crate) fn io_err(source: io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}
