//! `tomodesign` command-line front end.
//!
//! Every command writes one JSON document holding the command, the full
//! configuration it ran with, and its result. Exit codes: 0 success,
//! 1 validation failure, 2 parse or configuration error, 3 numerical failure.

mod commands;
mod input;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tomodesign::optimizer::BasisKind;

#[derive(Debug, Parser, Serialize)]
#[command(name = "tomodesign", version, about = "Optimal measurement designs for state tomography")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON input: a design, an optimization problem or an experiment,
    /// depending on the command.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// RNG seed. Overrides any seed in the input file; otherwise 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Monte Carlo samples for `objective` (default 100000, 0 disables).
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// Simulated experiments for `simulate`; overrides the input file.
    #[arg(long, global = true)]
    pub runs: Option<usize>,

    /// Shots per experiment for `simulate`; overrides the input file.
    #[arg(long, global = true)]
    pub shots: Option<usize>,

    /// Known basis directions: comma-separated labels, `diagonal`, or
    /// `marginals` (two-qubit Pauli basis).
    #[arg(long, global = true)]
    pub mask: Option<String>,

    /// Prior: `pure`, inline JSON such as `{"kind":"haar_orbit","spectrum":[1,0]}`,
    /// or a path to a JSON file.
    #[arg(long, global = true)]
    pub prior: Option<String>,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Numerical tolerance; see each command for what it controls.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Operator basis used for masks and reports.
    #[arg(long, global = true, value_enum, default_value_t = BasisArg::GellMann)]
    pub basis: BasisArg,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check positivity, completeness and contraction of a POVM or family.
    /// `--tol` sets the positivity, completeness and hermiticity tolerances.
    Validate,
    /// Prior-averaged error determinant of a design, closed form and Monte Carlo.
    Objective,
    /// Search for an optimal design. `--tol` sets the stall tolerance.
    Optimize,
    /// Simulate repeated experiments and compare with the predicted covariance.
    Simulate,
    /// Check the SIC structure of a POVM. `--tol` bounds the residuals
    /// (default 1e-10).
    VerifySic,
    /// List an operator basis.
    Bases {
        #[arg(long)]
        dim: usize,
    },
    /// Build the seven-element qutrit POVM from ε = exp(2πi/7) and verify it.
    DemoQutrit,
    /// Print a bundled design as JSON.
    Export {
        #[arg(value_enum)]
        name: Bundled,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisArg {
    GellMann,
    PauliProduct,
}

impl From<BasisArg> for BasisKind {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::GellMann => BasisKind::GellMann,
            BasisArg::PauliProduct => BasisKind::PauliProduct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bundled {
    Tetrahedron,
    Trine,
    Qutrit7,
    TwoQubitFamily,
}

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Config(String),
    Core(tomodesign::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Config(_) => "config",
            CliError::Core(e) => e.code(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Config(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<tomodesign::Error> for CliError {
    fn from(e: tomodesign::Error) -> Self {
        CliError::Core(e)
    }
}

/// What a command produced: a JSON result, or raw text for CSV output, and
/// whether its checks passed.
pub enum Output {
    Json(serde_json::Value),
    Text(String),
}

pub struct Outcome {
    pub output: Output,
    pub passed: bool,
}

fn write_output(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    let text = match &outcome.output {
        Output::Json(result) => {
            let doc = serde_json::json!({
                "command": &cli.command,
                "config": cli,
                "passed": outcome.passed,
                "result": result,
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
            s.push('\n');
            s
        }
        Output::Text(s) => s.clone(),
    };
    let io_err = |e: io::Error| CliError::Config(format!("cannot write output: {e}"));
    match &cli.output {
        Some(path) => {
            let mut f = File::create(path).map_err(io_err)?;
            f.write_all(text.as_bytes()).map_err(io_err)
        }
        None => io::stdout().write_all(text.as_bytes()).map_err(io_err),
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
        }
    }
    match &cli.command {
        Command::Validate => commands::validate(cli),
        Command::Objective => commands::objective(cli),
        Command::Optimize => commands::optimize(cli),
        Command::Simulate => commands::simulate(cli),
        Command::VerifySic => commands::verify_sic(cli),
        Command::Bases { dim } => commands::bases(cli, *dim),
        Command::DemoQutrit => commands::demo_qutrit(cli),
        Command::Export { name } => commands::export(*name),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|o| write_output(&cli, &o).map(|_| o.passed)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let doc = serde_json::json!({ "error": { "code": e.code(), "message": e.to_string() } });
            eprintln!("{doc}");
            ExitCode::from(e.exit_code())
        }
    }
}
