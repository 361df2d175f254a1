//! `qmor`: derive, reduce, simulate, and verify Pauli-expectation models from
//! JSON scenario files, and run bit-flip code recovery cycles.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmor_core::Error;
use thiserror::Error as ThisError;

#[derive(Debug, Parser)]
#[command(
    name = "qmor",
    version,
    about = "Input-output models of open quantum systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the closed equations of motion for the scenario's interest set.
    Derive {
        scenario: PathBuf,
        /// Also write the generator as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Balance the environment block and report Hankel values and error bounds.
    Reduce {
        scenario: PathBuf,
        /// Reduced order; overrides the scenario's `reduction` block.
        #[arg(long)]
        k: Option<usize>,
        /// Write the JSON report here as well as to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Integrate the full model, optionally alongside a reduced one, and write CSV.
    Simulate {
        scenario: PathBuf,
        /// Replace the environment by its order-k balanced truncation.
        #[arg(long = "reduce", value_name = "K")]
        reduce: Option<usize>,
        /// Render the interest variables as an SVG line plot.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated decoherence and recovery of an encoded logical qubit.
    Qec(QecArgs),
    /// Compare the scenario's linear models against direct density-matrix integration.
    Verify {
        scenario: PathBuf,
        /// Maximum allowed deviation (default 1e-6, or 1e-5 from nine qubits up).
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Independent,
    Correlated,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct QecArgs {
    /// Scenario with a `qec` block; flags override its fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "eta-meas")]
    eta_meas: Option<f64>,
    #[arg(long = "eta-rec")]
    eta_rec: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    cycles: Option<usize>,
    /// Initial logical Bloch vector `x,y,z` (default `0,0,1`).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    initial: Option<Vec<f64>>,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report of closure sizes and exponential rates.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0} check(s) exceeded the tolerance")]
    VerifyFailed(usize),
}

impl CliError {
    /// 1 for bad input (schema, files, flags), 2 for numerical failures.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Schema { .. } | Error::ParsePauli(_)) => 1,
            CliError::Io { .. } | CliError::Usage(_) => 1,
            CliError::Core(_) | CliError::VerifyFailed(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Derive { scenario, json } => commands::derive(&scenario, json.as_deref()),
        Command::Reduce {
            scenario,
            k,
            report,
        } => commands::reduce(&scenario, k, report.as_deref()),
        Command::Simulate {
            scenario,
            reduce,
            svg,
            out,
        } => commands::simulate(&scenario, reduce, svg.as_deref(), out.as_deref()),
        Command::Qec(args) => commands::qec(args),
        Command::Verify { scenario, tol } => commands::verify(&scenario, tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
