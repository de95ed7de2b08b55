//! Command-line front end: special-function evaluation (`eval`), flow
//! integration with invariant columns (`flow`), and the verification suites
//! (`check`). All randomized suites are deterministic given the seed; CSV
//! and JSON outputs are byte-stable.

mod cmd_check;
mod cmd_eval;
mod cmd_flow;
mod util;

use clap::{Parser, Subcommand};

pub use util::{parse_complex, write_output};

/// Exit codes: 0 success, 2 argument/parse error, 3 domain error or step
/// underflow, 4 domain escape, 5 check suite failure.
pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_ESCAPE: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "theta-flows",
    about = "Theta-constant flows: special functions, modular dynamical systems, and their verification suites",
    version
)]
pub struct Cli {
    /// Seed for all randomized suites.
    #[arg(long, global = true, default_value_t = 0xD1CE)]
    pub seed: u64,
    /// Relative tolerance of the integrator.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rtol: f64,
    /// Absolute tolerance of the integrator.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub atol: f64,
    /// Output format for reports.
    #[arg(long, global = true, default_value = "json")]
    pub format: String,
    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Sampling region bounds for tau.
    #[arg(long, global = true, default_value_t = -1.0, allow_hyphen_values = true)]
    pub re_min: f64,
    #[arg(long, global = true, default_value_t = 1.0, allow_hyphen_values = true)]
    pub re_max: f64,
    #[arg(long, global = true, default_value_t = 0.4)]
    pub im_min: f64,
    #[arg(long, global = true, default_value_t = 3.0)]
    pub im_max: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate special functions.
    Eval {
        #[command(subcommand)]
        what: cmd_eval::EvalCmd,
    },
    /// Integrate a system along a straight segment and emit a CSV
    /// trajectory with invariant columns.
    Flow(cmd_flow::FlowArgs),
    /// Run a verification suite and emit a JSON (or CSV) report.
    Check(cmd_check::CheckArgs),
}

/// Parses the argument vector and runs the selected command. Never panics
/// on malformed input; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own usage text; argument errors map to 2
            let _ = e.print();
            return EXIT_PARSE;
        }
    };
    let outcome = match &cli.command {
        Command::Eval { what } => cmd_eval::run(&cli, what),
        Command::Flow(f) => cmd_flow::run(&cli, f),
        Command::Check(c) => cmd_check::run(&cli, c),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            util::exit_code_for(&e)
        }
    }
}
