//! Command-line front end: flat `key = value` configuration over the solver
//! library, with deterministic JSON and CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;

/// Output format of a run document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum CommandKind {
    SolveGp,
    SolveTf,
    Scattering,
    Coupling,
    Vmc,
    Sweep,
}

/// Resolves the key=value pairs against the command's schema and runs it,
/// returning the rendered document.
pub fn execute(
    kind: CommandKind,
    pairs: &[(String, String)],
    format: Format,
) -> Result<String, CliError> {
    match kind {
        CommandKind::SolveGp => {
            commands::run_solve_gp(&config::SolveGpParams::resolve(pairs)?, format)
        }
        CommandKind::SolveTf => {
            commands::run_solve_tf(&config::SolveTfParams::resolve(pairs)?, format)
        }
        CommandKind::Scattering => {
            commands::run_scattering(&config::ScatteringParams::resolve(pairs)?, format)
        }
        CommandKind::Coupling => {
            commands::run_coupling(&config::CouplingParams::resolve(pairs)?, format)
        }
        CommandKind::Vmc => commands::run_vmc_command(&config::VmcParams::resolve(pairs)?, format),
        CommandKind::Sweep => commands::run_sweep(&config::SweepParams::resolve(pairs)?, format),
    }
}
