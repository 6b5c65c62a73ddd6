use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use gptrap_cli::config::{parse_override, read_config_file};
use gptrap_cli::{execute, CliError, CommandKind, Format};

#[derive(Parser)]
#[command(
    name = "gptrap",
    version,
    about = "Trapped dilute Bose gas toolkit: mean-field and strong-coupling solvers, \
             two-body scattering, Monte Carlo energy bounds, large-N sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the mean-field energy functional on a radial grid.
    SolveGp(RunArgs),
    /// Solve the strong-coupling density functional.
    SolveTf(RunArgs),
    /// Integrate the zero-energy pair problem and fit the scattering length.
    Scattering(RunArgs),
    /// Convert a scattering length into the coupling constant.
    Coupling(RunArgs),
    /// Monte Carlo upper bound from a pair-correlated trial state.
    Vmc(RunArgs),
    /// Sweep the mean-field to density-functional energy ratio over the
    /// combined coupling N g.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file with one key = value per line.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the document here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Document format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Direct overrides, applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::SolveGp(args) => (CommandKind::SolveGp, args),
        Command::SolveTf(args) => (CommandKind::SolveTf, args),
        Command::Scattering(args) => (CommandKind::Scattering, args),
        Command::Coupling(args) => (CommandKind::Coupling, args),
        Command::Vmc(args) => (CommandKind::Vmc, args),
        Command::Sweep(args) => (CommandKind::Sweep, args),
    };
    if let Err(err) = run(kind, args) {
        eprintln!("{}", err.to_json());
        std::process::exit(err.exit_code());
    }
}

fn run(kind: CommandKind, args: &RunArgs) -> Result<(), CliError> {
    let mut pairs = Vec::new();
    if let Some(path) = &args.config {
        pairs.extend(read_config_file(path)?);
    }
    for item in &args.set {
        pairs.push(parse_override(item)?);
    }
    let document = execute(kind, &pairs, args.format)?;
    match &args.output {
        None => {
            print!("{document}");
            Ok(())
        }
        Some(path) => std::fs::write(path, document)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display()))),
    }
}
