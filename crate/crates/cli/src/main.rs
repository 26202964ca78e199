use clap::{Parser, Subcommand};
use recognet::{
    cmd_classify, cmd_compare, cmd_infer, cmd_validate, render_classify, render_compare,
    render_infer, render_validate, size_cap_from_env, CliError, Format, Solver, SolverArg,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Inference over discrete Bayesian nets in the BNET text format.
#[derive(Parser)]
#[command(name = "recognet", version, about)]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a net file, reporting its structure class
    Validate { file: PathBuf },
    /// Print the structure class of a net file
    Classify { file: PathBuf },
    /// Run a solver and report posterior beliefs
    Infer {
        file: PathBuf,
        /// exact, pearl, eigen, lambda-only, or auto (pick by structure)
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver: SolverArg,
        /// Restrict the report to these nodes (repeatable)
        #[arg(long = "query")]
        query: Vec<String>,
    },
    /// Run several solvers and tabulate per-node L1 divergences
    Compare {
        file: PathBuf,
        /// Comma-separated solver list, e.g. eigen,exact
        #[arg(long, value_delimiter = ',', required = true)]
        solvers: Vec<Solver>,
    },
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let cap = size_cap_from_env()?;
    match &cli.command {
        Command::Validate { file } => Ok(render_validate(&cmd_validate(file)?, cli.format)),
        Command::Classify { file } => Ok(render_classify(cmd_classify(file)?, cli.format)),
        Command::Infer {
            file,
            solver,
            query,
        } => Ok(render_infer(
            &cmd_infer(file, *solver, query, cap)?,
            cli.format,
        )),
        Command::Compare { file, solvers } => Ok(render_compare(
            &cmd_compare(file, solvers, cap)?,
            cli.format,
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error {}: {}", e.code(), e);
            ExitCode::FAILURE
        }
    }
}
