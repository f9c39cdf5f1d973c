use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linkdyn::{
    cmd_dot, cmd_normalize, cmd_run, cmd_selftest, cmd_shed_check, CliError, RunOptions,
    ServiceChoice, Workspace, DEFAULT_BOUND,
};

#[derive(Parser)]
#[command(
    name = "linkdyn",
    version,
    about = "Data linkage dynamics with shedding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the workspace thread against a data linkage service
    Run {
        workspace: String,
        #[arg(long, value_enum, default_value = "plain")]
        service: ServiceChoice,
        /// Print the service state after each event
        #[arg(long)]
        states: bool,
        /// Print atom counts after each event
        #[arg(long)]
        garbage: bool,
        /// Step limit; overrides the workspace's [fuel]
        #[arg(long)]
        fuel: Option<usize>,
        /// Exploration bound for shedding decisions
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
    },
    /// Decide whether the first request of the thread may be shed
    ShedCheck {
        workspace: String,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
    },
    /// Normalise a term over the workspace universe
    Normalize { workspace: String, term: String },
    /// Print the initial state as a Graphviz graph
    Dot { workspace: String },
    /// Check the linkage laws on random instances
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        per_law: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Run {
            workspace,
            service,
            states,
            garbage,
            fuel,
            bound,
        } => {
            let ws = Workspace::load(&workspace)?;
            let out = cmd_run(
                &ws,
                &RunOptions {
                    service,
                    states,
                    garbage,
                    fuel,
                    bound,
                },
            )?;
            print!("{}", out.text);
            Ok(if out.trace.fuel_exhausted() { 2 } else { 0 })
        }
        Command::ShedCheck { workspace, bound } => {
            let ws = Workspace::load(&workspace)?;
            let (_, text) = cmd_shed_check(&ws, bound)?;
            print!("{text}");
            Ok(0)
        }
        Command::Normalize { workspace, term } => {
            let ws = Workspace::load(&workspace)?;
            print!("{}", cmd_normalize(&ws, &term)?);
            Ok(0)
        }
        Command::Dot { workspace } => {
            let ws = Workspace::load(&workspace)?;
            print!("{}", cmd_dot(&ws.initial, &ws.universe));
            Ok(0)
        }
        Command::Selftest { seed, per_law } => {
            let (ok, text) = cmd_selftest(seed, per_law);
            print!("{text}");
            Ok(if ok { 0 } else { 1 })
        }
    }
}
