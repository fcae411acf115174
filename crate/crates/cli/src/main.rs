mod args;
mod commands;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed;
    let run = match &cli.command {
        Command::Factorize(a) => commands::cmd_factorize(a, seed),
        Command::EvalSweep(a) => commands::cmd_eval_sweep(a, seed),
        Command::ImportancePlotData(a) => commands::cmd_importance_plot_data(a, seed),
        Command::Rtn(a) => commands::cmd_rtn(a, seed),
        Command::Allocate(a) => commands::cmd_allocate(a, seed),
        Command::Bench(a) => commands::cmd_bench(a, seed),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
