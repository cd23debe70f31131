use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use cusplab_cli::{run, workers_from_env, Cli, CliError};

fn fail(command: &str, e: &CliError) -> ExitCode {
    eprintln!("cusplab: error: command={command} kind={} message={e}", e.kind());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let workers = match workers_from_env() {
        Ok(w) => w,
        Err(e) => return fail(name, &e),
    };
    if let Some(n) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(name, &CliError::Io(format!("thread pool: {e}")));
        }
    }
    let start = Instant::now();
    match run(&cli) {
        Ok(paths) => {
            for p in &paths {
                println!("{}", p.display());
            }
            eprintln!("cusplab: {name} finished in {:.3} s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => fail(name, &e),
    }
}
