use std::process::ExitCode;

use casimir_cli::{run, threads_from_env, CliError, THREADS_ENV};

fn main() -> ExitCode {
    match setup().and_then(|()| run(std::env::args_os())) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(e)) => {
            // clap renders help, version and usage errors itself.
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn setup() -> Result<(), CliError> {
    let threads = threads_from_env(std::env::var(THREADS_ENV).ok().as_deref())?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("cannot start {n} worker threads: {e}")))?;
    }
    Ok(())
}
