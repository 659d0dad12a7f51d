use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use rbar_cli::{parse_job, run, EXIT_INVALID};

/// Run one verification or integration job described by a JSON document.
#[derive(Parser)]
#[command(name = "rbar", version)]
#[command(group(ArgGroup::new("input").required(true).args(["job", "stdin"])))]
struct Args {
    /// Path to the job file.
    #[arg(long)]
    job: Option<PathBuf>,
    /// Read the job from standard input.
    #[arg(long)]
    stdin: bool,
    /// Seed for randomized commands; overrides any seed in the job.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit plot data as CSV instead of the JSON report.
    #[arg(long)]
    csv: bool,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("rbar: {msg}");
    ExitCode::from(EXIT_INVALID as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match (&args.job, args.stdin) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display())),
        (None, _) => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map(|_| s)
                .map_err(|e| e.to_string())
        }
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let job = match parse_job(&text) {
        Ok(j) => j,
        Err(e) => return fail(e),
    };
    let outcome = run(&job, args.seed, args.csv);
    let target = args.out.or_else(|| job.output.as_ref().map(PathBuf::from));
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &outcome.body) {
                return fail(format!("{}: {e}", path.display()));
            }
        }
        None => print!("{}", outcome.body),
    }
    if outcome.exit_code == EXIT_INVALID {
        eprintln!("rbar: invalid input (see error in output)");
    }
    ExitCode::from(outcome.exit_code as u8)
}
