//! Job runner behind the `rbar` binary: one JSON job in, one JSON document out.

mod commands;
pub mod output;
mod payload;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use payload::default_basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    FreqIndep,
    FreqJoin,
    Project,
    Transition,
    VerifyConsistency,
    Integrate,
    InnerProduct,
    IsometryCheck,
    JonsCheck,
    Holonomy,
    CircleLemma,
    AlVerify,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: Command,
    #[serde(default = "empty_object")]
    pub payload: Value,
    pub seed: Option<u64>,
    /// Output path; stdout when absent.
    pub output: Option<String>,
}

fn empty_object() -> Value {
    json!({})
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(rbar_core::Error),
}

impl From<rbar_core::Error> for CliError {
    fn from(e: rbar_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(rbar_core::Error::NonConvergence { .. }) => EXIT_FAIL,
            _ => EXIT_INVALID,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Parses a job document, reporting the failing field on schema errors.
pub fn parse_job(text: &str) -> Result<JobSpec, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Input(format!("job.{path}: {}", e.into_inner()))
    })
}

pub struct Outcome {
    pub exit_code: i32,
    pub body: String,
}

#[derive(Serialize)]
struct Document<'a> {
    command: Command,
    inputs_echo: &'a Value,
    result: Value,
    diagnostics: Value,
    seed: u64,
}

/// Runs a job. `seed_override` (the `--seed` flag) beats `job.seed`, which beats
/// a `seed` inside the payload; the default is 0.
pub fn run(job: &JobSpec, seed_override: Option<u64>, csv: bool) -> Outcome {
    let mut payload = job.payload.clone();
    let payload_seed = match payload.as_object_mut().and_then(|m| m.remove("seed")) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| CliError::Input("payload.seed: expected a non-negative integer".into())),
    };
    let seed = payload_seed.map(|ps| seed_override.or(job.seed).or(ps).unwrap_or(0));
    let outcome = seed.and_then(|seed| commands::dispatch(job.command, payload.clone(), seed).map(|out| (seed, out)));
    match outcome {
        Ok((seed, out)) => {
            let exit_code = match out.verdict {
                Some(s) if !s.passed() => EXIT_FAIL,
                _ => EXIT_OK,
            };
            if csv {
                return match out.csv {
                    Some(body) => Outcome { exit_code, body },
                    None => error_outcome(
                        job,
                        CliError::Input(format!("--csv is not supported for {:?}", job.command)),
                    ),
                };
            }
            let doc = Document {
                command: job.command,
                inputs_echo: &job.payload,
                result: out.result,
                diagnostics: out.diagnostics,
                seed,
            };
            Outcome {
                exit_code,
                body: output::to_json(&doc),
            }
        }
        Err(e) => error_outcome(job, e),
    }
}

fn error_outcome(job: &JobSpec, e: CliError) -> Outcome {
    let kind = match e.exit_code() {
        EXIT_FAIL => "failure",
        _ => "invalid_input",
    };
    Outcome {
        exit_code: e.exit_code(),
        body: output::to_json(&json!({
            "command": job.command,
            "inputs_echo": job.payload,
            "error": { "kind": kind, "message": e.to_string() },
        })),
    }
}
