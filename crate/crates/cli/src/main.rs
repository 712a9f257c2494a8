mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "invalg", version, about = "Generation of algebras with unitary involution: closures, witnesses, census, bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Write the JSON report (with run manifest) to PATH; `-` for stdout.
    #[arg(long, value_name = "PATH", global = true)]
    #[serde(skip)]
    json: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Check the closure dimension of every explicit generator.
    VerifyGenerators(VerifyArgs),
    /// Evaluate the matrix-unit identities for all admissible indices.
    Identities(IdentitiesArgs),
    /// Certify why a tuple fails to generate.
    Classify(ClassifyArgs),
    /// Count non-generating tuples over a finite field.
    Census(CensusArgs),
    /// Closed-form dimensions of the non-generating locus and its components.
    Dims(DimsArgs),
    /// Generator-count bounds.
    Bounds(BoundsArgs),
    /// Dimension of the derivation algebra.
    Derivations(DerivationsArgs),
    /// Validate an algebra file and print its fingerprint.
    ValidateAlgebra(ValidateArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "Q")]
    pub field: String,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct IdentitiesArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "Q")]
    pub field: String,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub field: String,
    /// Tuple file (JSON with `n`, `field` and `pairs`).
    #[arg(long)]
    pub tuple: PathBuf,
    #[arg(long)]
    pub all_witnesses: bool,
    /// Largest extension degree searched for invariant subspaces.
    #[arg(long)]
    pub max_ext: Option<u32>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Args, Debug, Serialize)]
pub struct CensusArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub q: u64,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub classify: bool,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    #[serde(skip)]
    pub checkpoint: Option<PathBuf>,
    /// Exhaustive-mode tuple budget; defaults to $INVALG_BUDGET or 10^8.
    #[arg(long)]
    pub budget: Option<u128>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct DimsArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub r: u64,
    /// Characteristic of the base field (affects exactness flags only).
    #[arg(long = "char", default_value_t = 0)]
    pub characteristic: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub d: Option<u64>,
    /// Emit the grid 2 ≤ n ≤ NMAX, 0 ≤ d ≤ DMAX.
    #[arg(long, num_args = 2, value_names = ["NMAX", "DMAX"])]
    pub table: Option<Vec<u64>>,
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct DerivationsArgs {
    /// Degree of the unitary model (ignored with --algebra).
    #[arg(long, required_unless_present = "algebra")]
    pub n: Option<usize>,
    #[arg(long, default_value = "Q")]
    pub field: String,
    #[arg(long)]
    pub algebra: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    pub file: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

/// Why a subcommand stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit 2.
    Usage(String),
    /// An invariant or expected value failed: exit 1.
    Violation { message: String, counterexample: Value },
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// What a subcommand produced.
pub struct Report {
    pub result: Value,
    pub text: String,
    pub field: Option<String>,
    pub seed: Option<u64>,
    /// Set when a check failed after the report was built.
    pub violation: Option<(String, Value)>,
}

impl Report {
    pub fn new(result: impl Serialize, text: String) -> Report {
        Report { result: serde_json::to_value(result).expect("serializable"), text, field: None, seed: None, violation: None }
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    params: Value,
    version: &'static str,
    field: Option<String>,
    seed: Option<u64>,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    /// sha256 of the canonical result with wall-clock fields removed.
    output_digest: String,
}

const VOLATILE: [&str; 2] = ["elapsed_secs", "workers"];

fn strip_volatile(v: &Value) -> Value {
    match v {
        Value::Object(m) => {
            Value::Object(m.iter().filter(|(k, _)| !VOLATILE.contains(&k.as_str())).map(|(k, v)| (k.clone(), strip_volatile(v))).collect())
        }
        Value::Array(a) => Value::Array(a.iter().map(strip_volatile).collect()),
        x => x.clone(),
    }
}

pub fn digest(result: &Value) -> String {
    let bytes = serde_json::to_vec(&strip_volatile(result)).expect("serializable");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let started = now_ms();
    let params = serde_json::to_value(&cli.command).expect("serializable");
    let name = params["subcommand"].as_str().unwrap_or_default().to_string();
    let (json, outcome) = match &cli.command {
        Command::VerifyGenerators(a) => (&a.common.json, commands::verify_generators(a)),
        Command::Identities(a) => (&a.common.json, commands::identities(a)),
        Command::Classify(a) => (&a.common.json, commands::classify(a)),
        Command::Census(a) => (&a.common.json, commands::census(a)),
        Command::Dims(a) => (&a.common.json, commands::dims(a)),
        Command::Bounds(a) => (&a.common.json, commands::bounds(a)),
        Command::Derivations(a) => (&a.common.json, commands::derivations(a)),
        Command::ValidateAlgebra(a) => (&a.common.json, commands::validate_algebra(a)),
    };
    let report = match outcome {
        Ok(r) => r,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Violation { message, counterexample }) => {
            eprintln!("violation: {message}");
            eprintln!("{}", serde_json::to_string(&counterexample).expect("serializable"));
            return ExitCode::from(1);
        }
    };
    let to_stdout = json.as_deref().is_some_and(|p| p.as_os_str() == "-");
    if !to_stdout {
        print!("{}", report.text);
    }
    if let Some(path) = json {
        let mut params = params.clone();
        if let Value::Object(m) = &mut params {
            m.remove("subcommand");
        }
        let manifest = RunManifest {
            subcommand: &name,
            params,
            version: env!("CARGO_PKG_VERSION"),
            field: report.field.clone(),
            seed: report.seed,
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
            output_digest: digest(&report.result),
        };
        let doc = json!({ "schema_version": SCHEMA_VERSION, "manifest": manifest, "result": report.result });
        let text = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
        if to_stdout {
            print!("{text}");
        } else if let Err(e) = std::fs::write(path, text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if let Some((message, counterexample)) = report.violation {
        eprintln!("violation: {message}");
        eprintln!("{}", serde_json::to_string(&counterexample).expect("serializable"));
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
