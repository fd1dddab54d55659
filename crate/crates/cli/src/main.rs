//! `qthermo`: run scenario files against the qthermo library.
//!
//! Exit codes: 0 success, 2 schema violation, 3 numerical failure or
//! verification breach, 4 I/O.

mod run;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use scenario::{apply_overrides, parse, validate};

#[derive(Parser)]
#[command(
    name = "qthermo",
    version,
    about = "Quantum statistical mechanics workbench"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (same as the top-level flags).
    Run(RunArgs),
    /// Run a scenario whose kind must be `entropy_protocol`.
    EntropyProtocol(RunArgs),
    /// Randomized inequality checks without a scenario file.
    Verify(VerifyArgs),
    /// Print the parsed scenario (after overrides) as JSON.
    Echo(EchoArgs),
}

#[derive(Args, Default)]
struct Common {
    /// Output directory [default: $QTHERMO_OUT or ./qthermo-out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-path override, e.g. `bath.beta=2` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 4)]
    max_dim: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EchoArgs {
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

enum Failure {
    Schema(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Schema(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

fn read_document(path: &Path) -> Result<Value, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Schema(format!("{}: not valid JSON: {e}", path.display())))
}

fn prepare(
    mut doc: Value,
    seed: Option<u64>,
    set: &[String],
) -> Result<scenario::Scenario, Failure> {
    if let Some(seed) = seed {
        match &mut doc {
            Value::Object(map) => {
                map.insert("seed".into(), json!(seed));
            }
            _ => return Err(Failure::Schema("scenario must be a JSON object".into())),
        }
    }
    apply_overrides(&mut doc, set).map_err(|e| Failure::Schema(e.to_string()))?;
    parse(doc).map_err(|e| Failure::Schema(e.to_string()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn execute(doc: Value, common: &Common, required_kind: Option<&str>) -> Result<(), Failure> {
    let scenario = prepare(doc, common.seed, &common.set)?;
    let kind = scenario.payload.kind();
    if let Some(k) = required_kind {
        if k != kind {
            return Err(Failure::Schema(format!(
                "kind: expected `{k}`, got `{kind}`"
            )));
        }
    }
    let (job, units) = validate(&scenario).map_err(|e| Failure::Schema(e.to_string()))?;
    let start = Instant::now();
    let output =
        run::execute(job, scenario.seed, &units).map_err(|e| Failure::Numerical(e.to_string()))?;
    let runtime = start.elapsed().as_secs_f64();

    let out = common
        .out
        .clone()
        .or_else(|| std::env::var_os("QTHERMO_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qthermo-out"));
    fs::create_dir_all(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let record = json!({"kind": kind, "scenario": scenario, "result": output.result});
    let record = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
    let summary = format!(
        "kind: {kind}\nseed: {}\n{}runtime: {runtime:.3} s\n",
        scenario.seed, output.summary
    );
    write(&out.join("summary.txt"), summary.as_bytes())?;
    write(&out.join("result.json"), record.as_bytes())?;
    if let Some(csv) = &output.csv {
        write(&out.join(format!("{kind}.csv")), csv)?;
    }
    match common.format {
        Format::Text => print!("{summary}"),
        Format::Json => print!("{record}"),
    }
    if output.breach {
        return Err(Failure::Numerical(
            "verification margins breached their tolerances".into(),
        ));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        None | Some(Command::Run(_)) | Some(Command::EntropyProtocol(_)) => {
            let (args, kind) = match cli.command {
                Some(Command::Run(a)) => (a, None),
                Some(Command::EntropyProtocol(a)) => (a, Some("entropy_protocol")),
                _ => (cli.run, None),
            };
            let Some(path) = &args.scenario else {
                return Err(Failure::Schema(
                    "--scenario is required (see --help)".into(),
                ));
            };
            execute(read_document(path)?, &args.common, kind)
        }
        Some(Command::Verify(v)) => {
            let doc = json!({"kind": "verify", "trials": v.trials, "max_dim": v.max_dim});
            execute(doc, &v.common, None)
        }
        Some(Command::Echo(e)) => {
            let scenario = prepare(read_document(&e.scenario)?, e.seed, &e.set)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&scenario).expect("scenario serializes")
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
