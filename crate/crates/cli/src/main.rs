//! `limlab`: derived limits, windowed constructions and bounded refutations
//! from the command line. Every artifact embeds its config, the library
//! version and a verification summary.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use limlab_core::Error;
use run::{execute, fixture_system, verify, BudgetConfig, RunConfig};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "limlab", version, about = "Exact derived limits of finite inverse systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute lim^n of a system file or fixture.
    Limn(LimnArgs),
    /// Build a windowed construction together with its certificates.
    Construct(ConstructArgs),
    /// Run a bounded refutation.
    Falsify(FalsifyArgs),
    /// Re-check an artifact from scratch.
    Verify(VerifyArgs),
    /// Run the standard experiments and tabulate them.
    Report(Output),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LimnArgs {
    /// System JSON file.
    #[arg(long, conflicts_with = "fixture")]
    input: Option<PathBuf>,
    /// Built-in system: square-without-top, chain3 or truncated-A.
    #[arg(long)]
    fixture: Option<String>,
    /// Degree n.
    #[arg(long, default_value_t = 1)]
    level: usize,
    /// Read the system over another domain (mod2 or integers).
    #[arg(long)]
    domain: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Mitchell,
    FamilyZ,
    FamilyZ2Const,
    FamilyZ2Tree,
    Orderings,
    Hausdorff,
    Forks,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Mitchell => "mitchell",
            Which::FamilyZ => "family-z",
            Which::FamilyZ2Const => "family-z2-const",
            Which::FamilyZ2Tree => "family-z2-tree",
            Which::Orderings => "orderings",
            Which::Hausdorff => "hausdorff",
            Which::Forks => "forks",
        }
    }
}

#[derive(Args)]
struct Shape {
    /// Window N (the chain length B for mitchell).
    #[arg(long)]
    window: Option<usize>,
    /// Number of indices M.
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated increasing points (mitchell); defaults to the evens.
    #[arg(long, value_delimiter = ',')]
    cofseq: Option<Vec<usize>>,
    /// Coefficients for forks and the square: mod2 or integers.
    #[arg(long, default_value = "mod2")]
    domain: String,
    /// Second fork's twist: witness, trivial or zero.
    #[arg(long, default_value = "witness")]
    twist: String,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(value_enum)]
    which: Which,
    #[command(flatten)]
    shape: Shape,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    /// Forced values of trivializers of the Mitchell base cochain.
    Mitchell,
    /// Raw search against the lim¹ witness of the square.
    Square,
    /// Equal-restriction trivializers of two forks.
    Forks,
    /// Replay of the uniformization refutation on the Hausdorff family.
    Hausdorff,
    /// Raw search against a cochain from an artifact (--input).
    Search,
}

impl Target {
    fn name(self) -> &'static str {
        match self {
            Target::Mitchell => "mitchell",
            Target::Square => "square",
            Target::Forks => "forks",
            Target::Hausdorff => "hausdorff",
            Target::Search => "search",
        }
    }
}

#[derive(Args)]
struct FalsifyArgs {
    #[arg(value_enum)]
    target: Target,
    #[command(flatten)]
    shape: Shape,
    /// Largest support per entry.
    #[arg(long, default_value_t = 1)]
    budget_support: usize,
    /// Largest absolute coefficient.
    #[arg(long, default_value_t = 1)]
    budget_coeff: u64,
    /// Largest stabilization bound; defaults to half the window.
    #[arg(long)]
    budget_stab: Option<usize>,
    /// Artifact to search (limn or construct mitchell output).
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Artifact file.
    input: PathBuf,
    #[command(flatten)]
    output: Output,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Cap(_) => 3,
        Error::Infeasible { .. } => 4,
        _ => 2,
    }
}

fn read_json(path: &PathBuf) -> Result<Value, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn limn_config(a: &LimnArgs) -> Result<RunConfig, Error> {
    let (fixture, input) = match (&a.input, &a.fixture) {
        (Some(p), _) => (None, read_json(p)?),
        (None, Some(name)) => (
            Some(name.clone()),
            serde_json::to_value(fixture_system(name)?).expect("systems serialize"),
        ),
        (None, None) => return Err(Error::Malformed("give --input or --fixture".into())),
    };
    Ok(RunConfig {
        command: "limn".into(),
        level: Some(a.level),
        domain: a.domain.clone(),
        fixture,
        input: Some(input),
        ..RunConfig::default()
    })
}

fn construct_config(a: &ConstructArgs) -> RunConfig {
    let s = &a.shape;
    let mut c = RunConfig {
        command: "construct".into(),
        target: Some(a.which.name().into()),
        ..RunConfig::default()
    };
    match a.which {
        Which::Mitchell => {
            c.window = Some(s.window.unwrap_or(16));
            c.cofseq = s.cofseq.clone();
        }
        Which::FamilyZ | Which::FamilyZ2Const | Which::FamilyZ2Tree => {
            c.window = Some(s.window.unwrap_or(32));
            c.length = Some(s.length.unwrap_or(3));
            c.seed = Some(s.seed);
        }
        Which::Orderings | Which::Hausdorff => {
            c.window = Some(s.window.unwrap_or(64));
            c.length = Some(s.length.unwrap_or(12));
            c.seed = Some(s.seed);
        }
        Which::Forks => {
            c.domain = Some(s.domain.clone());
            c.twist = Some(s.twist.clone());
            c.seed = Some(s.seed);
        }
    }
    c
}

fn falsify_config(a: &FalsifyArgs) -> Result<RunConfig, Error> {
    let s = &a.shape;
    let mut c = RunConfig {
        command: "falsify".into(),
        target: Some(a.target.name().into()),
        ..RunConfig::default()
    };
    let budget = |window: usize| BudgetConfig {
        support: a.budget_support,
        coeff: a.budget_coeff,
        stabilization: a.budget_stab.unwrap_or((window / 2).max(1)),
    };
    match a.target {
        Target::Mitchell => {
            c.window = Some(s.window.unwrap_or(16));
            c.cofseq = s.cofseq.clone();
        }
        Target::Square => {
            c.domain = Some(s.domain.clone());
            c.budget = Some(budget(8));
        }
        Target::Forks => {
            c.domain = Some(s.domain.clone());
            c.twist = Some(s.twist.clone());
            c.seed = Some(s.seed);
            c.budget = Some(budget(8));
        }
        Target::Hausdorff => {
            let window = s.window.unwrap_or(64);
            c.window = Some(window);
            c.length = Some(s.length.unwrap_or(12));
            c.seed = Some(s.seed);
            c.budget = Some(budget(window));
        }
        Target::Search => {
            let path = a.input.as_ref().ok_or_else(|| Error::Malformed("search needs --input".into()))?;
            c.input = Some(read_json(path)?);
            c.budget = Some(budget(8));
        }
    }
    Ok(c)
}

/// Leaf paths and values in key order.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&join(k), x, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&join(&i.to_string()), x, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn render(artifact: &Value, format: Format) -> Result<String, Error> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(artifact).expect("json values serialize") + "\n"),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", artifact, &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Malformed(e.to_string());
            w.write_record(["path", "value"]).map_err(io)?;
            for (k, v) in rows {
                w.write_record([k, v]).map_err(io)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?)
                .map_err(|e| Error::Malformed(e.to_string()))
        }
    }
}

fn emit(artifact: &Value, output: &Output) -> Result<(), Error> {
    let text = render(artifact, output.format)?;
    match &output.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Malformed(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("LIMLAB_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Malformed(format!("LIMLAB_THREADS={v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Malformed(e.to_string()))?;
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<u8, Error> {
    configure_threads()?;
    let (config, output) = match &cli.command {
        Command::Limn(a) => (limn_config(a)?, &a.output),
        Command::Construct(a) => (construct_config(a), &a.output),
        Command::Falsify(a) => (falsify_config(a)?, &a.output),
        Command::Report(o) => (
            RunConfig {
                command: "report".into(),
                ..RunConfig::default()
            },
            o,
        ),
        Command::Verify(a) => {
            let outcome = verify(&read_json(&a.input)?)?;
            let config = RunConfig {
                command: "verify".into(),
                ..RunConfig::default()
            };
            emit(&outcome.artifact(&config), &a.output)?;
            return Ok(if outcome.passed { 0 } else { 1 });
        }
    };
    let outcome = execute(&config)?;
    emit(&outcome.artifact(&config), output)?;
    // a falsification report is a result whether or not something was found
    let failed = !outcome.passed;
    Ok(u8::from(failed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("limlab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
