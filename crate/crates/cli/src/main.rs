//! `opspace`: evaluate norms and run verification suites from JSON files.

mod config;
mod error;
mod report;
mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{debug, info};
use opspace::{LevelElement, OSpace};
use serde::Serialize;

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "opspace", version, about = "Operator space norms and verification suites")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    level_cap: Option<usize>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Norm interval of an element of a space.
    Norm {
        space: PathBuf,
        element: PathBuf,
        /// Expected matrix level of the element.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Run a verification suite on bundled or given inputs.
    Verify {
        suite: String,
        inputs: Vec<PathBuf>,
    },
    /// Aggregate a directory of verification reports.
    Report { dir: PathBuf },
}

pub(crate) fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn emit(out: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    match out {
        Some(p) => write_atomic(p, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

#[derive(Serialize)]
struct NormOutput {
    lo: f64,
    hi: f64,
    status: opspace::Status,
    provenance: Provenance,
}

#[derive(Serialize)]
struct Provenance {
    space: &'static str,
    dim: usize,
    level: usize,
}

fn cmd_norm(space: &Path, element: &Path, level: Option<usize>, out: Option<&Path>) -> Result<i32, CliError> {
    let x = OSpace::from_json(&read(space)?).map_err(|e| match CliError::from(e) {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", space.display())),
        other => other,
    })?;
    let e: LevelElement = parse(element)?;
    if let Some(n) = level {
        if n != e.level() {
            return Err(CliError::Shape(format!("element has level {}, expected {n}", e.level())));
        }
    }
    let v = x.level_norm(&e)?;
    debug!("norm of a level-{} element in a {} space: {v:?}", e.level(), x.kind());
    emit(
        out,
        &NormOutput {
            lo: v.lo,
            hi: v.hi,
            status: v.status,
            provenance: Provenance {
                space: x.kind(),
                dim: x.dim(),
                level: e.level(),
            },
        },
    )?;
    Ok(0)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(l) = cli.level_cap {
        cfg.budgets.level_cap = l;
    }
    if let Some(d) = cli.depth {
        cfg.budgets.depth = d;
    }
    cfg.validate()?;
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    match cli.command {
        Command::Norm { space, element, level } => cmd_norm(&space, &element, level, out.as_deref()),
        Command::Verify { suite, inputs } => {
            info!("running suite {suite} with seed {}", cfg.seed);
            let rep = suites::run_suite(&suite, &inputs, &cfg, cli.depth)?;
            emit(out.as_deref(), &rep)?;
            Ok(if rep.summary.fail == 0 { 0 } else { 1 })
        }
        Command::Report { dir } => {
            let agg = report::aggregate(&dir)?;
            emit(out.as_deref(), &agg)?;
            eprint!("{}", report::summary_text(&agg));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("OPSPACE_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("opspace: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
