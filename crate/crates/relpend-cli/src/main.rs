//! Command-line front end: parses the run configuration, dispatches to the
//! named command from the registry, writes CSV/JSON artifacts plus a hashed
//! manifest, and maps the outcome onto the exit-code contract
//! (0 = pass, 1 = fail verdict, 2 = execution error).

mod artifacts;
mod commands;
mod config;
mod error;
mod registry;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use artifacts::ArtifactWriter;
use config::parse_config;
use error::CliError;
use registry::{command_help, find, full_help, nearest, registry, RunContext, Verdict};

#[derive(Parser)]
#[command(name = "relpend", disable_help_subcommand = true)]
struct Cli {
    /// Command name, `run` (take it from the config), `list`, or `help`.
    command: Option<String>,

    /// Topic for `help <command>`.
    topic: Option<String>,

    /// Run configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Worker threads for the grid sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Seed for multistart shuffling only; results stay deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn dispatch(cli: &Cli) -> Result<Verdict, CliError> {
    let name = cli.command.as_deref().expect("checked by caller");
    let override_command = if name == "run" { None } else { Some(name) };
    if let Some(name) = override_command {
        if find(name).is_none() {
            return Err(CliError::Usage(format!(
                "unknown command '{name}'; did you mean '{}'? (see `relpend list`)",
                nearest(name)
            )));
        }
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("missing --config <file>".into()))?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = parse_config(&text, override_command, |name| find(name).map(|c| c.params()))?;
    let command = find(&cfg.command).expect("validated by parse_config");

    let model_text = std::fs::read_to_string(&cfg.model_path)
        .map_err(|e| CliError::Io(format!("cannot read model {}: {e}", cfg.model_path.display())))?;
    let spec = relpend::model::parse_model(&model_text)?;

    if let Some(n) = cli.threads {
        // Ignore the error when a pool already exists (tests share a process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let mut out = ArtifactWriter::new(cli.out.clone())?;
    let mut ctx = RunContext { spec: &spec, cfg: &cfg, out: &mut out, seed: cli.seed };
    let verdict = command.run(&mut ctx)?;
    let dir = out.finish(&cfg.command, &cfg.model_path.display().to_string(), verdict.label())?;
    match &verdict {
        Verdict::Pass => println!("PASS {} — artifacts in {}", cfg.command, dir.display()),
        Verdict::Report => println!("REPORT {} — artifacts in {}", cfg.command, dir.display()),
        Verdict::Fail(reason) => println!("FAIL {} — {reason} — artifacts in {}", cfg.command, dir.display()),
    }
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command.as_deref() {
        None | Some("list") => {
            print!("{}", full_help());
            return ExitCode::SUCCESS;
        }
        Some("help") => {
            match cli.topic.as_deref().and_then(find) {
                Some(cmd) => print!("{}", command_help(cmd)),
                None => {
                    if let Some(topic) = &cli.topic {
                        if registry().iter().all(|c| c.name() != topic) {
                            eprintln!("unknown command '{topic}'; did you mean '{}'?", nearest(topic));
                            return ExitCode::from(2);
                        }
                    }
                    print!("{}", full_help());
                }
            }
            return ExitCode::SUCCESS;
        }
        _ => {}
    }
    match dispatch(&cli) {
        Ok(verdict) => ExitCode::from(verdict.exit_code() as u8),
        Err(err) => {
            eprintln!("error: {err}");
            // Machine-parsable trailer for harness consumption.
            eprintln!(
                "{}",
                serde_json::json!({ "error": err.to_string(), "kind": err.kind(), "exit": 2 })
            );
            ExitCode::from(2)
        }
    }
}
