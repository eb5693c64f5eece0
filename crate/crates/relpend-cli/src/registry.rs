//! The command registry: every operation of the laboratory sits behind the
//! [`Command`] trait, registered under its CLI name and selected at runtime
//! from the command line or the config file.

use relpend::model::ModelSpec;

use crate::artifacts::ArtifactWriter;
use crate::config::{ParamSpec, RunConfig};
use crate::error::CliError;

/// Outcome of a command run, mapped onto the exit-code contract:
/// pass -> 0, fail -> 1 (execution errors -> 2).
pub enum Verdict {
    Pass,
    Fail(String),
    /// Report-only commands with no pass/fail semantics.
    Report,
}

impl Verdict {
    pub fn label(&self) -> &str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail(_) => "FAIL",
            Verdict::Report => "REPORT",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Report => 0,
            Verdict::Fail(_) => 1,
        }
    }
}

pub struct RunContext<'a> {
    pub spec: &'a ModelSpec,
    pub cfg: &'a RunConfig,
    pub out: &'a mut ArtifactWriter,
    pub seed: u64,
}

pub trait Command: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn params(&self) -> &'static [ParamSpec];
    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError>;
}

/// All registered commands, in help order.
pub fn registry() -> &'static [&'static dyn Command] {
    use crate::commands::*;
    static REGISTRY: &[&dyn Command] = &[
        &Simulate,
        &Poincare,
        &FactorCheck,
        &GenfunSurface,
        &Mather,
        &Hull,
        &Boundedness,
        &Escape,
        &Subharmonic,
        &Quasiperiodic,
        &Expansion,
        &MoserReport,
    ];
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static dyn Command> {
    registry().iter().copied().find(|c| c.name() == name)
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Closest registered command name, for typo suggestions.
pub fn nearest(name: &str) -> &'static str {
    registry()
        .iter()
        .min_by_key(|c| edit_distance(name, c.name()))
        .map(|c| c.name())
        .unwrap_or("simulate")
}

/// Full help: every command with its parameter schema.
pub fn full_help() -> String {
    let mut out = String::from(
        "relpend — numerical laboratory for the periodically forced relativistic pendulum\n\n\
         usage: relpend <command> --config <file> [--out <dir>] [--threads <n>] [--seed <n>]\n\
         \u{20}      relpend run --config <file>        (command taken from the config file)\n\
         \u{20}      relpend help <command>             (one command's schema)\n\n\
         The config file is line-oriented `key = value` text. It must name a model file\n\
         (`model = path`) and may name the command (`command = <name>`). Unknown keys are\n\
         rejected. Models use the grammar documented in the README.\n\ncommands:\n",
    );
    for cmd in registry() {
        out.push_str(&format!("  {:<14} {}\n", cmd.name(), cmd.summary()));
    }
    out.push_str("\nrun `relpend help <command>` for that command's parameters\n");
    out
}

/// One command's schema.
pub fn command_help(cmd: &dyn Command) -> String {
    let mut out = format!("{} — {}\n\nparameters:\n", cmd.name(), cmd.summary());
    out.push_str("  model (Str, required) — path to the model file\n");
    for p in cmd.params() {
        out.push_str(&format!("  {}\n", p.describe()));
    }
    out
}
