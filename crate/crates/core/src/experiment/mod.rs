//! Experiment configuration, the commands behind the CLI, and artifact emission.
//!
//! A run is described by an [`ExperimentConfig`]: a JSON object whose
//! `"command"` field selects the experiment and whose remaining fields are
//! that command's flags. Flags given on the command line override the file.

mod commands;
mod output;

use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, FromArgMatches, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use commands::{
    fooling_demo, fooling_holds, probe_queries, shipped_parity4, simulate_queries, AdversaryArgs, ChannelKind,
    CompileArgs, DemoArgs, DlArgs, DlOracleKind, FixedQueries, HalfspaceArgs, JlArgs, LearnerKind, MeanArgs,
    SeparationArgs, SeparationRow, PARITY4_JSON,
};
pub use output::{csv_table, json, Artifacts, CheckResult, CSV_VERSION};

use crate::{Error, Result};

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "LDPSQ_OUT_DIR";

pub const DEFAULT_OUT_DIR: &str = "ldpsq-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    /// Learn a margin halfspace with the label-non-adaptive learner.
    LearnHalfspace(HalfspaceArgs),
    /// Learn a decision list with the interactive baseline.
    LearnDl(DlArgs),
    /// Estimate fixed statistical queries through a simulated channel.
    EstimateMean(MeanArgs),
    /// Search for a distribution on which a random hypothesis set fails to cover a class.
    Adversary(AdversaryArgs),
    /// Run the negation-fooling demonstration.
    AdversaryDemo(DemoArgs),
    /// Measure margin preservation under the random projection.
    JlCheck(JlArgs),
    /// Compile a learner to a simulated protocol and report its traffic.
    CompileReport(CompileArgs),
    /// Interactive versus label-non-adaptive learning, side by side.
    Separation(SeparationArgs),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::LearnHalfspace(_) => "learn-halfspace",
            Self::LearnDl(_) => "learn-dl",
            Self::EstimateMean(_) => "estimate-mean",
            Self::Adversary(_) => "adversary",
            Self::AdversaryDemo(_) => "adversary-demo",
            Self::JlCheck(_) => "jl-check",
            Self::CompileReport(_) => "compile-report",
            Self::Separation(_) => "separation",
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn run(&self) -> Result<Artifacts> {
        match self {
            Self::LearnHalfspace(a) => a.run(),
            Self::LearnDl(a) => a.run(),
            Self::EstimateMean(a) => a.run(),
            Self::Adversary(a) => a.run(),
            Self::AdversaryDemo(a) => a.run(),
            Self::JlCheck(a) => a.run(),
            Self::CompileReport(a) => a.run(),
            Self::Separation(a) => a.run(),
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum CliCommand {
    #[command(flatten)]
    Experiment(ExperimentConfig),
    /// Run the experiment described by a config file.
    Run,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "ldpsq", version, about = "Learning through statistical queries under local privacy and one-bit communication")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    /// JSON config; command-line flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $LDPSQ_OUT_DIR, else ./ldpsq-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exit with status 3 if the command's acceptance check fails.
    #[arg(long, global = true)]
    pub check: bool,
}

/// Merges a config file under the flags that were given explicitly.
fn overlay(file: Value, cli: Value, explicit: &[String]) -> Value {
    let (Value::Object(mut base), Value::Object(flags)) = (file, cli) else {
        unreachable!("configs serialize to objects")
    };
    for id in explicit {
        if let Some(v) = flags.get(id) {
            base.insert(id.clone(), v.clone());
        }
    }
    Value::Object(base)
}

/// Resolves the experiment to run from parsed arguments and an optional config file.
pub fn resolve(matches: &ArgMatches, config_file: Option<&str>) -> Result<ExperimentConfig> {
    let cli = Cli::from_arg_matches(matches).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let Some((name, sub)) = matches.subcommand() else {
        return Err(Error::InvalidInput("no command given".into()));
    };
    match (cli.command, config_file) {
        (CliCommand::Run, Some(text)) => ExperimentConfig::from_json(text),
        (CliCommand::Run, None) => Err(Error::InvalidInput("run needs --config <file>".into())),
        (CliCommand::Experiment(flags), None) => Ok(flags),
        (CliCommand::Experiment(flags), Some(text)) => {
            let mut file: Value = serde_json::from_str(text)?;
            match file.get("command").and_then(Value::as_str) {
                Some(c) if c != name => {
                    return Err(Error::InvalidInput(format!("config is for {c:?}, not {name:?}")));
                }
                Some(_) => {}
                None => {
                    file.as_object_mut()
                        .ok_or_else(|| Error::InvalidInput("config must be a JSON object".into()))?
                        .insert("command".into(), Value::String(name.into()));
                }
            }
            let explicit: Vec<String> = sub
                .ids()
                .map(|id| id.as_str().to_string())
                .filter(|id| sub.value_source(id) == Some(ValueSource::CommandLine))
                .collect();
            let merged = overlay(file, serde_json::to_value(&flags)?, &explicit);
            Ok(serde_json::from_value(merged)?)
        }
    }
}

/// `--out`, else the environment override, else the default directory.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn parse(args: &[&str]) -> ArgMatches {
        Cli::command().try_get_matches_from(args).unwrap()
    }

    #[test]
    fn flags_override_file_fields() {
        let m = parse(&["ldpsq", "learn-dl", "--d", "5"]);
        let file = r#"{"command":"learn-dl","d":7,"alpha":0.2,"trials":3}"#;
        let ExperimentConfig::LearnDl(a) = resolve(&m, Some(file)).unwrap() else { panic!() };
        assert_eq!((a.d, a.alpha, a.trials, a.len), (5, 0.2, 3, 5));
    }

    #[test]
    fn run_uses_file_command() {
        let m = parse(&["ldpsq", "run"]);
        let cfg = resolve(&m, Some(r#"{"command":"jl-check","trials":2}"#)).unwrap();
        assert_eq!(cfg.name(), "jl-check");
        assert!(resolve(&m, None).is_err());
    }

    #[test]
    fn schema_violations_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"command":"learn-dl","bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command":"nope"}"#).is_err());
        let m = parse(&["ldpsq", "learn-dl"]);
        assert!(resolve(&m, Some(r#"{"command":"jl-check"}"#)).is_err());
    }

    #[test]
    fn config_round_trips_with_defaults() {
        let c = ExperimentConfig::Separation(SeparationArgs::default());
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.starts_with(r#"{"command":"separation""#));
        assert_eq!(ExperimentConfig::from_json(&s).unwrap(), c);
        let sparse = ExperimentConfig::from_json(r#"{"command":"separation"}"#).unwrap();
        assert_eq!(sparse, c);
    }

    #[test]
    fn shipped_example_is_the_parity_square() {
        let src = shipped_parity4().unwrap();
        let built = crate::lowerbound::parity_square().unwrap();
        assert_eq!(src.support(), built.support());
        assert_eq!(src.labels(), built.labels());
    }

    #[test]
    fn output_dir_prefers_flag() {
        assert_eq!(output_dir(Some(Path::new("x"))), PathBuf::from("x"));
    }
}
