//! Command-line front end: configuration layering, scenario runs and
//! reproducible output manifests.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{parse_config_text, Preset, RunConfig, Scenario, Source};
pub use error::CliError;
pub use scenario::{execute, replay, Manifest, RunOutput, MANIFEST_FILE};

pub const ERROR_FILE: &str = "error.json";

#[derive(Debug, Parser)]
#[command(name = "oamring", version, about = "OAM transfer in a ring-trapped condensate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override one key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fourier spectrum of the pair potential.
    Potential,
    /// Growth rates over ring radii and modes.
    Spectrum,
    /// Full amplitude dynamics.
    Evolve,
    /// Population rate model.
    Rate,
    /// Radiation pattern of a snapshot or a bunching list.
    Radiate,
    /// Re-run the scenario recorded in a manifest.
    Replay { manifest: PathBuf },
}

fn scenario_of(command: &Command) -> Option<Scenario> {
    match command {
        Command::Potential => Some(Scenario::Potential),
        Command::Spectrum => Some(Scenario::Spectrum),
        Command::Evolve => Some(Scenario::Evolve),
        Command::Rate => Some(Scenario::Rate),
        Command::Radiate => Some(Scenario::Radiate),
        Command::Replay { .. } => None,
    }
}

/// Resolves the configuration of a non-replay invocation.
pub fn resolve(
    scenario: Scenario,
    preset: Option<Preset>,
    config_path: Option<&Path>,
    sets: &[String],
) -> Result<RunConfig, CliError> {
    let file = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    let command_line = sets.iter().map(|s| config::parse_assignment(s)).collect::<Result<Vec<_>, _>>()?;
    RunConfig::resolve(scenario, preset, &file, &command_line)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut scenario = scenario_of(&cli.command).map(Scenario::name);
    let mut hash: Option<String> = None;
    let result = (|| {
        let run = match &cli.command {
            Command::Replay { manifest } => {
                if cli.config.is_some() || cli.preset.is_some() || !cli.set.is_empty() {
                    return Err(CliError::Config("replay takes its configuration from the manifest only".into()));
                }
                let manifest = read_manifest(manifest)?;
                scenario = Some(manifest.scenario.name());
                hash = Some(manifest.manifest_hash.clone());
                replay(&manifest)?
            }
            command => {
                let s = scenario_of(command).expect("not a replay");
                let config = resolve(s, cli.preset, cli.config.as_deref(), &cli.set)?;
                hash = Some(scenario::manifest_hash(&config));
                execute(&config)?
            }
        };
        run.write_to(&cli.out)?;
        Ok(run)
    })();

    let stale = cli.out.join(ERROR_FILE);
    match result {
        Ok(_) => {
            if stale.exists() {
                let _ = std::fs::remove_file(&stale);
            }
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            let record = err.record(scenario, hash.as_deref());
            if std::fs::create_dir_all(&cli.out).is_ok() {
                let mut bytes = serde_json::to_vec_pretty(&record).expect("error record serializes");
                bytes.push(b'\n');
                let _ = std::fs::write(&stale, bytes);
            }
            err.exit_code()
        }
    }
}
