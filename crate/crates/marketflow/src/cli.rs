//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the input fails validation or the model
//! rejects it, 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use marketflow_core::simulate;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::export::export;
use crate::report::run_fit;
use crate::scenario::{load_scenario_file, parse_override, LoadedScenario, Strictness};
use crate::trajectory::{read_observations, write_trajectory, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "marketflow",
    version,
    about = "Simulate and calibrate market-share flow scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Input {
    /// Scenario file
    scenario: PathBuf,
    /// Override a scenario field before validation, e.g. `behavior.wta=1.0`
    #[arg(long = "set", value_name = "PATH=VALUE", value_parser = parse_override)]
    overrides: Vec<(String, Value)>,
    /// Warn about unknown fields instead of rejecting them
    #[arg(long)]
    lax: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario and print the validation report
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Simulate a scenario and write its trajectory
    Simulate {
        #[command(flatten)]
        input: Input,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
        #[arg(long, default_value = "csv", value_name = "csv|json")]
        format: Format,
    },
    /// Fit the scenario's calibration parameters to observed shares
    Fit {
        #[command(flatten)]
        input: Input,
        /// Observed CSV: `t,share_1..share_n` (or `t,D_1..D_n` for a size loss)
        observed: PathBuf,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum number of simulations
        #[arg(long, default_value_t = 500)]
        budget: usize,
    },
    /// Write plot data (long-form CSV) into a directory
    Export {
        #[command(flatten)]
        input: Input,
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Serve the HTTP API for a directory of scenarios
    Serve {
        scenario_dir: PathBuf,
        /// Directory of static UI assets served at `/`
        ui_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn load(input: &Input, err: &mut dyn Write) -> Result<LoadedScenario> {
    let strictness = if input.lax {
        Strictness::Lax
    } else {
        Strictness::Strict
    };
    let loaded = load_scenario_file(&input.scenario, &input.overrides, strictness)?;
    for w in &loaded.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if loaded
        .integrator
        .euler_unstable(loaded.scenario.behavior().decay())
    {
        let _ = writeln!(
            err,
            "warning: k * dt >= 1; explicit Euler steps can overshoot (sizes are kept non-negative)"
        );
    }
    Ok(loaded)
}

fn emit(bytes: &[u8], output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => out.write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Validate { input } => {
            let loaded = load(&input, err)?;
            let steps = loaded.integrator.step_count(loaded.scenario.start_time())?;
            let _ = writeln!(
                out,
                "ok: {} ({} segments, {} attributes, {} stamps, {steps} steps)",
                loaded.doc.name,
                loaded.doc.segments.len(),
                loaded.doc.attributes.len(),
                loaded.scenario.panel().times().len(),
            );
            Ok(())
        }
        Command::Simulate {
            input,
            output,
            format,
        } => {
            let loaded = load(&input, err)?;
            let traj = simulate(&loaded.scenario, &loaded.integrator)?;
            emit(&write_trajectory(&traj, format), output.as_deref(), out)
        }
        Command::Fit {
            input,
            observed,
            output,
            seed,
            budget,
        } => {
            let loaded = load(&input, err)?;
            let spec = loaded.calibration.clone().ok_or_else(|| {
                Error::domain("calibration", "the scenario has no calibration section")
            })?;
            let file = fs::File::open(&observed).map_err(|e| Error::io(&observed, e))?;
            let obs = read_observations(
                file,
                &observed.display().to_string(),
                loaded.scenario.segment_count(),
                spec.loss,
            )?;
            let (_, report) = run_fit(&loaded, &spec, &obs, budget, seed)?;
            emit(&report.to_json(), output.as_deref(), out)
        }
        Command::Export { input, output } => {
            let loaded = load(&input, err)?;
            let files = export(&loaded)?;
            fs::create_dir_all(&output).map_err(|e| Error::io(&output, e))?;
            for (name, bytes) in files {
                let path = output.join(name);
                fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
            }
            Ok(())
        }
        Command::Serve {
            scenario_dir,
            ui_dir,
            port,
        } => {
            let runtime =
                tokio::runtime::Runtime::new().map_err(|e| Error::io("<tokio runtime>", e))?;
            runtime.block_on(crate::server::serve(scenario_dir, ui_dir, port, err))
        }
    }
}

/// Runs one invocation and returns its exit code. `args` includes the
/// program name.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let validate = matches!(cli.command, Command::Validate { .. });
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            // the validation report belongs on stdout; elsewhere it is a diagnostic
            let sink: &mut dyn Write = if validate { out } else { err };
            for d in e.diagnostics() {
                let _ = writeln!(sink, "{d}");
            }
            EXIT_DOMAIN
        }
    }
}
