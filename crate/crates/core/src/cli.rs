//! Command-line front end: `sweep`, `trial`, `validate-config`.
//!
//! Exit status 0 on success, 2 for usage or configuration errors, 1 for
//! failures during computation or output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::harness::{emit_csv, run_sweep, Scenario, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(
    name = "mmwave-hybrid",
    version,
    about = "Hybrid precoder/combiner design sweeps for mmWave MIMO-OFDM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full SNR sweep and write CSV plus a metadata sidecar.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// CSV destination; metadata goes to `<out>.meta.toml`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one trial and print the per-iteration beam indices and rates.
    Trial {
        #[command(flatten)]
        common: Common,
        /// SNR grid point to use; defaults to the first grid entry.
        #[arg(long = "snr-db", allow_hyphen_values = true)]
        snr_db: Option<f64>,
        #[arg(long = "trial-index", default_value_t = 0)]
        trial_index: usize,
    },
    /// Check a config and print the resolved values.
    ValidateConfig {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set N_RF=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated modes: cs_estimated, perfect_csi, full_digital.
    #[arg(long)]
    mode: Option<String>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(trials) = self.trials {
            overrides.push(format!("trials={trials}"));
        }
        if let Some(mode) = &self.mode {
            let list: Vec<String> = mode.split(',').map(|m| format!("\"{}\"", m.trim())).collect();
            overrides.push(format!("mode=[{}]", list.join(", ")));
        }
        let config = match &self.config {
            Some(path) => ScenarioConfig::load(path, &overrides)?,
            None => {
                let base = ScenarioConfig::default().to_toml()?;
                ScenarioConfig::from_toml_with_overrides(&base, &overrides)?
            }
        };
        config.validate()?;
        Ok(config)
    }
}

enum Failure {
    Usage(Error),
    Runtime(Error),
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn sweep(common: &Common, out_path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let config = common.load().map_err(Failure::Usage)?;
    let result = run_sweep(&config).map_err(Failure::Runtime)?;
    emit_csv(&result, out_path).map_err(Failure::Runtime)?;
    let _ = writeln!(out, "wrote {} records to {}", result.records.len(), out_path.display());
    Ok(())
}

fn trial(common: &Common, snr_db: Option<f64>, index: usize, out: &mut dyn Write) -> Result<(), Failure> {
    let config = common.load().map_err(Failure::Usage)?;
    let snr_index = match snr_db {
        None => 0,
        Some(s) => config.snr_grid_db.iter().position(|&g| g == s).ok_or_else(|| {
            Failure::Usage(Error::Config(format!(
                "--snr-db {s} is not on snr_grid_dB {:?}",
                config.snr_grid_db
            )))
        })?,
    };
    let scenario = Scenario::new(config).map_err(Failure::Usage)?;
    let o = scenario.run_trial(snr_index, index).map_err(Failure::Runtime)?;
    let _ = writeln!(out, "trial {} at {} dB, seed {:#018x}", o.trial, o.snr_db, o.seed);
    for m in &o.modes {
        if let Some(d) = &m.design {
            let status = if d.converged { "converged" } else { "hit max_iterations" };
            let _ = writeln!(out, "{}: initial F_RF [{}]", m.mode, join(&d.initial_precoder));
            for (i, rec) in d.trace.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "  iteration {}: W_RF [{}] F_RF [{}]",
                    i + 1,
                    join(&rec.combiner_indices),
                    join(&rec.precoder_indices)
                );
            }
            let _ = writeln!(out, "  {} after {} iterations", status, d.trace.len());
        }
        let _ = writeln!(out, "{}: {} bits/s/Hz", m.mode, m.rate);
    }
    Ok(())
}

fn validate(common: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let config = common.load().map_err(Failure::Usage)?;
    let text = config.to_toml().map_err(Failure::Runtime)?;
    let _ = writeln!(out, "# config is valid");
    let _ = write!(out, "{text}");
    Ok(())
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Sweep { common, out: path } => sweep(common, path, out),
        Command::Trial {
            common,
            snr_db,
            trial_index,
        } => trial(common, *snr_db, *trial_index, out),
        Command::ValidateConfig { common } => validate(common, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
