//! `otafl`: run over-the-air federated learning experiments and emit per-round
//! metrics.

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use otafl_core::experiment::{resolve, run_experiment, write_metrics, ConfigOverrides, Format};
use otafl_core::fl::Transport;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ideal,
    Sc,
    Ofdm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Parser)]
#[command(version, about = "Over-the-air federated learning simulator")]
struct Cli {
    /// TOML configuration file; keys override the preset.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base preset: desk or paper-iv (default desk).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Master seed; every random draw derives from it.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Communication rounds per scenario.
    #[arg(long, value_name = "N")]
    rounds: Option<u64>,
    /// Aggregation uplink: error-free average, single-carrier or OFDM.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Enforce the instantaneous peak power.
    #[arg(long, value_enum)]
    clip: Option<Toggle>,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

impl Cli {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            preset: self.preset.clone(),
            seed: self.seed,
            rounds: self.rounds,
            scheme: self.scheme.map(|s| match s {
                SchemeArg::Ideal => Transport::Ideal,
                SchemeArg::Sc => Transport::SingleCarrier,
                SchemeArg::Ofdm => Transport::Ofdm,
            }),
            clip: self.clip.map(|c| matches!(c, Toggle::On)),
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve(cli.config.as_deref(), &cli.overrides()).context("invalid configuration")?;
    if cli.print_config {
        print!("{}", toml_string(&cfg)?);
        return Ok(());
    }
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Jsonl => Format::Jsonl,
    };
    log::info!("running {} round(s) of {} scenario(s)", cfg.rounds, cfg.noise_psd_dbm_hz.len());
    let records = run_experiment(&cfg)?;
    match &cli.out {
        Some(path) => otafl_core::experiment::emit_metrics(&records, format, path)?,
        None => {
            let stdout = std::io::stdout().lock();
            write_metrics(&records, format, stdout, Path::new("<stdout>"))?;
        }
    }
    std::io::stdout().flush().ok();
    Ok(())
}

fn toml_string(cfg: &otafl_core::experiment::ExperimentConfig) -> Result<String> {
    otafl_core::experiment::config::to_toml(cfg).context("serializing configuration")
}
