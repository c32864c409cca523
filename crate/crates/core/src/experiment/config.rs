//! Experiment configuration: presets, TOML files and command-line overrides.
//!
//! Resolution order is preset, then file, then explicit overrides; later
//! layers replace individual keys and leave the rest untouched.

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::fl::aggregation::Transport;
use crate::fl::data::SplitMode;
use crate::par::Execution;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use toml::{Table, Value};

pub const DEFAULT_PRESET: &str = "desk";
pub const PRESETS: [&str; 2] = ["desk", "paper-iv"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Two Gaussian blobs, see [`crate::fl::data::synthetic_blobs`].
    Synthetic {
        features: usize,
        separation: f64,
        train_per_ue: usize,
        test_samples: usize,
    },
    /// Delimited text files, features then an integer label per row.
    File {
        train: PathBuf,
        test: PathBuf,
        #[serde(default = "default_delimiter")]
        delimiter: char,
        #[serde(default)]
        header: bool,
    },
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of UEs `K`.
    pub ues: usize,
    pub radius_m: f64,
    pub p_avg_dbm: f64,
    pub p_inst_dbm: f64,
    /// Noise power spectral densities to sweep, one scenario each.
    pub noise_psd_dbm_hz: Vec<f64>,
    /// Bandwidth of the single carrier and of each OFDM subcarrier.
    pub bandwidth_hz: f64,
    pub subcarriers: usize,
    pub l_os: usize,
    pub oob_threshold_dbm: f64,
    pub icf_max_iters: usize,
    pub rounds: u64,
    pub scheme: Transport,
    pub clip: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden_units: usize,
    pub split: SplitMode,
    pub dataset: DatasetSpec,
    pub channel: ChannelConfig,
    pub seed: u64,
    pub execution: Execution,
}

impl ExperimentConfig {
    /// Desk-scale defaults: 8 UEs, 100 rounds, small batches.
    pub fn desk() -> Self {
        ExperimentConfig {
            ues: 8,
            radius_m: 100.0,
            p_avg_dbm: 23.0,
            p_inst_dbm: 26.0,
            noise_psd_dbm_hz: vec![-110.0, -90.0],
            bandwidth_hz: 60e3,
            subcarriers: 32,
            l_os: 4,
            oob_threshold_dbm: -10.0,
            icf_max_iters: 16,
            rounds: 100,
            scheme: Transport::Ofdm,
            clip: true,
            learning_rate: 1.0,
            batch_size: 32,
            hidden_units: 80,
            split: SplitMode::Iid,
            dataset: DatasetSpec::Synthetic {
                features: 20,
                separation: 1.5,
                train_per_ue: 128,
                test_samples: 1000,
            },
            channel: ChannelConfig::default(),
            seed: 0,
            execution: Execution::Parallel,
        }
    }

    /// Full-scale link and training settings: 40 UEs, 500 rounds, batch 256.
    pub fn paper_iv() -> Self {
        ExperimentConfig {
            ues: 40,
            rounds: 500,
            batch_size: 256,
            dataset: DatasetSpec::Synthetic {
                features: 20,
                separation: 1.5,
                train_per_ue: 512,
                test_samples: 2000,
            },
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper-iv" => Ok(Self::paper_iv()),
            other => Err(Error::config(
                "preset",
                format!("unknown preset {other:?}, expected one of {PRESETS:?}"),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive_int = [
            ("ues", self.ues),
            ("subcarriers", self.subcarriers),
            ("l_os", self.l_os),
            ("icf_max_iters", self.icf_max_iters),
            ("batch_size", self.batch_size),
            ("hidden_units", self.hidden_units),
            ("channel.num_taps", self.channel.num_taps),
        ];
        for (field, v) in positive_int {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        let finite = [
            ("p_avg_dbm", self.p_avg_dbm),
            ("p_inst_dbm", self.p_inst_dbm),
            ("oob_threshold_dbm", self.oob_threshold_dbm),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        let positive = [
            ("radius_m", self.radius_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("learning_rate", self.learning_rate),
            ("channel.carrier_hz", self.channel.carrier_hz),
            ("channel.tap_decay", self.channel.tap_decay),
            ("channel.d_min", self.channel.d_min),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be positive and finite, got {v}")));
            }
        }
        if self.noise_psd_dbm_hz.is_empty() {
            return Err(Error::config("noise_psd_dbm_hz", "needs at least one value"));
        }
        if self.noise_psd_dbm_hz.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("noise_psd_dbm_hz", "values must be finite"));
        }
        if self.channel.num_taps > self.subcarriers {
            return Err(Error::config("channel.num_taps", "must not exceed subcarriers"));
        }
        match &self.dataset {
            DatasetSpec::Synthetic {
                features,
                separation,
                train_per_ue,
                test_samples,
            } => {
                if *features == 0 {
                    return Err(Error::config("dataset.features", "must be at least 1"));
                }
                if !separation.is_finite() {
                    return Err(Error::config("dataset.separation", "must be finite"));
                }
                if *train_per_ue < self.batch_size {
                    return Err(Error::config(
                        "dataset.train_per_ue",
                        format!("{train_per_ue} samples cannot fill a batch of {}", self.batch_size),
                    ));
                }
                if *test_samples == 0 {
                    return Err(Error::config("dataset.test_samples", "must be at least 1"));
                }
            }
            DatasetSpec::File { delimiter, .. } => {
                if !delimiter.is_ascii() {
                    return Err(Error::config("dataset.delimiter", "must be a single ASCII character"));
                }
            }
        }
        if self.p_inst_dbm < self.p_avg_dbm {
            log::warn!(
                "p_inst_dbm ({}) is below p_avg_dbm ({}): negative peak headroom",
                self.p_inst_dbm,
                self.p_avg_dbm
            );
        }
        Ok(())
    }
}

/// The configuration as a TOML document that [`resolve`] accepts back.
pub fn to_toml(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::config("config", e.to_string()))
}

/// Explicit overrides, typically from the command line. `None` keeps the value
/// from the lower layers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub rounds: Option<u64>,
    pub scheme: Option<Transport>,
    pub clip: Option<bool>,
}

impl ConfigOverrides {
    fn apply(&self, table: &mut Table) -> Result<()> {
        let mut set = |key: &str, v: Value| {
            table.insert(key.to_string(), v);
        };
        if let Some(seed) = self.seed {
            let v = i64::try_from(seed).map_err(|_| Error::config("seed", "must fit in a signed 64-bit integer"))?;
            set("seed", Value::Integer(v));
        }
        if let Some(rounds) = self.rounds {
            let v = i64::try_from(rounds).map_err(|_| Error::config("rounds", "too large"))?;
            set("rounds", Value::Integer(v));
        }
        if let Some(scheme) = self.scheme {
            set("scheme", Value::String(scheme.label().to_string()));
        }
        if let Some(clip) = self.clip {
            set("clip", Value::Boolean(clip));
        }
        Ok(())
    }
}

/// Recursively overlays `top` onto `base`; nested tables merge key by key.
/// A table that switches its `source` tag replaces the old table outright.
fn merge(base: &mut Table, top: Table) {
    for (key, value) in top {
        if let (Some(Value::Table(b)), Value::Table(t)) = (base.get_mut(&key), &value) {
            let switches_source = t.get("source").is_some_and(|s| b.get("source") != Some(s));
            if !switches_source {
                merge(b, t.clone());
                continue;
            }
        }
        base.insert(key, value);
    }
}

/// Dotted key of the assignment that contains byte offset `at`.
fn key_at(text: &str, at: usize) -> Option<String> {
    let mut section = String::new();
    let mut offset = 0;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            section = trimmed.trim_matches(|c| c == '[' || c == ']').to_string();
        }
        if at < offset + line.len() + 1 {
            let key = trimmed.split('=').next()?.trim().trim_matches('"');
            if key.is_empty() || trimmed.starts_with('[') {
                return None;
            }
            return Some(if section.is_empty() { key.to_string() } else { format!("{section}.{key}") });
        }
        offset += line.len() + 1;
    }
    None
}

fn decode(table: Table) -> Result<ExperimentConfig> {
    let text = table.to_string();
    toml::from_str(&text).map_err(|e| {
        let field = e
            .span()
            .and_then(|s| key_at(&text, s.start))
            .unwrap_or_else(|| "config".to_string());
        Error::config(&field, e.message().trim().to_string())
    })
}

/// Resolves a configuration from an optional TOML file and overrides.
pub fn resolve(file: Option<&Path>, overrides: &ConfigOverrides) -> Result<ExperimentConfig> {
    let mut file_table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            text.parse::<Table>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
        }
        None => Table::new(),
    };
    let file_preset = match file_table.remove("preset") {
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(Error::config("preset", "must be a string")),
        None => None,
    };
    let name = overrides
        .preset
        .clone()
        .or(file_preset)
        .unwrap_or_else(|| DEFAULT_PRESET.to_string());
    let mut table = Table::try_from(ExperimentConfig::preset(&name)?).expect("config serializes to a TOML table");
    merge(&mut table, file_table);
    overrides.apply(&mut table)?;
    let cfg = decode(table)?;
    cfg.validate()?;
    Ok(cfg)
}
