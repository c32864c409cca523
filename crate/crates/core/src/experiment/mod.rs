//! Scenario expansion and seeded batch execution.

pub mod config;
pub mod metrics;

pub use config::{resolve, ConfigOverrides, DatasetSpec, ExperimentConfig};
pub use metrics::{emit_metrics, read_metrics, write_metrics, Format, MetricsRecord};

use crate::error::Result;
use crate::fl::aggregation::{AirInterface, Environment, LinkBudget, OfdmParams, Scheme};
use crate::fl::data::{load_delimited, shard, synthetic_blobs, Dataset};
use crate::fl::engine::{run_round, FlConfig, FlState};
use crate::fl::model::{Architecture, Model};
use crate::par::try_map_indexed;
use crate::rng::{stream, Purpose};
use crate::units::dbm_to_mw;

/// One cell of the sweep: the configured scheme at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub noise_psd_dbm_hz: f64,
    pub fl: FlConfig,
}

fn scenario_id(cfg: &ExperimentConfig, psd: f64) -> String {
    let clip = if cfg.clip { "clip" } else { "noclip" };
    format!("{}-{clip}-psd{psd}", cfg.scheme.label())
}

/// Expands the noise sweep into scenarios sharing the same placement.
pub fn scenarios(cfg: &ExperimentConfig) -> Result<Vec<Scenario>> {
    cfg.validate()?;
    let env = Environment::place(cfg.ues, cfg.radius_m, cfg.channel, cfg.seed);
    Ok(cfg
        .noise_psd_dbm_hz
        .iter()
        .map(|&psd| Scenario {
            id: scenario_id(cfg, psd),
            noise_psd_dbm_hz: psd,
            fl: FlConfig {
                batch_size: cfg.batch_size,
                learning_rate: cfg.learning_rate,
                air: AirInterface {
                    scheme: Scheme {
                        transport: cfg.scheme,
                        clip: cfg.clip,
                    },
                    link: LinkBudget {
                        p_avg_mw: dbm_to_mw(cfg.p_avg_dbm),
                        p_inst_mw: dbm_to_mw(cfg.p_inst_dbm),
                        noise_var: dbm_to_mw(psd) * cfg.bandwidth_hz,
                    },
                    ofdm: OfdmParams {
                        subcarriers: cfg.subcarriers,
                        l_os: cfg.l_os,
                        oob_threshold_dbm: cfg.oob_threshold_dbm,
                        max_iters: cfg.icf_max_iters,
                    },
                    env: env.clone(),
                    exec: cfg.execution,
                },
                seed: cfg.seed,
            },
        })
        .collect())
}

/// Initial model, shards and test set; identical for every scenario of a seed.
pub fn initial_state(cfg: &ExperimentConfig) -> Result<FlState> {
    let (train, test) = match &cfg.dataset {
        DatasetSpec::Synthetic {
            features,
            separation,
            train_per_ue,
            test_samples,
        } => (
            synthetic_blobs(cfg.ues * train_per_ue, *features, *separation, &mut stream(cfg.seed, Purpose::Data, 0, 0))?,
            synthetic_blobs(*test_samples, *features, *separation, &mut stream(cfg.seed, Purpose::Data, 1, 0))?,
        ),
        DatasetSpec::File {
            train,
            test,
            delimiter,
            header,
        } => (
            load_delimited(train, *delimiter as u8, *header)?,
            load_delimited(test, *delimiter as u8, *header)?,
        ),
    };
    let classes = train.classes().max(test.classes());
    let arch = Architecture::Mlp {
        inputs: train.features(),
        hidden: cfg.hidden_units,
        classes,
    };
    let model = Model::xavier(arch, &mut stream(cfg.seed, Purpose::Init, 0, 0))?;
    let shards: Vec<Dataset> = shard(&train, cfg.ues, cfg.split, &mut stream(cfg.seed, Purpose::Split, 0, 0))?;
    FlState::new(model, shards, test)
}

/// Runs every scenario for `cfg.rounds` rounds. Records are ordered by
/// scenario, then round, regardless of how the scenarios were scheduled.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    let cells = scenarios(cfg)?;
    if cfg.rounds == 0 {
        return Ok(Vec::new());
    }
    let start = initial_state(cfg)?;
    let per_scenario = try_map_indexed(cfg.execution, cells.len(), |i| -> Result<Vec<MetricsRecord>> {
        let cell = &cells[i];
        let mut state = start.clone();
        (0..cfg.rounds)
            .map(|_| {
                let m = run_round(&mut state, &cell.fl)?;
                log::debug!("{} round {}: tse {:.3e} acc {:.3}", cell.id, m.round, m.tse, m.accuracy);
                Ok(MetricsRecord::new(&cell.id, cfg.seed, cell.noise_psd_dbm_hz, m))
            })
            .collect()
    })?;
    Ok(per_scenario.into_iter().flatten().collect())
}
