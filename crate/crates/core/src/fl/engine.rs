//! The federated round loop: broadcast, local gradients, aggregation, update.

use super::aggregation::{AirInterface, TransmitStats};
use super::data::{Dataset, Sample};
use super::model::Model;
use crate::error::{Error, Result};
use crate::par::try_map_indexed;
use crate::rng::{stream, Purpose};
use crate::single_carrier::GradientVector;
use rand::seq::index;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct FlState {
    pub model: Model,
    pub shards: Vec<Dataset>,
    pub test: Dataset,
    /// Completed rounds.
    pub round: u64,
}

impl FlState {
    pub fn new(model: Model, shards: Vec<Dataset>, test: Dataset) -> Result<Self> {
        let size = shards.first().map(Dataset::len).ok_or_else(|| Error::invalid("need at least one shard"))?;
        if shards.iter().any(|s| s.len() != size) {
            return Err(Error::invalid("shards must have equal sizes"));
        }
        if size == 0 {
            return Err(Error::invalid("shards must not be empty"));
        }
        let arch = model.architecture();
        for d in shards.iter().chain(std::iter::once(&test)) {
            if !d.is_empty() && d.features() != arch.inputs() {
                return Err(Error::invalid(format!(
                    "dataset has {} features, model expects {}",
                    d.features(),
                    arch.inputs()
                )));
            }
        }
        Ok(FlState {
            model,
            shards,
            test,
            round: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub air: AirInterface,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    /// 1-based round index.
    pub round: u64,
    pub tse: f64,
    pub accuracy: f64,
    pub test_loss: f64,
    pub tx: TransmitStats,
}

/// Mini-batch indices drawn without replacement.
pub fn sample_batch<R: Rng + ?Sized>(len: usize, batch_size: usize, rng: &mut R) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::invalid("empty shard"));
    }
    if batch_size == 0 || batch_size > len {
        return Err(Error::invalid(format!("batch size {batch_size} must be in 1..={len}")));
    }
    Ok(index::sample(rng, len, batch_size).into_vec())
}

/// One mini-batch gradient of the local loss at the current weights.
pub fn local_gradient<R: Rng + ?Sized>(
    model: &Model,
    shard: &Dataset,
    batch_size: usize,
    rng: &mut R,
) -> Result<GradientVector> {
    let idx = sample_batch(shard.len(), batch_size, rng)?;
    let batch: Vec<&Sample> = idx.iter().map(|&i| &shard.samples()[i]).collect();
    Ok(GradientVector::raw(model.loss_and_grad(&batch)?.1))
}

/// Local gradients of every UE for round `round` (1-based).
pub fn local_gradients(state: &FlState, cfg: &FlConfig, round: u64) -> Result<Vec<GradientVector>> {
    try_map_indexed(cfg.air.exec, state.shards.len(), |k| {
        local_gradient(
            &state.model,
            &state.shards[k],
            cfg.batch_size,
            &mut stream(cfg.seed, Purpose::Batch, round, k as u64),
        )
    })
}

/// `(1/N) Σ_n (g̃[n] − ḡ[n])²`.
pub fn true_square_error(recovered: &GradientVector, exact: &GradientVector) -> Result<f64> {
    if recovered.len() != exact.len() {
        return Err(Error::invalid(format!(
            "recovered length {} != exact length {}",
            recovered.len(),
            exact.len()
        )));
    }
    if exact.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = recovered
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(sum / exact.len() as f64)
}

/// Fraction of correctly classified samples.
pub fn evaluate(model: &Model, test: &Dataset) -> Result<f64> {
    Ok(evaluate_with_loss(model, test)?.0)
}

/// Accuracy and mean loss over the test set in one pass.
pub fn evaluate_with_loss(model: &Model, test: &Dataset) -> Result<(f64, f64)> {
    if test.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    let (mut correct, mut loss) = (0, 0.0);
    for s in test.samples() {
        let (l, class) = model.loss_and_predict(s)?;
        loss += l;
        if class == s.label {
            correct += 1;
        }
    }
    let n = test.len() as f64;
    Ok((correct as f64 / n, loss / n))
}

/// Runs one communication round and applies `w ← w − η g̃`.
pub fn run_round(state: &mut FlState, cfg: &FlConfig) -> Result<RoundMetrics> {
    let round = state.round + 1;
    let raw = local_gradients(state, cfg, round)?;
    let out = cfg.air.aggregate(&raw, cfg.seed, round)?;
    let tse = true_square_error(&out.recovered, &out.target)?;
    state.model.apply_update(out.recovered.values(), cfg.learning_rate)?;
    state.round = round;
    let (accuracy, test_loss) = evaluate_with_loss(&state.model, &state.test)?;
    Ok(RoundMetrics {
        round,
        tse,
        accuracy,
        test_loss,
        tx: out.stats,
    })
}
