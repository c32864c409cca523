//! Single-carrier over-the-air aggregation.
//!
//! Each UE normalizes its gradient with the round-wide statistics `(μ, Γ)`,
//! scales it by `√p_k`, hard-limits it at `A_max` and transmits one entry per
//! channel use. The server receives `y = Σ_k h_k x_k + n` and recovers
//! `g̃ = Γ √α y / K + μ`.

use crate::dsp::{clip_real, papr_real, ClipLevel};
use crate::error::{Error, Result};
use crate::power::{ChannelGains, PowerSolution};
use rand::Rng;
use rand_distr::StandardNormal;

/// Lower bound on Γ so an all-constant round does not divide by zero.
pub const GAMMA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationStats {
    pub mu: f64,
    pub gamma: f64,
}

impl NormalizationStats {
    pub const IDENTITY: NormalizationStats = NormalizationStats { mu: 0.0, gamma: 1.0 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    values: Vec<f64>,
    normalized: bool,
}

impl GradientVector {
    pub fn raw(values: Vec<f64>) -> Self {
        GradientVector {
            values,
            normalized: false,
        }
    }

    pub fn normalized(values: Vec<f64>) -> Self {
        GradientVector {
            values,
            normalized: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `μ = mean_k μ_k`, `Γ = max(mean_k Γ_k, GAMMA_FLOOR)` with per-UE mean `μ_k`
/// and standard deviation `Γ_k`.
pub fn compute_norm_stats(raw: &[GradientVector]) -> Result<NormalizationStats> {
    let n = raw.first().map(GradientVector::len).unwrap_or(0);
    if n == 0 {
        return Err(Error::invalid("need at least one non-empty gradient"));
    }
    if raw.iter().any(|g| g.len() != n) {
        return Err(Error::invalid("gradient vectors must all have the same length"));
    }
    let (mut mu, mut gamma) = (0.0, 0.0);
    for g in raw {
        let m = g.values.iter().sum::<f64>() / n as f64;
        let sq = g.values.iter().map(|v| v * v).sum::<f64>() / n as f64;
        mu += m;
        gamma += (sq - m * m).max(0.0).sqrt();
    }
    let k = raw.len() as f64;
    Ok(NormalizationStats {
        mu: mu / k,
        gamma: (gamma / k).max(GAMMA_FLOOR),
    })
}

pub fn normalize(raw: &GradientVector, stats: NormalizationStats) -> GradientVector {
    GradientVector::normalized(raw.values.iter().map(|v| (v - stats.mu) / stats.gamma).collect())
}

pub fn denormalize(g: &GradientVector, stats: NormalizationStats) -> GradientVector {
    GradientVector::raw(g.values.iter().map(|v| v * stats.gamma + stats.mu).collect())
}

/// `x[n] = C_A(√p · g[n])`, a real waveform.
pub fn transmit_clipped(g: &GradientVector, p_in: f64, level: ClipLevel) -> Vec<f64> {
    let amp = p_in.max(0.0).sqrt();
    g.values.iter().map(|v| clip_real(amp * v, level.a_max())).collect()
}

/// `y = Σ_k h_k x_k + n` with real `n ~ N(0, σ²)` per sample.
pub fn superpose_receive<R: Rng + ?Sized>(
    signals: &[Vec<f64>],
    gains: &[f64],
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if signals.len() != gains.len() {
        return Err(Error::invalid(format!(
            "{} signals for {} gains",
            signals.len(),
            gains.len()
        )));
    }
    let n = signals.first().map(Vec::len).unwrap_or(0);
    if signals.iter().any(|s| s.len() != n) {
        return Err(Error::invalid("transmitted signals must all have the same length"));
    }
    if noise_var.is_nan() || noise_var < 0.0 {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_var}")));
    }
    let mut y = vec![0.0; n];
    for (x, h) in signals.iter().zip(gains) {
        for (acc, v) in y.iter_mut().zip(x) {
            *acc += h * v;
        }
    }
    if noise_var > 0.0 {
        let sigma = noise_var.sqrt();
        for acc in &mut y {
            *acc += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(y)
}

/// `g̃ = Γ √α y / K + μ`.
pub fn recover(y: &[f64], alpha: f64, ues: usize, stats: NormalizationStats) -> GradientVector {
    let scale = stats.gamma * alpha.sqrt() / ues as f64;
    GradientVector::raw(y.iter().map(|v| scale * v + stats.mu).collect())
}

/// `(Γ² N / K²) (Σ_k (h_k √(α p_k) − 1)² + α σ²)`, the expected squared error of
/// the whole recovered vector.
pub fn analytic_mse_sc(
    sol: &PowerSolution,
    gains: &ChannelGains,
    noise_var: f64,
    stats: NormalizationStats,
    entries: usize,
    ues: usize,
) -> f64 {
    let misalignment: f64 = sol
        .alignment(gains)
        .iter()
        .map(|a| (a - 1.0).powi(2))
        .sum();
    stats.gamma.powi(2) * entries as f64 / (ues * ues) as f64 * (misalignment + sol.alpha * noise_var)
}

/// `max_n g[n]² / mean_n g[n]²`.
pub fn papr_gradient(g: &GradientVector) -> Result<f64> {
    papr_real(&g.values)
}
