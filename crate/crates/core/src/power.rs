//! MSE-optimal transmit power and denoising factor.
//!
//! For gains `h_1 ≥ … ≥ h_K`, the optimum of
//!
//! ```text
//! min_{α>0, 0≤p_k≤P}  Σ_k (h_k √(α p_k) − 1)² + α σ²
//! ```
//!
//! has a threshold structure: the strongest `k* − 1` UEs invert their channel
//! (`h_k² α p_k = 1`) and the rest transmit at `P`, with
//! `α = (1/P) · (Σ_{k≥k*} h_k / (Σ_{k≥k*} h_k² + σ²/P))²`. The threshold is found
//! by evaluating every candidate `k*` and keeping the best consistent one.

use crate::error::{Error, Result};

/// Positive channel amplitude gains with their descending-order permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGains {
    gains: Vec<f64>,
    // order[rank] = original index, strongest first
    order: Vec<usize>,
}

impl ChannelGains {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::invalid("at least one channel gain is required"));
        }
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::invalid(format!("channel gains must be positive and finite, got {g}")));
        }
        let mut order: Vec<usize> = (0..gains.len()).collect();
        // stable, so equal gains keep their original relative order
        order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
        Ok(ChannelGains { gains, order })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gains
    }

    /// Original UE indices, strongest channel first.
    pub fn sorted_order(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.gains[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    /// Denoising factor α (1/mW).
    pub alpha: f64,
    /// Average transmit power per UE (mW), in original UE order.
    pub powers: Vec<f64>,
    /// 1-based threshold rank in the descending gain order; ranks `≥ k_star` transmit at full power.
    pub k_star: usize,
    /// Σ_k (h_k √(α p_k) − 1)² + α σ².
    pub objective: f64,
}

impl PowerSolution {
    /// Received amplitude `h_k √(α p_k)` per UE (1 means perfectly aligned).
    pub fn alignment(&self, gains: &ChannelGains) -> Vec<f64> {
        gains
            .as_slice()
            .iter()
            .zip(&self.powers)
            .map(|(h, p)| h * (self.alpha * p).sqrt())
            .collect()
    }
}

/// Σ_k (h_k √(α p_k) − 1)² + α σ².
pub fn mse_objective(alpha: f64, powers: &[f64], gains: &ChannelGains, noise_var: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if powers.len() != gains.len() {
        return Err(Error::invalid(format!(
            "{} powers for {} gains",
            powers.len(),
            gains.len()
        )));
    }
    if let Some(p) = powers.iter().find(|p| p.is_nan() || **p < 0.0) {
        return Err(Error::invalid(format!("transmit power must be >= 0, got {p}")));
    }
    if noise_var.is_nan() || noise_var < 0.0 {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_var}")));
    }
    let misalignment: f64 = gains
        .as_slice()
        .iter()
        .zip(powers)
        .map(|(h, p)| (h * (alpha * p).sqrt() - 1.0).powi(2))
        .sum();
    Ok(misalignment + alpha * noise_var)
}

/// Threshold power control for one multiple-access channel.
pub fn solve_power_alloc(gains: &ChannelGains, p_max: f64, noise_var: f64) -> Result<PowerSolution> {
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::invalid(format!("p_max must be positive, got {p_max}")));
    }
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_var}")));
    }
    let h = gains.sorted();
    let k = h.len();

    let mut suffix_h = vec![0.0; k + 1];
    let mut suffix_h2 = vec![0.0; k + 1];
    for r in (0..k).rev() {
        suffix_h[r] = suffix_h[r + 1] + h[r];
        suffix_h2[r] = suffix_h2[r + 1] + h[r] * h[r];
    }

    // (rank threshold, alpha, objective); rank is 0-based here
    let mut best: Option<(usize, f64, f64)> = None;
    for t in 0..k {
        let ratio = suffix_h[t] / (suffix_h2[t] + noise_var / p_max);
        let alpha = ratio * ratio / p_max;
        // inversion power is largest for the weakest inverting UE, rank t - 1
        if t > 0 && 1.0 / (alpha * h[t - 1] * h[t - 1]) > p_max * (1.0 + 1e-12) {
            continue;
        }
        let amp = (alpha * p_max).sqrt();
        let objective = h[t..].iter().map(|hk| (hk * amp - 1.0).powi(2)).sum::<f64>() + alpha * noise_var;
        if best.is_none_or(|(_, _, o)| objective < o) {
            best = Some((t, alpha, objective));
        }
    }
    // t = 0 (nobody inverts) is always consistent
    let (t, alpha, objective) = best.expect("full-power candidate is always feasible");

    let mut powers = vec![0.0; k];
    for (rank, &ue) in gains.sorted_order().iter().enumerate() {
        powers[ue] = if rank < t {
            (1.0 / (alpha * h[rank] * h[rank])).min(p_max)
        } else {
            p_max
        };
    }
    Ok(PowerSolution {
        alpha,
        powers,
        k_star: t + 1,
        objective,
    })
}

/// Equal-power decoupling across subcarriers: each subcarrier gets budget
/// `p_max / M` and is solved independently. `gains[k][m]` is `|H_{k,m}|`.
pub fn subcarrier_alloc(gains: &[Vec<f64>], p_max: f64, noise_var: f64) -> Result<Vec<PowerSolution>> {
    let subcarriers = gains.first().map(Vec::len).unwrap_or(0);
    if subcarriers == 0 {
        return Err(Error::invalid("gain matrix needs at least one UE and one subcarrier"));
    }
    if gains.iter().any(|row| row.len() != subcarriers) {
        return Err(Error::invalid("gain matrix rows must all have the same length"));
    }
    let budget = p_max / subcarriers as f64;
    (0..subcarriers)
        .map(|m| {
            let column = ChannelGains::new(gains.iter().map(|row| row[m]).collect())?;
            solve_power_alloc(&column, budget, noise_var)
        })
        .collect()
}
