//! One round of gradient aggregation over an ideal, single-carrier or OFDM link.

use crate::channel::{draw_flat_channel, draw_multipath, place_ues, ChannelConfig, ChannelRealization, UePosition};
use crate::dsp::{idft_paper, papr_real, ClipLevel, OOB_FLOOR_DBM};
use crate::error::{Error, Result};
use crate::ofdm::{
    analytic_mse_subcarrier, demodulate_recover, icf, modulate_symbol, papr_db_or_zero, precoders, symbol_spectrum,
    to_nyquist, transmit_through_channel, IcfConfig, IcfReport, OfdmSymbolPlan,
};
use crate::par::{map_indexed, try_map_indexed, Execution};
use crate::power::{solve_power_alloc, subcarrier_alloc, ChannelGains, PowerSolution};
use crate::rng::{stream, Purpose};
use crate::single_carrier::{
    analytic_mse_sc, compute_norm_stats, normalize, recover, superpose_receive, transmit_clipped, GradientVector,
    NormalizationStats,
};
use crate::units::linear_to_db;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transport {
    /// Exact average, no channel.
    #[default]
    #[serde(rename = "ideal")]
    Ideal,
    #[serde(rename = "sc")]
    SingleCarrier,
    #[serde(rename = "ofdm")]
    Ofdm,
}

impl Transport {
    pub fn label(self) -> &'static str {
        match self {
            Transport::Ideal => "ideal",
            Transport::SingleCarrier => "sc",
            Transport::Ofdm => "ofdm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub transport: Transport,
    /// Enforce the instantaneous peak power (hard clip, or ICF for OFDM).
    pub clip: bool,
}

/// Linear-unit link parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Average transmit power budget per UE (mW).
    pub p_avg_mw: f64,
    /// Instantaneous peak power limit (mW).
    pub p_inst_mw: f64,
    /// Receiver noise variance: per real sample for single-carrier, per
    /// subcarrier for OFDM (mW).
    pub noise_var: f64,
}

impl LinkBudget {
    pub fn clip_level(&self, clip: bool) -> Result<ClipLevel> {
        if clip {
            ClipLevel::from_peak_power_mw(self.p_inst_mw)
        } else {
            Ok(ClipLevel::disabled())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    pub subcarriers: usize,
    pub l_os: usize,
    pub oob_threshold_dbm: f64,
    pub max_iters: usize,
}

impl Default for OfdmParams {
    fn default() -> Self {
        OfdmParams {
            subcarriers: 32,
            l_os: 4,
            oob_threshold_dbm: -10.0,
            max_iters: 16,
        }
    }
}

/// UE placement and the channel model. Positions are fixed; fading is redrawn
/// every round.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub positions: Vec<UePosition>,
    pub channel: ChannelConfig,
}

impl Environment {
    pub fn place(ues: usize, radius: f64, channel: ChannelConfig, seed: u64) -> Self {
        Environment {
            positions: place_ues(ues, radius, &mut stream(seed, Purpose::Placement, 0, 0)),
            channel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AirInterface {
    pub scheme: Scheme,
    pub link: LinkBudget,
    pub ofdm: OfdmParams,
    pub env: Environment,
    pub exec: Execution,
}

/// Transmission statistics for one round. Fields that do not apply to a
/// scheme take neutral values (zero, or the out-of-band floor).
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitStats {
    pub papr_mean_db: f64,
    pub papr_max_db: f64,
    pub papr_clipped_mean_db: f64,
    pub papr_clipped_max_db: f64,
    /// Analytic per-entry MSE.
    pub mse_analytic: f64,
    pub icf_iters_mean: f64,
    pub icf_converged_frac: f64,
    /// Worst final post-clip out-of-band power across symbols.
    pub oob_final_dbm: f64,
    pub peak_excess_db_max: f64,
    pub clipped_fraction: f64,
    pub alpha_mean: f64,
    /// Average transmit power per UE (mW).
    pub ue_powers_mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationOutcome {
    pub recovered: GradientVector,
    /// Exact average of the raw gradients.
    pub target: GradientVector,
    pub stats: TransmitStats,
}

/// `(1/K) Σ_k ḡ_k`.
pub fn exact_average(raw: &[GradientVector]) -> Result<GradientVector> {
    let first = raw.first().ok_or_else(|| Error::invalid("no gradients to aggregate"))?;
    if raw.iter().any(|g| g.len() != first.len()) {
        return Err(Error::invalid("gradients must all have the same length"));
    }
    let mut sum = vec![0.0; first.len()];
    for g in raw {
        for (s, v) in sum.iter_mut().zip(g.values()) {
            *s += v;
        }
    }
    let k = raw.len() as f64;
    Ok(GradientVector::raw(sum.into_iter().map(|s| s / k).collect()))
}

fn mean_max(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (mean, values.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

fn papr_real_db(x: &[f64]) -> f64 {
    papr_real(x).map(linear_to_db).unwrap_or(0.0)
}

impl AirInterface {
    /// Aggregates one round of raw gradients. Random draws are keyed by
    /// `(seed, round)` so that schemes evaluated on the same round see the same
    /// fading and noise.
    pub fn aggregate(&self, raw: &[GradientVector], seed: u64, round: u64) -> Result<AggregationOutcome> {
        let target = exact_average(raw)?;
        if self.scheme.transport != Transport::Ideal && raw.len() != self.env.positions.len() {
            return Err(Error::invalid(format!(
                "{} gradients for {} placed UEs",
                raw.len(),
                self.env.positions.len()
            )));
        }
        let stats = compute_norm_stats(raw)?;
        let normalized: Vec<GradientVector> = raw.iter().map(|g| normalize(g, stats)).collect();
        let (recovered, tx) = match self.scheme.transport {
            Transport::Ideal => (target.clone(), self.ideal_stats(&normalized)),
            Transport::SingleCarrier => self.single_carrier(&normalized, stats, seed, round)?,
            Transport::Ofdm => self.ofdm(&normalized, stats, seed, round)?,
        };
        Ok(AggregationOutcome {
            recovered,
            target,
            stats: tx,
        })
    }

    fn ideal_stats(&self, normalized: &[GradientVector]) -> TransmitStats {
        let paprs: Vec<f64> = normalized.iter().map(|g| papr_real_db(g.values())).collect();
        let (mean, max) = mean_max(&paprs);
        TransmitStats {
            papr_mean_db: mean,
            papr_max_db: max,
            papr_clipped_mean_db: mean,
            papr_clipped_max_db: max,
            mse_analytic: 0.0,
            icf_iters_mean: 0.0,
            icf_converged_frac: 0.0,
            oob_final_dbm: OOB_FLOOR_DBM,
            peak_excess_db_max: 0.0,
            clipped_fraction: 0.0,
            alpha_mean: 0.0,
            ue_powers_mw: Vec::new(),
        }
    }

    /// Flat-fading gains `h_k` for this round.
    pub fn flat_gains(&self, seed: u64, round: u64) -> Result<ChannelGains> {
        let h = map_indexed(self.exec, self.env.positions.len(), |k| {
            draw_flat_channel(
                &self.env.positions[k],
                &self.env.channel,
                &mut stream(seed, Purpose::Fading, round, k as u64),
            )
        });
        ChannelGains::new(h)
    }

    /// Multipath realizations for this round.
    pub fn multipath(&self, seed: u64, round: u64) -> Result<Vec<ChannelRealization>> {
        try_map_indexed(self.exec, self.env.positions.len(), |k| {
            draw_multipath(
                &self.env.positions[k],
                &self.env.channel,
                self.ofdm.subcarriers,
                &mut stream(seed, Purpose::Fading, round, k as u64),
            )
        })
    }

    fn single_carrier(
        &self,
        normalized: &[GradientVector],
        stats: NormalizationStats,
        seed: u64,
        round: u64,
    ) -> Result<(GradientVector, TransmitStats)> {
        let ues = normalized.len();
        let entries = normalized[0].len();
        let gains = self.flat_gains(seed, round)?;
        let sol = solve_power_alloc(&gains, self.link.p_avg_mw, self.link.noise_var)?;
        let level = self.link.clip_level(self.scheme.clip)?;
        let per_ue = map_indexed(self.exec, ues, |k| {
            let g = &normalized[k];
            let x = transmit_clipped(g, sol.powers[k], level);
            let amp = sol.powers[k].sqrt();
            let clipped = g.values().iter().filter(|v| (amp * *v).abs() > level.a_max()).count();
            (papr_real_db(g.values()), papr_real_db(&x), clipped, x)
        });
        let papr: Vec<f64> = per_ue.iter().map(|u| u.0).collect();
        let papr_clipped: Vec<f64> = per_ue.iter().map(|u| u.1).collect();
        let clipped: usize = per_ue.iter().map(|u| u.2).sum();
        let signals: Vec<Vec<f64>> = per_ue.into_iter().map(|u| u.3).collect();
        let y = superpose_receive(
            &signals,
            gains.as_slice(),
            self.link.noise_var,
            &mut stream(seed, Purpose::Noise, round, 0),
        )?;
        let recovered = recover(&y, sol.alpha, ues, stats);
        let (papr_mean_db, papr_max_db) = mean_max(&papr);
        let (papr_clipped_mean_db, papr_clipped_max_db) = mean_max(&papr_clipped);
        let tx = TransmitStats {
            papr_mean_db,
            papr_max_db,
            papr_clipped_mean_db,
            papr_clipped_max_db,
            mse_analytic: analytic_mse_sc(&sol, &gains, self.link.noise_var, stats, entries, ues) / entries as f64,
            icf_iters_mean: 0.0,
            icf_converged_frac: 0.0,
            oob_final_dbm: OOB_FLOOR_DBM,
            peak_excess_db_max: 0.0,
            clipped_fraction: clipped as f64 / (ues * entries) as f64,
            alpha_mean: sol.alpha,
            ue_powers_mw: sol.powers,
        };
        Ok((recovered, tx))
    }

    fn ofdm(
        &self,
        normalized: &[GradientVector],
        stats: NormalizationStats,
        seed: u64,
        round: u64,
    ) -> Result<(GradientVector, TransmitStats)> {
        let ues = normalized.len();
        let entries = normalized[0].len();
        let m = self.ofdm.subcarriers;
        let plan = OfdmSymbolPlan::new(entries, m)?;
        let channels = self.multipath(seed, round)?;
        let magnitudes: Vec<Vec<f64>> = channels.iter().map(ChannelRealization::magnitudes).collect();
        let sols = subcarrier_alloc(&magnitudes, self.link.p_avg_mw, self.link.noise_var)?;
        let alphas: Vec<f64> = sols.iter().map(|s| s.alpha).collect();
        let b: Vec<_> = (0..ues)
            .map(|k| {
                let p: Vec<f64> = sols.iter().map(|s| s.powers[k]).collect();
                precoders(&p, &channels[k].freq_response)
            })
            .collect();
        let icf_cfg = IcfConfig {
            clip: self.link.clip_level(true)?,
            oob_threshold_dbm: self.ofdm.oob_threshold_dbm,
            max_iters: self.ofdm.max_iters,
            l_os: self.ofdm.l_os,
        };

        let symbols = try_map_indexed(self.exec, plan.symbols(), |l| -> Result<SymbolOutcome> {
            let mut out = SymbolOutcome::default();
            let mut nyquist = Vec::with_capacity(ues);
            for k in 0..ues {
                let slice = plan.slice(normalized[k].values(), l);
                let s = modulate_symbol(&slice, &b[k], self.ofdm.l_os)?;
                let before = papr_db_or_zero(&s);
                out.papr.push(before);
                if self.scheme.clip {
                    let res = icf(&s, &icf_cfg)?;
                    out.papr_clipped.push(res.report.papr_after_db);
                    nyquist.push(to_nyquist(&res.spectrum, m)?);
                    out.icf.push(res.report);
                } else {
                    out.papr_clipped.push(before);
                    nyquist.push(idft_paper(&symbol_spectrum(&slice, &b[k])?));
                }
            }
            let y = transmit_through_channel(
                &nyquist,
                &channels,
                self.link.noise_var,
                &mut stream(seed, Purpose::Noise, round, l as u64),
            )?;
            out.estimate = demodulate_recover(&y, &alphas, ues, stats)?;
            Ok(out)
        })?;

        let mut recovered = Vec::with_capacity(entries);
        for (l, sym) in symbols.iter().enumerate() {
            for (sub, v) in sym.estimate.iter().enumerate() {
                if plan.index(l, sub).is_some() {
                    recovered.push(*v);
                }
            }
        }
        let papr: Vec<f64> = symbols.iter().flat_map(|s| s.papr.iter().copied()).collect();
        let papr_clipped: Vec<f64> = symbols.iter().flat_map(|s| s.papr_clipped.iter().copied()).collect();
        let reports: Vec<&IcfReport> = symbols.iter().flat_map(|s| s.icf.iter()).collect();
        let (papr_mean_db, papr_max_db) = mean_max(&papr);
        let (papr_clipped_mean_db, papr_clipped_max_db) = mean_max(&papr_clipped);
        // an empty f64 sum is -0.0, so averages over no reports are spelled out
        let average = |f: &dyn Fn(&IcfReport) -> f64| {
            if reports.is_empty() {
                0.0
            } else {
                reports.iter().map(|r| f(r)).sum::<f64>() / reports.len() as f64
            }
        };

        let per_subcarrier_mse: Vec<f64> = (0..m)
            .map(|sub| subcarrier_mse(&sols[sub], &magnitudes, sub, self.link.noise_var, stats, ues))
            .collect::<Result<_>>()?;
        let mse_analytic = (0..entries).map(|n| per_subcarrier_mse[n % m]).sum::<f64>() / entries as f64;

        let tx = TransmitStats {
            papr_mean_db,
            papr_max_db,
            papr_clipped_mean_db,
            papr_clipped_max_db,
            mse_analytic,
            icf_iters_mean: average(&|r| r.iterations_used as f64),
            icf_converged_frac: average(&|r| f64::from(u8::from(r.converged))),
            oob_final_dbm: reports.iter().map(|r| r.final_oob_dbm).fold(OOB_FLOOR_DBM, f64::max),
            peak_excess_db_max: reports.iter().map(|r| r.residual_peak_excess_db).fold(0.0, f64::max),
            clipped_fraction: average(&|r| r.clipped_fraction),
            alpha_mean: alphas.iter().sum::<f64>() / m as f64,
            ue_powers_mw: (0..ues).map(|k| sols.iter().map(|s| s.powers[k]).sum()).collect(),
        };
        Ok((GradientVector::raw(recovered), tx))
    }
}

#[derive(Default)]
struct SymbolOutcome {
    estimate: Vec<f64>,
    papr: Vec<f64>,
    papr_clipped: Vec<f64>,
    icf: Vec<IcfReport>,
}

fn subcarrier_mse(
    sol: &PowerSolution,
    magnitudes: &[Vec<f64>],
    sub: usize,
    noise_var: f64,
    stats: NormalizationStats,
    ues: usize,
) -> Result<f64> {
    let gains = ChannelGains::new(magnitudes.iter().map(|row| row[sub]).collect())?;
    Ok(analytic_mse_subcarrier(sol, &gains, noise_var, stats, ues))
}
