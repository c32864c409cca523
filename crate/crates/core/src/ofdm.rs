//! Multi-carrier OFDM over-the-air aggregation.
//!
//! Gradient entry `n = ℓM + m` rides subcarrier `m` of symbol `ℓ`, scaled by the
//! precoder `b = √p · e^{-jφ}` that cancels the channel phase. Each symbol is
//! synthesized at `L_os` times the Nyquist rate, optionally passed through
//! iterative clipping and filtering, and handed to the channel as the Nyquist
//! signal of its (exactly in-band) final spectrum.

use crate::channel::ChannelRealization;
use crate::dsp::{
    circ_conv, clip_amplitude, dft_paper, idft_oversampled, idft_paper, oob_power_dbm, oversample_pad, papr,
    rect_filter, ClipLevel, Spectrum, TimeSignal, OOB_FLOOR_DBM,
};
use crate::error::{Error, Result};
use crate::power::{ChannelGains, PowerSolution};
use crate::single_carrier::NormalizationStats;
use crate::units::linear_to_db;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

/// Mapping of an `N`-entry gradient onto `L = ⌈N/M⌉` symbols of `M` subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OfdmSymbolPlan {
    subcarriers: usize,
    entries: usize,
}

impl OfdmSymbolPlan {
    pub fn new(entries: usize, subcarriers: usize) -> Result<Self> {
        if subcarriers == 0 {
            return Err(Error::invalid("need at least one subcarrier"));
        }
        Ok(OfdmSymbolPlan { subcarriers, entries })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn entries(&self) -> usize {
        self.entries
    }

    pub fn symbols(&self) -> usize {
        self.entries.div_ceil(self.subcarriers)
    }

    /// Gradient index carried by subcarrier `m` of symbol `l`, or `None` for padding.
    pub fn index(&self, symbol: usize, subcarrier: usize) -> Option<usize> {
        let n = symbol * self.subcarriers + subcarrier;
        (subcarrier < self.subcarriers && n < self.entries).then_some(n)
    }

    /// The `M` values carried by symbol `l`; entries past `N` are zero.
    pub fn slice(&self, values: &[f64], symbol: usize) -> Vec<f64> {
        (0..self.subcarriers)
            .map(|m| self.index(symbol, m).map_or(0.0, |n| values[n]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcfConfig {
    pub clip: ClipLevel,
    pub oob_threshold_dbm: f64,
    pub max_iters: usize,
    pub l_os: usize,
}

impl IcfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("ICF needs max_iters >= 1"));
        }
        if self.l_os == 0 {
            return Err(Error::invalid("ICF needs l_os >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcfReport {
    pub iterations_used: usize,
    /// Out-of-band power after the first clip.
    pub first_oob_dbm: f64,
    /// Out-of-band power after the last clip.
    pub final_oob_dbm: f64,
    pub converged: bool,
    pub papr_before_db: f64,
    pub papr_after_db: f64,
    /// How far the returned signal's peak exceeds `A_max²`, 0 when it does not.
    pub residual_peak_excess_db: f64,
    /// Fraction of samples the first clip stage altered.
    pub clipped_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcfOutput {
    /// Last filtered, oversampled signal.
    pub signal: TimeSignal,
    /// Its spectrum; bins past the in-band width are exactly zero.
    pub spectrum: Spectrum,
    pub report: IcfReport,
}

/// PAPR in dB, reporting 0 dB for an all-zero signal.
pub(crate) fn papr_db_or_zero(signal: &TimeSignal) -> f64 {
    papr(signal).map(linear_to_db).unwrap_or(0.0)
}

/// `b[m] = √p[m] · e^{-j·arg H[m]}`.
pub fn precoders(powers: &[f64], freq_response: &[Complex64]) -> Vec<Complex64> {
    powers
        .iter()
        .zip(freq_response)
        .map(|(&p, h)| Complex64::from_polar(p.max(0.0).sqrt(), -h.arg()))
        .collect()
}

/// Frequency-domain symbol `G[m] = g[m] · b[m]`.
pub fn symbol_spectrum(slice: &[f64], precoders: &[Complex64]) -> Result<Spectrum> {
    if slice.len() != precoders.len() {
        return Err(Error::invalid(format!(
            "{} gradient values for {} precoders",
            slice.len(),
            precoders.len()
        )));
    }
    Spectrum::new(slice.iter().zip(precoders).map(|(g, b)| b * g).collect())
}

/// Oversampled time-domain symbol `s[i] = Σ_{m<M} G[m] e^{j2πmi/(L_os M)}`.
pub fn modulate_symbol(slice: &[f64], precoders: &[Complex64], l_os: usize) -> Result<TimeSignal> {
    let g = symbol_spectrum(slice, precoders)?;
    idft_oversampled(&oversample_pad(&g, l_os)?, l_os)
}

/// Iterative clipping and filtering of one oversampled symbol.
///
/// Each iteration clips, measures out-of-band power of the clipped spectrum,
/// filters it and transforms back. The loop stops once that power is at or
/// below the threshold, or after `max_iters` iterations.
pub fn icf(signal: &TimeSignal, cfg: &IcfConfig) -> Result<IcfOutput> {
    cfg.validate()?;
    if signal.oversampling() != cfg.l_os {
        return Err(Error::invalid(format!(
            "signal oversampled by {} but ICF configured for {}",
            signal.oversampling(),
            cfg.l_os
        )));
    }
    let in_band = signal.base_len();
    let a_max = cfg.clip.a_max();
    let clipped_fraction =
        signal.samples().iter().filter(|x| x.norm() > a_max).count() as f64 / signal.len() as f64;

    let mut current = signal.clone();
    let mut spectrum = dft_paper(signal);
    let mut first_oob = OOB_FLOOR_DBM;
    let mut last_oob = OOB_FLOOR_DBM;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        let clipped = dft_paper(&clip_amplitude(&current, cfg.clip));
        last_oob = oob_power_dbm(&clipped, in_band)?;
        if iterations == 1 {
            first_oob = last_oob;
        }
        spectrum = rect_filter(&clipped, in_band)?;
        current = idft_oversampled(&spectrum, cfg.l_os)?;
        if last_oob <= cfg.oob_threshold_dbm {
            converged = true;
            break;
        }
    }

    let excess = if cfg.clip.is_disabled() || current.peak_power() == 0.0 {
        0.0
    } else {
        linear_to_db(current.peak_power() / cfg.clip.peak_power()).max(0.0)
    };
    let report = IcfReport {
        iterations_used: iterations,
        first_oob_dbm: first_oob,
        final_oob_dbm: last_oob,
        converged,
        papr_before_db: papr_db_or_zero(signal),
        papr_after_db: papr_db_or_zero(&current),
        residual_peak_excess_db: excess,
        clipped_fraction,
    };
    Ok(IcfOutput {
        signal: current,
        spectrum,
        report,
    })
}

/// Nyquist-rate signal synthesized from the first `in_band` bins of an
/// oversampled spectrum.
pub fn to_nyquist(spectrum: &Spectrum, in_band: usize) -> Result<TimeSignal> {
    if in_band == 0 || in_band > spectrum.len() {
        return Err(Error::invalid(format!("in-band width {in_band} out of range")));
    }
    Ok(idft_paper(&Spectrum::new(spectrum.bins()[..in_band].to_vec())?))
}

/// `y = Σ_k s_k ⊛ h_k + n`, `n[i] ~ CN(0, σ² M)`. `noise_var` is the
/// per-subcarrier variance `σ²`.
pub fn transmit_through_channel<R: Rng + ?Sized>(
    signals: &[TimeSignal],
    channels: &[ChannelRealization],
    noise_var: f64,
    rng: &mut R,
) -> Result<TimeSignal> {
    if signals.is_empty() || signals.len() != channels.len() {
        return Err(Error::invalid(format!(
            "{} signals for {} channels",
            signals.len(),
            channels.len()
        )));
    }
    let len = signals[0].len();
    if signals.iter().any(|s| s.len() != len || s.oversampling() != 1) {
        return Err(Error::invalid("channel input must be equal-length Nyquist-rate symbols"));
    }
    if noise_var.is_nan() || noise_var < 0.0 {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_var}")));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); len];
    for (s, ch) in signals.iter().zip(channels) {
        for (acc, v) in y.iter_mut().zip(circ_conv(s, &ch.taps)?.samples()) {
            *acc += v;
        }
    }
    if noise_var > 0.0 {
        let sigma = (noise_var * len as f64).sqrt() * FRAC_1_SQRT_2;
        for acc in &mut y {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *acc += Complex64::new(sigma * re, sigma * im);
        }
    }
    TimeSignal::nyquist(y)
}

/// `g̃[m] = Γ √α_m Re(Y[m]) / K + μ` with `Y = dft_paper(y)`.
pub fn demodulate_recover(y: &TimeSignal, alphas: &[f64], ues: usize, stats: NormalizationStats) -> Result<Vec<f64>> {
    if alphas.len() != y.len() {
        return Err(Error::invalid(format!(
            "{} denoising factors for {} samples",
            alphas.len(),
            y.len()
        )));
    }
    let spectrum = dft_paper(y);
    Ok(spectrum
        .bins()
        .iter()
        .zip(alphas)
        .map(|(v, a)| stats.gamma * a.sqrt() * v.re / ues as f64 + stats.mu)
        .collect())
}

/// `(Γ² / K²) (Σ_k (|H_k| √(α p_k) − 1)² + α σ²)` for one subcarrier.
pub fn analytic_mse_subcarrier(
    sol: &PowerSolution,
    gains: &ChannelGains,
    noise_var: f64,
    stats: NormalizationStats,
    ues: usize,
) -> f64 {
    let misalignment: f64 = sol.alignment(gains).iter().map(|a| (a - 1.0).powi(2)).sum();
    stats.gamma.powi(2) / (ues * ues) as f64 * (misalignment + sol.alpha * noise_var)
}

/// Per-symbol PAPR of an oversampled signal.
pub fn papr_ofdm(signal: &TimeSignal) -> Result<f64> {
    papr(signal)
}
