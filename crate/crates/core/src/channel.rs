//! UE placement and channel generation.
//!
//! Large-scale gain is free-space (Friis) path loss; small-scale fading is
//! Rayleigh with unit mean power. Single-carrier links use one flat real gain;
//! OFDM links use a tapped delay line with an exponential power-delay profile
//! and its per-subcarrier frequency response.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub carrier_hz: f64,
    /// Number of multipath taps, `C + 1`.
    pub num_taps: usize,
    /// Exponential power-delay-profile decay constant, in taps.
    pub tap_decay: f64,
    /// Distances below this are clamped before evaluating path loss (m).
    pub d_min: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            carrier_hz: 2.6e9,
            num_taps: 4,
            tap_decay: 1.0,
            d_min: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UePosition {
    pub x: f64,
    pub y: f64,
}

impl UePosition {
    pub fn distance(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// RMS amplitude gain, `√(Σ_c |taps[c]|²)`.
    pub flat_gain: f64,
    /// Impulse response `h[0..=C]`.
    pub taps: Vec<Complex64>,
    /// `H[m] = Σ_c h[c] e^{-j2πmc/M}`, i.e. `M · dft_paper(zero-padded taps)`.
    pub freq_response: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn from_taps(taps: Vec<Complex64>, subcarriers: usize) -> Result<Self> {
        if taps.is_empty() || taps.len() > subcarriers {
            return Err(Error::invalid(format!(
                "tap count {} must be in 1..={subcarriers}",
                taps.len()
            )));
        }
        let freq_response = (0..subcarriers)
            .map(|m| {
                taps.iter()
                    .enumerate()
                    .map(|(c, &h)| {
                        let r = (m * c) % subcarriers;
                        h * Complex64::from_polar(1.0, -2.0 * PI * r as f64 / subcarriers as f64)
                    })
                    .sum()
            })
            .collect();
        let flat_gain = taps.iter().map(|h| h.norm_sqr()).sum::<f64>().sqrt();
        Ok(ChannelRealization {
            flat_gain,
            taps,
            freq_response,
        })
    }

    /// `|H[m]|` per subcarrier.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.freq_response.iter().map(|h| h.norm()).collect()
    }
}

/// Area-uniform positions on a disk centred on the base station.
pub fn place_ues<R: Rng + ?Sized>(count: usize, radius: f64, rng: &mut R) -> Vec<UePosition> {
    (0..count)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            UePosition {
                x: r * theta.cos(),
                y: r * theta.sin(),
            }
        })
        .collect()
}

/// Free-space amplitude gain `c / (4π d f)` with `d` clamped to `d_min`.
pub fn path_gain_clamped(distance: f64, carrier_hz: f64, d_min: f64) -> f64 {
    let d = if distance < d_min {
        log::debug!("distance {distance} m clamped to {d_min} m");
        d_min
    } else {
        distance
    };
    SPEED_OF_LIGHT / (4.0 * PI * d * carrier_hz)
}

/// [`path_gain_clamped`] with the default 1 m clamp.
pub fn path_gain(distance: f64, carrier_hz: f64) -> f64 {
    path_gain_clamped(distance, carrier_hz, ChannelConfig::default().d_min)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance).sqrt() * FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Flat gain `h_k = path_gain · r`, `r` Rayleigh with `E[r²] = 1`.
pub fn draw_flat_channel<R: Rng + ?Sized>(position: &UePosition, cfg: &ChannelConfig, rng: &mut R) -> f64 {
    let pg = path_gain_clamped(position.distance(), cfg.carrier_hz, cfg.d_min);
    let r = complex_gaussian(rng, 1.0).norm();
    // zero has probability zero but would break the positive-gain contract
    pg * r.max(f64::MIN_POSITIVE)
}

/// Tapped-delay-line Rayleigh channel with an exponential power-delay profile
/// normalized to unit total power, scaled by the path gain.
pub fn draw_multipath<R: Rng + ?Sized>(
    position: &UePosition,
    cfg: &ChannelConfig,
    subcarriers: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if cfg.num_taps == 0 || cfg.num_taps > subcarriers {
        return Err(Error::invalid(format!(
            "tap count {} must be in 1..={subcarriers}",
            cfg.num_taps
        )));
    }
    let pg = path_gain_clamped(position.distance(), cfg.carrier_hz, cfg.d_min);
    let profile: Vec<f64> = (0..cfg.num_taps)
        .map(|c| (-(c as f64) / cfg.tap_decay).exp())
        .collect();
    let total: f64 = profile.iter().sum();
    let taps = profile
        .iter()
        .map(|w| pg * complex_gaussian(rng, w / total))
        .collect();
    ChannelRealization::from_taps(taps, subcarriers)
}
