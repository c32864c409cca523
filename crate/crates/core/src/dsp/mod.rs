//! Transforms, oversampling, clipping and power measurements.
//!
//! Transform convention: the inverse transform carries no prefactor and the
//! forward transform carries `1/M`,
//!
//! ```text
//! s[i] = Σ_m G[m] e^{+j2πmi/M}          (idft_paper)
//! Y[m] = (1/M) Σ_i y[i] e^{-j2πmi/M}    (dft_paper)
//! ```
//!
//! so a time-domain CN(0, σ²M) noise sample maps to CN(0, σ²) per bin and
//! `Σ_i |s[i]|² = M · Σ_m |Y[m]|²`. Amplitudes are in √mW, so `|x|²` reads
//! directly in mW.

pub mod direct;

use crate::error::{Error, Result};
use crate::units::mw_to_dbm;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

/// Value reported by [`oob_power_dbm`] when there is no out-of-band energy.
pub const OOB_FLOOR_DBM: f64 = -200.0;

fn all_finite(xs: &[Complex64]) -> bool {
    xs.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(bins: Vec<Complex64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::invalid("spectrum must have at least one bin"));
        }
        if !all_finite(&bins) {
            return Err(Error::invalid("spectrum bins must be finite"));
        }
        Ok(Spectrum { bins })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn into_bins(self) -> Vec<Complex64> {
        self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Σ_m |X[m]|².
    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|x| x.norm_sqr()).sum()
    }
}

/// Complex baseband samples. `oversampling` is the factor over the Nyquist
/// rate (1 for a Nyquist-rate signal).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<Complex64>,
    oversampling: usize,
}

impl TimeSignal {
    pub fn new(samples: Vec<Complex64>, oversampling: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("time signal must have at least one sample"));
        }
        if oversampling == 0 || !samples.len().is_multiple_of(oversampling) {
            return Err(Error::invalid(format!(
                "length {} is not a positive multiple of oversampling factor {}",
                samples.len(),
                oversampling
            )));
        }
        if !all_finite(&samples) {
            return Err(Error::invalid("time samples must be finite"));
        }
        Ok(TimeSignal {
            samples,
            oversampling,
        })
    }

    pub fn nyquist(samples: Vec<Complex64>) -> Result<Self> {
        Self::new(samples, 1)
    }

    pub fn from_real(samples: &[f64]) -> Result<Self> {
        Self::nyquist(samples.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    /// Length at the Nyquist rate (`len / oversampling`).
    pub fn base_len(&self) -> usize {
        self.samples.len() / self.oversampling
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    pub fn peak_power(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max)
    }
}

/// Instantaneous amplitude ceiling `A_max` (√mW); `A_max²` is the peak input power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipLevel {
    a_max: f64,
}

impl ClipLevel {
    pub fn new(a_max: f64) -> Result<Self> {
        if a_max.is_nan() || a_max < 0.0 {
            return Err(Error::invalid(format!("clip amplitude must be >= 0, got {a_max}")));
        }
        Ok(ClipLevel { a_max })
    }

    pub fn from_peak_power_mw(p_peak_mw: f64) -> Result<Self> {
        if p_peak_mw.is_nan() || p_peak_mw < 0.0 {
            return Err(Error::invalid(format!("peak power must be >= 0, got {p_peak_mw}")));
        }
        Self::new(p_peak_mw.sqrt())
    }

    /// Infinite ceiling: the clipper becomes the identity.
    pub fn disabled() -> Self {
        ClipLevel { a_max: f64::INFINITY }
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub fn peak_power(&self) -> f64 {
        self.a_max * self.a_max
    }

    pub fn is_disabled(&self) -> bool {
        self.a_max.is_infinite()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
}

/// `s[i] = Σ_m G[m] e^{j2πmi/M}`, no prefactor. The result is at the Nyquist
/// rate of its own length; callers that zero-padded track oversampling via
/// [`idft_oversampled`].
pub fn idft_paper(spectrum: &Spectrum) -> TimeSignal {
    idft_oversampled(spectrum, 1).expect("oversampling 1 divides every length")
}

/// [`idft_paper`] tagging the output with an oversampling factor.
pub fn idft_oversampled(spectrum: &Spectrum, l_os: usize) -> Result<TimeSignal> {
    let mut buf = spectrum.bins.clone();
    fft_in_place(&mut buf, true);
    TimeSignal::new(buf, l_os)
}

/// `Y[m] = (1/M) Σ_i y[i] e^{-j2πmi/M}`; exact inverse of [`idft_paper`].
pub fn dft_paper(signal: &TimeSignal) -> Spectrum {
    let mut buf = signal.samples.clone();
    fft_in_place(&mut buf, false);
    let scale = 1.0 / buf.len() as f64;
    for x in &mut buf {
        *x *= scale;
    }
    Spectrum { bins: buf }
}

/// Zero-pads an `M`-bin spectrum to `l_os · M` bins (bins `[M, l_os·M)` zero).
pub fn oversample_pad(spectrum: &Spectrum, l_os: usize) -> Result<Spectrum> {
    if l_os == 0 {
        return Err(Error::invalid("oversampling factor must be >= 1"));
    }
    let mut bins = spectrum.bins.clone();
    bins.resize(spectrum.len() * l_os, Complex64::new(0.0, 0.0));
    Ok(Spectrum { bins })
}

/// `min{1, A/|x|} · x`.
#[inline]
pub fn clip_sample(x: Complex64, a_max: f64) -> Complex64 {
    let mag = x.norm();
    if mag <= a_max {
        x
    } else {
        x * (a_max / mag)
    }
}

#[inline]
pub fn clip_real(x: f64, a_max: f64) -> f64 {
    x.clamp(-a_max, a_max)
}

/// Phase-preserving hard limiter applied sample by sample.
pub fn clip_amplitude(signal: &TimeSignal, level: ClipLevel) -> TimeSignal {
    TimeSignal {
        samples: signal
            .samples
            .iter()
            .map(|&x| clip_sample(x, level.a_max))
            .collect(),
        oversampling: signal.oversampling,
    }
}

fn check_in_band(spectrum: &Spectrum, in_band: usize) -> Result<()> {
    if in_band == 0 || in_band > spectrum.len() {
        return Err(Error::invalid(format!(
            "in-band width {in_band} must be in 1..={}",
            spectrum.len()
        )));
    }
    Ok(())
}

/// Rectangular low-pass: keeps bins `[0, in_band)`, zeroes the rest.
pub fn rect_filter(spectrum: &Spectrum, in_band: usize) -> Result<Spectrum> {
    check_in_band(spectrum, in_band)?;
    let mut bins = spectrum.bins.clone();
    for b in &mut bins[in_band..] {
        *b = Complex64::new(0.0, 0.0);
    }
    Ok(Spectrum { bins })
}

/// Out-of-band power `10·log10(Σ_{m ≥ in_band} |X[m]|²)` in dBm, never below `floor_dbm`.
pub fn oob_power_dbm_with_floor(spectrum: &Spectrum, in_band: usize, floor_dbm: f64) -> Result<f64> {
    check_in_band(spectrum, in_band)?;
    let p: f64 = spectrum.bins[in_band..].iter().map(|x| x.norm_sqr()).sum();
    if p == 0.0 {
        return Ok(floor_dbm);
    }
    Ok(mw_to_dbm(p).max(floor_dbm))
}

/// [`oob_power_dbm_with_floor`] with the default floor of [`OOB_FLOOR_DBM`].
pub fn oob_power_dbm(spectrum: &Spectrum, in_band: usize) -> Result<f64> {
    oob_power_dbm_with_floor(spectrum, in_band, OOB_FLOOR_DBM)
}

fn papr_of_powers(powers: impl Iterator<Item = f64>) -> Result<f64> {
    let (mut peak, mut sum, mut n) = (0.0f64, 0.0f64, 0usize);
    for p in powers {
        peak = peak.max(p);
        sum += p;
        n += 1;
    }
    if sum == 0.0 {
        return Err(Error::UndefinedPapr);
    }
    Ok(peak / (sum / n as f64))
}

/// `max_i |s[i]|² / mean_i |s[i]|²` as a linear ratio.
pub fn papr(signal: &TimeSignal) -> Result<f64> {
    papr_of_powers(signal.samples.iter().map(|x| x.norm_sqr()))
}

/// PAPR of a real-valued waveform.
pub fn papr_real(samples: &[f64]) -> Result<f64> {
    papr_of_powers(samples.iter().map(|x| x * x))
}

/// `out[i] = Σ_c taps[c] · in[(i − c) mod M]`.
pub fn circ_conv(signal: &TimeSignal, taps: &[Complex64]) -> Result<TimeSignal> {
    let len = signal.len();
    if taps.is_empty() || taps.len() > len {
        return Err(Error::invalid(format!(
            "tap count {} must be in 1..={len}",
            taps.len()
        )));
    }
    let samples = (0..len)
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(c, &h)| h * signal.samples[(i + len - c) % len])
                .sum()
        })
        .collect();
    Ok(TimeSignal {
        samples,
        oversampling: signal.oversampling,
    })
}
