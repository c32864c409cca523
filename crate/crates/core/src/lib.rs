//! Over-the-air federated learning under instantaneous peak-power constraints.
//!
//! The crate simulates analog gradient aggregation over a fading multiple-access
//! channel for two uplinks:
//!
//! - single-carrier, one normalized gradient entry per channel use, hard-limited
//!   at the amplifier's amplitude ceiling;
//! - multi-carrier OFDM, one entry per subcarrier, with iterative clipping and
//!   filtering (ICF) applied to the oversampled waveform.
//!
//! Module map:
//!
//! | module | contents |
//! |---|---|
//! | [`dsp`] | DFT/IDFT with the asymmetric `1/M` convention, oversampling, clipping, filtering, PAPR |
//! | [`power`] | MSE-optimal threshold power control and its per-subcarrier decoupling |
//! | [`channel`] | UE placement, free-space path loss, Rayleigh and multipath fading |
//! | [`single_carrier`] | normalization, clipped transmission, superposition, recovery |
//! | [`ofdm`] | symbol mapping, modulation, ICF, multipath transmission, demodulation |
//! | [`fl`] | toy models, datasets, FedSGD rounds with pluggable aggregation |
//! | [`experiment`] | configuration, presets, seeded runs, CSV / JSON-lines metrics |

pub mod channel;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod fl;
pub mod ofdm;
pub mod par;
pub mod power;
pub mod rng;
pub mod single_carrier;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use par::Execution;
