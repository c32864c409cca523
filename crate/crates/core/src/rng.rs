//! Keyed random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream whose 256-bit
//! key is the tuple `(master seed, purpose, a, b)`, typically `a = round` and
//! `b = UE index`. Streams are therefore independent of scheduling order and a
//! pure function of their coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Placement = 1,
    Fading = 2,
    Noise = 3,
    Batch = 4,
    Init = 5,
    Data = 6,
    Split = 7,
    Synthetic = 8,
}

pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> SimRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
