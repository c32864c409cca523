//! Direct O(M²) transforms under the same conventions as [`super::dft_paper`]
//! and [`super::idft_paper`]. Used as a reference for the fast path.

use num_complex::Complex64;
use std::f64::consts::PI;

fn twiddles(len: usize, sign: f64) -> Vec<Complex64> {
    (0..len)
        .map(|r| Complex64::from_polar(1.0, sign * 2.0 * PI * r as f64 / len as f64))
        .collect()
}

/// `s[i] = Σ_m x[m] e^{+j2πmi/M}`.
pub fn idft(bins: &[Complex64]) -> Vec<Complex64> {
    let len = bins.len();
    let tw = twiddles(len, 1.0);
    (0..len)
        .map(|i| {
            bins.iter()
                .enumerate()
                .map(|(m, &x)| x * tw[(m * i) % len])
                .sum()
        })
        .collect()
}

/// `Y[m] = (1/M) Σ_i y[i] e^{-j2πmi/M}`.
pub fn dft(samples: &[Complex64]) -> Vec<Complex64> {
    let len = samples.len();
    let tw = twiddles(len, -1.0);
    let scale = 1.0 / len as f64;
    (0..len)
        .map(|m| {
            samples
                .iter()
                .enumerate()
                .map(|(i, &y)| y * tw[(m * i) % len])
                .sum::<Complex64>()
                * scale
        })
        .collect()
}
