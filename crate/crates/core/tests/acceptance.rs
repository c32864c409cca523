//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails. Oracles here are written independently of the
//! library code they check.

use num_complex::Complex64;
use otafl_core::channel::{draw_multipath, place_ues, ChannelConfig};
use otafl_core::dsp::{
    circ_conv, clip_amplitude, dft_paper, idft_paper, ClipLevel, Spectrum, TimeSignal,
};
use otafl_core::experiment::{
    emit_metrics, initial_state, run_experiment, scenarios, ExperimentConfig, Format,
};
use otafl_core::fl::aggregation::Transport;
use otafl_core::fl::engine::{local_gradients, run_round, sample_batch, true_square_error, FlConfig, FlState};
use otafl_core::fl::Sample;
use otafl_core::ofdm::{
    analytic_mse_subcarrier, icf, modulate_symbol, precoders, symbol_spectrum, transmit_through_channel, IcfConfig,
};
use otafl_core::power::{solve_power_alloc, subcarrier_alloc, ChannelGains};
use otafl_core::rng::{stream, Purpose, SimRng};
use otafl_core::single_carrier::{
    analytic_mse_sc, papr_gradient, recover, superpose_receive, transmit_clipped, GradientVector, NormalizationStats,
};
use otafl_core::units::{dbm_to_mw, linear_to_db};
use otafl_core::Execution;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Binomial, DiscreteCDF};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const P_AVG_DBM: f64 = 23.0;
const P_INST_DBM: f64 = 26.0;
const SUBCARRIER_HZ: f64 = 60e3;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn normal(rng: &mut SimRng) -> f64 {
    rng.sample(StandardNormal)
}

fn cnormal(rng: &mut SimRng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    Complex64::new(s * normal(rng), s * normal(rng))
}

fn log_uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// `Y[m] = (1/M) Σ_i s[i] e^{-j2πmi/M}`, evaluated directly.
fn oracle_dft(s: &[Complex64]) -> Vec<Complex64> {
    let m = s.len();
    (0..m)
        .map(|k| {
            s.iter()
                .enumerate()
                .map(|(i, x)| x * Complex64::from_polar(1.0, -2.0 * PI * ((k * i) % m) as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64
        })
        .collect()
}

fn max_norm_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn c1_transforms() -> Verdict {
    let start = Instant::now();
    let mut rng = stream(1, Purpose::Synthetic, 1, 0);
    let mut worst_roundtrip: f64 = 0.0;
    for len in [2usize, 8, 32, 128, 4096] {
        let bins: Vec<Complex64> = (0..len).map(|_| cnormal(&mut rng, 1.0)).collect();
        let back = dft_paper(&idft_paper(&Spectrum::new(bins.clone()).unwrap()));
        worst_roundtrip = worst_roundtrip.max(max_norm_diff(back.bins(), &bins));
    }
    let mut worst_conv: f64 = 0.0;
    for trial in 0..100 {
        let m = [8usize, 16, 32, 64][trial % 4];
        let taps_len = 1 + rng.random_range(0..m.min(6));
        let s: Vec<Complex64> = (0..m).map(|_| cnormal(&mut rng, 1.0)).collect();
        let h: Vec<Complex64> = (0..taps_len).map(|_| cnormal(&mut rng, 1.0)).collect();
        // direct circular convolution, then the direct DFT
        let conv: Vec<Complex64> = (0..m)
            .map(|i| (0..taps_len).map(|c| h[c] * s[(i + m - c) % m]).sum())
            .collect();
        let expect = oracle_dft(&conv);
        let got = dft_paper(&circ_conv(&TimeSignal::nyquist(s.clone()).unwrap(), &h).unwrap());
        // and the theorem itself: dft(s ⊛ h) = M · dft(s) · dft(h_padded)
        let mut padded = h.clone();
        padded.resize(m, Complex64::new(0.0, 0.0));
        let (ds, dh) = (oracle_dft(&s), oracle_dft(&padded));
        let theorem: Vec<Complex64> = ds.iter().zip(&dh).map(|(a, b)| a * b * m as f64).collect();
        let scale = expect.iter().map(|v| v.norm()).fold(0.0, f64::max);
        worst_conv = worst_conv
            .max(max_norm_diff(got.bins(), &expect) / scale)
            .max(max_norm_diff(&theorem, &expect) / scale);
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst_roundtrip <= 1e-10 && worst_conv <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("roundtrip max err {worst_roundtrip:.2e} (<=1e-10), convolution rel err {worst_conv:.2e} (<=1e-9), {elapsed:.2?} (<5s)"),
    )
}

/// `min_t Σ_k (1 − h_k t √P)₊² + t² σ²` over a dense log grid of `t = √α`,
/// refined by golden-section search in the bracketing cell.
fn oracle_min_objective(h: &[f64], p: f64, s2: f64) -> f64 {
    let f = |t: f64| h.iter().map(|&g| (1.0 - g * t * p.sqrt()).max(0.0).powi(2)).sum::<f64>() + t * t * s2;
    let hmax = h.iter().cloned().fold(0.0, f64::max);
    let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum_h: f64 = h.iter().sum();
    let sum_h2: f64 = h.iter().map(|g| g * g).sum();
    let t_small = p.sqrt() * sum_h / (s2 + p * sum_h2);
    let lo = (1e-3 / (hmax * p.sqrt())).min(0.1 * t_small).ln();
    let hi = (1.0 / (hmin * p.sqrt())).ln();
    let n = 200_000;
    let ts: Vec<f64> = (0..=n).map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp()).collect();
    let (best, _) = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| (i, f(t)))
        .fold((0, f64::INFINITY), |b, (i, v)| if v < b.1 { (i, v) } else { b });
    let (mut a, mut b) = (ts[best.saturating_sub(1)], ts[(best + 1).min(n)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(ts[best]).min(f(0.5 * (a + b)))
}

fn c2_power_control() -> Verdict {
    let start = Instant::now();
    let mut rng = stream(2, Purpose::Synthetic, 0, 0);
    let (mut worst_rel, mut worst_inv, mut worst_budget) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let k = rng.random_range(2..=8);
        let h: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 1e-5, 1e-2)).collect();
        let p = log_uniform(&mut rng, 1.0, 1000.0);
        let hmax = h.iter().cloned().fold(0.0, f64::max);
        let s2 = log_uniform(&mut rng, 1e-4, 1e2) * p * hmax * hmax;
        let gains = ChannelGains::new(h.clone()).unwrap();
        let sol = solve_power_alloc(&gains, p, s2).unwrap();
        let obj: f64 = h
            .iter()
            .zip(&sol.powers)
            .map(|(g, pk)| (g * (sol.alpha * pk).sqrt() - 1.0).powi(2))
            .sum::<f64>()
            + sol.alpha * s2;
        let oracle = oracle_min_objective(&h, p, s2);
        worst_rel = worst_rel.max((obj - oracle).abs() / oracle);
        worst_budget = worst_budget.max(sol.powers.iter().map(|pk| pk / p - 1.0).fold(f64::NEG_INFINITY, f64::max));
        // ranks 1..k* − 1 of the descending gain order invert their channel
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| h[b].total_cmp(&h[a]));
        for &i in order.iter().take(sol.k_star - 1) {
            worst_inv = worst_inv.max((h[i] * (sol.alpha * sol.powers[i]).sqrt() - 1.0).abs());
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst_rel <= 1e-6 && worst_inv <= 1e-9 && worst_budget <= 1e-12 && elapsed < Duration::from_secs(30),
        format!(
            "objective rel gap {worst_rel:.2e} (<=1e-6), inversion err {worst_inv:.2e} (<=1e-9), budget excess {worst_budget:.1e}, {elapsed:.2?} (<30s)"
        ),
    )
}

fn c3_analytic_mse() -> Verdict {
    let start = Instant::now();
    let trials = 100_000;
    let mut lines = Vec::new();
    let mut pass = true;

    // single-carrier: identity normalization, g_k ~ N(0, I)
    let entries = 4;
    for (case, ues) in [(0u64, 3usize), (1, 6)] {
        let mut rng = stream(3, Purpose::Synthetic, case, 0);
        let h: Vec<f64> = (0..ues).map(|_| log_uniform(&mut rng, 1e-4, 1e-3)).collect();
        let p = 200.0;
        let s2 = 1e-6;
        let gains = ChannelGains::new(h.clone()).unwrap();
        let sol = solve_power_alloc(&gains, p, s2).unwrap();
        let analytic = analytic_mse_sc(&sol, &gains, s2, NormalizationStats::IDENTITY, entries, ues);
        let mut noise = stream(3, Purpose::Noise, case, 0);
        let mut acc = 0.0;
        for _ in 0..trials {
            let g: Vec<GradientVector> = (0..ues)
                .map(|_| GradientVector::normalized((0..entries).map(|_| normal(&mut rng)).collect()))
                .collect();
            let x: Vec<Vec<f64>> = g
                .iter()
                .zip(&sol.powers)
                .map(|(gk, &pk)| transmit_clipped(gk, pk, ClipLevel::disabled()))
                .collect();
            let y = superpose_receive(&x, &h, s2, &mut noise).unwrap();
            let est = recover(&y, sol.alpha, ues, NormalizationStats::IDENTITY);
            for n in 0..entries {
                let target = g.iter().map(|gk| gk.values()[n]).sum::<f64>() / ues as f64;
                acc += (est.values()[n] - target).powi(2);
            }
        }
        let mc = acc / trials as f64;
        let rel = (mc / analytic - 1.0).abs();
        pass &= rel <= 0.02;
        lines.push(format!("sc K={ues} k*={} rel {rel:.4}", sol.k_star));
    }

    // OFDM: multipath channels, per-subcarrier budgets, complex estimate
    let ues = 4;
    let m = 32;
    let stats = NormalizationStats { mu: 0.0, gamma: 1.0 };
    let mut rng = stream(3, Purpose::Synthetic, 9, 0);
    let positions = place_ues(ues, 100.0, &mut rng);
    let channels: Vec<_> = positions
        .iter()
        .map(|pos| draw_multipath(pos, &ChannelConfig::default(), m, &mut rng).unwrap())
        .collect();
    let magnitudes: Vec<Vec<f64>> = channels.iter().map(|c| c.magnitudes()).collect();
    let s2 = dbm_to_mw(-110.0) * SUBCARRIER_HZ;
    let sols = subcarrier_alloc(&magnitudes, dbm_to_mw(P_AVG_DBM), s2).unwrap();
    let analytic: Vec<f64> = (0..m)
        .map(|sub| {
            let gains = ChannelGains::new(magnitudes.iter().map(|row| row[sub]).collect()).unwrap();
            analytic_mse_subcarrier(&sols[sub], &gains, s2, stats, ues)
        })
        .collect();
    let b: Vec<Vec<Complex64>> = (0..ues)
        .map(|k| {
            let p: Vec<f64> = sols.iter().map(|s| s.powers[k]).collect();
            precoders(&p, &channels[k].freq_response)
        })
        .collect();
    let mut noise = stream(3, Purpose::Noise, 9, 0);
    let mut acc_complex = vec![0.0; m];
    let mut acc_real = vec![0.0; m];
    for _ in 0..trials {
        let g: Vec<Vec<f64>> = (0..ues).map(|_| (0..m).map(|_| normal(&mut rng)).collect()).collect();
        let signals: Vec<TimeSignal> = (0..ues)
            .map(|k| idft_paper(&symbol_spectrum(&g[k], &b[k]).unwrap()))
            .collect();
        let y = dft_paper(&transmit_through_channel(&signals, &channels, s2, &mut noise).unwrap());
        for sub in 0..m {
            let target = g.iter().map(|gk| gk[sub]).sum::<f64>() / ues as f64;
            let est = y.bins()[sub] * (sols[sub].alpha.sqrt() / ues as f64);
            acc_complex[sub] += (est - target).norm_sqr();
            acc_real[sub] += (est.re - target).powi(2);
        }
    }
    let worst = (0..m)
        .map(|sub| (acc_complex[sub] / trials as f64 / analytic[sub] - 1.0).abs())
        .fold(0.0, f64::max);
    pass &= worst <= 0.03;
    let real_ratio = acc_real.iter().sum::<f64>() / acc_complex.iter().sum::<f64>();
    lines.push(format!("ofdm worst per-subcarrier rel {worst:.4} (real-part/complex MSE {real_ratio:.3})"));
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    Verdict::new(pass, format!("{}, {elapsed:.2?} (<60s)", lines.join("; ")))
}

fn c4_noise_bookkeeping() -> Verdict {
    let m = 32;
    let s2 = 0.7;
    let per_bin = 100_000;
    let zero = TimeSignal::nyquist(vec![Complex64::new(0.0, 0.0); m]).unwrap();
    let unit = otafl_core::channel::ChannelRealization::from_taps(vec![Complex64::new(1.0, 0.0)], m).unwrap();
    let mut rng = stream(4, Purpose::Noise, 0, 0);
    let mut acc = vec![0.0; m];
    let mut time_acc = 0.0;
    for _ in 0..per_bin {
        let y = transmit_through_channel(std::slice::from_ref(&zero), std::slice::from_ref(&unit), s2, &mut rng).unwrap();
        time_acc += y.energy();
        for (a, v) in acc.iter_mut().zip(dft_paper(&y).bins()) {
            *a += v.norm_sqr();
        }
    }
    let worst = acc.iter().map(|a| (a / per_bin as f64 / s2 - 1.0).abs()).fold(0.0, f64::max);
    let time_rel = time_acc / (per_bin * m) as f64 / (s2 * m as f64) - 1.0;
    Verdict::new(
        worst <= 0.02,
        format!("worst per-bin variance rel err {worst:.4} (<=0.02) over {per_bin} samples/bin; time-sample variance rel err {time_rel:.4}"),
    )
}

/// Heavy-tailed draw: a normal scaled by 1/√U.
fn heavy(rng: &mut SimRng) -> f64 {
    normal(rng) / rng.random::<f64>().max(1e-6).sqrt()
}

fn c5_peak_bound() -> Verdict {
    let p_avg = dbm_to_mw(P_AVG_DBM);
    let p_inst = dbm_to_mw(P_INST_DBM);
    let level = ClipLevel::from_peak_power_mw(p_inst).unwrap();
    let mut rng = stream(5, Purpose::Synthetic, 0, 0);
    let (mut sc_violations, mut ofdm_violations, mut samples) = (0usize, 0usize, 0usize);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let g = GradientVector::normalized((0..64).map(|_| heavy(&mut rng)).collect());
        let p = p_avg * rng.random::<f64>();
        for x in transmit_clipped(&g, p, level) {
            worst = worst.max(x * x - p_inst);
            sc_violations += usize::from(x * x > p_inst + 1e-12);
            samples += 1;
        }
    }
    let m = 32;
    for _ in 0..10_000 {
        let slice: Vec<f64> = (0..m).map(|_| heavy(&mut rng)).collect();
        let powers: Vec<f64> = (0..m).map(|_| p_avg / m as f64 * rng.random::<f64>()).collect();
        let h: Vec<Complex64> = (0..m).map(|_| cnormal(&mut rng, 1.0)).collect();
        let s = modulate_symbol(&slice, &precoders(&powers, &h), 4).unwrap();
        for x in clip_amplitude(&s, level).samples() {
            worst = worst.max(x.norm_sqr() - p_inst);
            ofdm_violations += usize::from(x.norm_sqr() > p_inst + 1e-12);
            samples += 1;
        }
    }
    Verdict::new(
        sc_violations == 0 && ofdm_violations == 0,
        format!(
            "violations sc {sc_violations}, ofdm {ofdm_violations} over {samples} samples; max |x|^2 - P_inst = {worst:.2e} mW"
        ),
    )
}

fn c6_icf() -> Verdict {
    let p_avg = dbm_to_mw(P_AVG_DBM);
    let cfg = IcfConfig {
        clip: ClipLevel::from_peak_power_mw(p_avg * 2.0).unwrap(),
        oob_threshold_dbm: -10.0,
        max_iters: 16,
        l_os: 4,
    };
    let m = 32;
    let mut rng = stream(6, Purpose::Synthetic, 0, 0);
    let (mut nonzero_oob, mut grew, mut bad_converged, mut converged) = (0, 0, 0, 0);
    let mut iters = 0;
    for _ in 0..100 {
        let bins: Vec<Complex64> = (0..m).map(|_| cnormal(&mut rng, p_avg / m as f64)).collect();
        let mut padded = bins.clone();
        padded.resize(m * 4, Complex64::new(0.0, 0.0));
        let s = otafl_core::dsp::idft_oversampled(&Spectrum::new(padded).unwrap(), 4).unwrap();
        let out = icf(&s, &cfg).unwrap();
        let r = out.report;
        // exact zeros out of band, both in the returned spectrum and after a fresh transform
        let fresh = dft_paper(&out.signal);
        let fresh_oob: f64 = fresh.bins()[m..].iter().map(|v| v.norm_sqr()).sum();
        if out.spectrum.bins()[m..].iter().any(|v| v.norm_sqr() != 0.0) || fresh_oob > 1e-20 * fresh.energy() {
            nonzero_oob += 1;
        }
        grew += usize::from(r.final_oob_dbm > r.first_oob_dbm);
        if r.converged {
            converged += 1;
            bad_converged += usize::from(r.final_oob_dbm > -10.0);
        }
        iters += r.iterations_used;
    }
    Verdict::new(
        nonzero_oob == 0 && grew == 0 && bad_converged == 0,
        format!(
            "(a) runs with out-of-band energy {nonzero_oob}, (b) runs with oob growth {grew}, (c) converged above -10 dBm {bad_converged}; {converged}/100 converged, mean {:.2} iterations",
            iters as f64 / 100.0
        ),
    )
}

/// `E[max_n Z_n²]` for `N` i.i.d. standard normals by quadrature of
/// `∫ 1 − F(x)^N dx` with `F(x) = erf(√(x/2))`.
fn expected_max_chi2(n: usize) -> f64 {
    let dx = 1e-3;
    (0..100_000)
        .map(|i| {
            let x = (i as f64 + 0.5) * dx;
            1.0 - statrs::function::erf::erf((x / 2.0).sqrt()).powi(n as i32)
        })
        .sum::<f64>()
        * dx
}

fn c7_papr() -> Verdict {
    let n = 62_006;
    let draws = 200;
    let mut ours = 0.0;
    let mut oracle = 0.0;
    let mut rng = stream(7, Purpose::Synthetic, 0, 0);
    let mut rng_oracle = stream(7, Purpose::Synthetic, 1, 0);
    for _ in 0..draws {
        let g = GradientVector::normalized((0..n).map(|_| normal(&mut rng)).collect());
        ours += linear_to_db(papr_gradient(&g).unwrap());
        let (mut peak, mut sum) = (0.0f64, 0.0);
        for _ in 0..n {
            let v = normal(&mut rng_oracle).powi(2);
            peak = peak.max(v);
            sum += v;
        }
        oracle += 10.0 * (peak / (sum / n as f64)).log10();
    }
    let (ours, oracle) = (ours / draws as f64, oracle / draws as f64);
    let quad = linear_to_db(expected_max_chi2(n));

    // qualitative ordering in simulated rounds, both clipping schemes
    let mut rounds = 0;
    let mut unordered = 0;
    for scheme in [Transport::SingleCarrier, Transport::Ofdm] {
        let cfg = ExperimentConfig {
            scheme,
            clip: true,
            rounds: 25,
            seed: 7,
            ..ExperimentConfig::desk()
        };
        for r in run_experiment(&cfg).unwrap() {
            rounds += 1;
            unordered += usize::from(r.papr_mean_db <= r.papr_clipped_mean_db);
        }
    }
    Verdict::new(
        (ours - oracle).abs() <= 1.0 && (ours - quad).abs() <= 1.0 && unordered == 0,
        format!(
            "mean PAPR {ours:.2} dB vs MC oracle {oracle:.2} dB and quadrature {quad:.2} dB (<=1 dB); unclipped > clipped in {}/{rounds} rounds",
            rounds - unordered
        ),
    )
}

/// One-sided sign test p-value for `wins` successes out of `n`.
fn sign_test_p(wins: u64, n: u64) -> f64 {
    if wins == 0 {
        return 1.0;
    }
    Binomial::new(0.5, n).unwrap().sf(wins - 1)
}

/// Raw gradients along an ideal training trajectory.
fn gradient_trajectory(cfg: &ExperimentConfig, rounds: u64) -> (FlConfig, Vec<(u64, Vec<GradientVector>)>) {
    let mut state = initial_state(cfg).unwrap();
    let mut fl = scenarios(cfg).unwrap().remove(0).fl;
    fl.air.scheme.transport = Transport::Ideal;
    let mut out = Vec::new();
    for _ in 0..rounds {
        let r = state.round + 1;
        out.push((r, local_gradients(&state, &fl, r).unwrap()));
        run_round(&mut state, &fl).unwrap();
    }
    (fl, out)
}

fn c8_clipping_degrades() -> Verdict {
    let rounds = 100;
    let cfg = ExperimentConfig {
        ues: 40,
        seed: 8,
        noise_psd_dbm_hz: vec![-110.0],
        ..ExperimentConfig::desk()
    };
    let (mut fl, trajectory) = gradient_trajectory(&cfg, rounds);
    let low = dbm_to_mw(-110.0) * SUBCARRIER_HZ;
    let high = 100.0 * low;
    let mut tse = |transport: Transport, clip: bool, noise_var: f64| -> Vec<f64> {
        fl.air.scheme.transport = transport;
        fl.air.scheme.clip = clip;
        fl.air.link.noise_var = noise_var;
        trajectory
            .iter()
            .map(|(r, g)| {
                let out = fl.air.aggregate(g, cfg.seed, *r).unwrap();
                true_square_error(&out.recovered, &out.target).unwrap()
            })
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut pass = true;
    let mut lines = Vec::new();
    let mut gaps = Vec::new();
    for (transport, name) in [(Transport::SingleCarrier, "sc"), (Transport::Ofdm, "ofdm")] {
        let off = tse(transport, false, low);
        let on = tse(transport, true, low);
        let wins = on.iter().zip(&off).filter(|(a, b)| a > b).count() as u64;
        let ties = on.iter().zip(&off).filter(|(a, b)| a == b).count() as u64;
        let p = sign_test_p(wins, rounds - ties);
        pass &= mean(&on) >= mean(&off) && p < 0.01;
        lines.push(format!(
            "{name}: TSE clip {:.3e} vs no-clip {:.3e}, {wins}/{} rounds worse, p={p:.1e}",
            mean(&on),
            mean(&off),
            rounds - ties
        ));
        if transport == Transport::Ofdm {
            gaps.push(mean(&on) - mean(&off));
        }
    }
    let gap_high = mean(&tse(Transport::Ofdm, true, high)) - mean(&tse(Transport::Ofdm, false, high));
    pass &= gaps[0] > gap_high;
    lines.push(format!(
        "ofdm clip gap {:.3e} at -110 dBm/Hz vs {gap_high:.3e} at -90 dBm/Hz",
        gaps[0]
    ));
    Verdict::new(pass, lines.join("; "))
}

fn weights_diff(a: &FlState, b: &[f64]) -> f64 {
    a.model.weights().iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn c9_fl_end_to_end() -> Verdict {
    let start = Instant::now();
    let base = ExperimentConfig {
        seed: 9,
        noise_psd_dbm_hz: vec![-110.0],
        ..ExperimentConfig::desk()
    };

    // (a) ideal backend vs centralized mini-batch descent on the pooled batches
    let ideal_cfg = ExperimentConfig {
        scheme: Transport::Ideal,
        ..base.clone()
    };
    let mut state = initial_state(&ideal_cfg).unwrap();
    let fl = scenarios(&ideal_cfg).unwrap().remove(0).fl;
    let mut central = state.model.clone();
    let mut worst_fedsgd: f64 = 0.0;
    for round in 1..=10u64 {
        let pooled: Vec<&Sample> = state
            .shards
            .iter()
            .enumerate()
            .flat_map(|(k, shard)| {
                let idx = sample_batch(shard.len(), fl.batch_size, &mut stream(fl.seed, Purpose::Batch, round, k as u64))
                    .unwrap();
                idx.into_iter().map(move |i| &shard.samples()[i])
            })
            .collect();
        let (_, g) = central.loss_and_grad(&pooled).unwrap();
        central.apply_update(&g, fl.learning_rate).unwrap();
        run_round(&mut state, &fl).unwrap();
        worst_fedsgd = worst_fedsgd.max(weights_diff(&state, central.weights()));
    }

    // (b) noiseless, unclipped single-carrier vs ideal
    let mut ideal = initial_state(&ideal_cfg).unwrap();
    let mut sc = ideal.clone();
    let mut sc_fl = fl.clone();
    sc_fl.air.scheme.transport = Transport::SingleCarrier;
    sc_fl.air.scheme.clip = false;
    sc_fl.air.link.noise_var = 0.0;
    let mut worst_sc: f64 = 0.0;
    for _ in 0..10 {
        run_round(&mut ideal, &fl).unwrap();
        run_round(&mut sc, &sc_fl).unwrap();
        worst_sc = worst_sc.max(weights_diff(&sc, ideal.model.weights()));
    }

    // (c) final accuracy ordering over 10 seeds
    let seeds = 10;
    let final_acc = |scheme: Transport, clip: bool| -> f64 {
        (0..seeds)
            .map(|seed| {
                let cfg = ExperimentConfig {
                    seed,
                    scheme,
                    clip,
                    ..base.clone()
                };
                run_experiment(&cfg).unwrap().last().unwrap().accuracy
            })
            .sum::<f64>()
            / seeds as f64
    };
    let acc_ideal = final_acc(Transport::Ideal, false);
    let mut ordered = true;
    let mut acc_lines = vec![format!("ideal {acc_ideal:.4}")];
    for (transport, name) in [(Transport::SingleCarrier, "sc"), (Transport::Ofdm, "ofdm")] {
        let off = final_acc(transport, false);
        let on = final_acc(transport, true);
        ordered &= acc_ideal >= off - 0.01 && off >= on - 0.01;
        acc_lines.push(format!("{name} no-clip {off:.4} clip {on:.4}"));
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst_fedsgd <= 1e-9 && worst_sc <= 1e-6 && ordered && elapsed < Duration::from_secs(120),
        format!(
            "FedSGD max weight diff {worst_fedsgd:.1e} (<=1e-9); noiseless sc vs ideal {worst_sc:.1e} (<=1e-6); accuracy {} (1-point tolerance); {elapsed:.1?} (<120s)",
            acc_lines.join(", ")
        ),
    )
}

fn c10_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        rounds: 5,
        seed: 10,
        ..ExperimentConfig::desk()
    };
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv")];
    emit_metrics(&run_experiment(&cfg).unwrap(), Format::Csv, &paths[0]).unwrap();
    emit_metrics(&run_experiment(&cfg).unwrap(), Format::Csv, &paths[1]).unwrap();
    let sequential = ExperimentConfig {
        execution: Execution::Sequential,
        ..cfg
    };
    emit_metrics(&run_experiment(&sequential).unwrap(), Format::Csv, &paths[2]).unwrap();
    let bytes: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
    Verdict::new(
        bytes[0] == bytes[1] && bytes[0] == bytes[2] && !bytes[0].is_empty(),
        format!(
            "two runs byte-identical: {}; sequential run identical: {}; {} bytes",
            bytes[0] == bytes[1],
            bytes[0] == bytes[2],
            bytes[0].len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("transform correctness", c1_transforms),
        ("power control optimality", c2_power_control),
        ("analytic MSE vs Monte-Carlo", c3_analytic_mse),
        ("noise bookkeeping", c4_noise_bookkeeping),
        ("hard peak bound", c5_peak_bound),
        ("ICF behavior", c6_icf),
        ("PAPR oracle", c7_papr),
        ("clipping degrades aggregation", c8_clipping_degrades),
        ("FL end-to-end", c9_fl_end_to_end),
        ("determinism", c10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let v = run();
        println!("{} criterion {id:>2} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
