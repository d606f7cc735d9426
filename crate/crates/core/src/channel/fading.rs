use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::profile::ChannelProfile;
use crate::error::{check_len, Error, Result};
use crate::phy::{FrameSpec, OfdmSymbolFreq, TimeSignal};
use crate::seed::rng_from_seed;

/// Sinusoids in each tap's sum-of-sinusoids generator.
pub const SINUSOIDS_PER_TAP: usize = 16;

// Oscillators are advanced by phasor rotation and re-anchored exactly at this
// interval to bound accumulated rounding.
const RESYNC_INTERVAL: usize = 512;

/// One frame's worth of time-varying tap gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `tap_gains[l][n]`: gain of tap `l` at sample `n`.
    pub tap_gains: Vec<Vec<Complex64>>,
    pub tap_delays_samples: Vec<usize>,
    pub profile: Option<ChannelProfile>,
    pub seed: u64,
    /// Largest delay reaches the cyclic prefix: symbols will interfere.
    pub exceeds_cp: bool,
}

impl ChannelRealization {
    /// Deterministic channel with constant taps.
    pub fn static_taps(gains: &[Complex64], delays: &[usize], num_samples: usize) -> Self {
        ChannelRealization {
            tap_gains: gains.iter().map(|&g| vec![g; num_samples]).collect(),
            tap_delays_samples: delays.to_vec(),
            profile: None,
            seed: 0,
            exceeds_cp: false,
        }
    }

    pub fn identity(num_samples: usize) -> Self {
        Self::static_taps(&[Complex64::new(1.0, 0.0)], &[0], num_samples)
    }

    pub fn num_samples(&self) -> usize {
        self.tap_gains.first().map_or(0, |t| t.len())
    }

    pub fn num_taps(&self) -> usize {
        self.tap_gains.len()
    }

    /// Frequency response at FFT bin `bin` and absolute sample `n`.
    fn response_at(&self, bin: usize, n: usize, k_total: usize) -> Complex64 {
        self.tap_gains
            .iter()
            .zip(&self.tap_delays_samples)
            .map(|(g, &d)| g[n] * Complex64::from_polar(1.0, -2.0 * PI * (bin * d) as f64 / k_total as f64))
            .sum()
    }
}

/// Per-symbol channel on the active subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqResponse {
    pub values: Vec<Complex64>,
}

/// Sum-of-sinusoids Rayleigh taps with a Jakes Doppler spectrum.
///
/// Tap `l` is `sqrt(P_l / N) · Σ_m exp(j(2π f_d cos(α_m) t + φ_{l,m}))` with
/// `α_m = π(m + ½)/N` and independent uniform phases per tap. The Doppler
/// frequencies are the midpoint rule of the Jakes integral, so the
/// autocorrelation is `J0(2π f_d τ)` up to exponentially small terms.
/// Delays are rounded to the nearest sample; sub-sample taps that land on the
/// same sample stay separate processes and add at application time.
pub fn generate_realization(
    profile: &ChannelProfile,
    num_samples: usize,
    sample_rate_hz: f64,
    cp_samples: usize,
    seed: u64,
) -> Result<ChannelRealization> {
    if num_samples == 0 {
        return Err(Error::Degenerate("channel realization needs at least one sample".into()));
    }
    let mut rng = rng_from_seed(seed);
    let n_sin = SINUSOIDS_PER_TAP;
    let omegas: Vec<f64> = (0..n_sin)
        .map(|m| {
            let alpha = PI * (m as f64 + 0.5) / n_sin as f64;
            2.0 * PI * profile.doppler_hz * alpha.cos() / sample_rate_hz
        })
        .collect();

    let powers = profile.linear_powers();
    let mut tap_gains = Vec::with_capacity(powers.len());
    for &power in &powers {
        let amp = (power / n_sin as f64).sqrt();
        let phases: Vec<f64> = (0..n_sin).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let steps: Vec<Complex64> = omegas.iter().map(|&w| Complex64::from_polar(1.0, w)).collect();
        let mut osc: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n_sin];
        let mut gains = Vec::with_capacity(num_samples);
        for n in 0..num_samples {
            if n % RESYNC_INTERVAL == 0 {
                for m in 0..n_sin {
                    osc[m] = Complex64::from_polar(amp, omegas[m] * n as f64 + phases[m]);
                }
            }
            gains.push(osc.iter().sum());
            for (o, s) in osc.iter_mut().zip(&steps) {
                *o *= s;
            }
        }
        tap_gains.push(gains);
    }

    let tap_delays_samples: Vec<usize> = profile
        .path_delays_ns
        .iter()
        .map(|d| (d * 1e-9 * sample_rate_hz).round() as usize)
        .collect();
    let exceeds_cp = tap_delays_samples.iter().any(|&d| d >= cp_samples);

    Ok(ChannelRealization {
        tap_gains,
        tap_delays_samples,
        profile: Some(profile.clone()),
        seed,
        exceeds_cp,
    })
}

/// `y[n] = Σ_l g_l[n]·x[n − d_l]`, truncated to the input length.
pub fn apply_channel(tx: &TimeSignal, ch: &ChannelRealization) -> Result<TimeSignal> {
    if ch.num_samples() < tx.len() {
        return Err(Error::Size {
            what: "channel realization (shorter than the signal)",
            expected: tx.len(),
            actual: ch.num_samples(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); tx.len()];
    for (gains, &d) in ch.tap_gains.iter().zip(&ch.tap_delays_samples) {
        for n in d..tx.len() {
            out[n] += gains[n] * tx.samples[n - d];
        }
    }
    Ok(TimeSignal::new(out, tx.sample_rate_hz))
}

fn useful_start(ch: &ChannelRealization, symbol_index: usize, spec: &FrameSpec) -> Result<usize> {
    let start = symbol_index * spec.symbol_len() + spec.k_cp;
    if start + spec.k_total > ch.num_samples() {
        return Err(Error::Bounds {
            index: symbol_index,
            len: ch.num_samples() / spec.symbol_len(),
        });
    }
    Ok(start)
}

/// Channel of OFDM symbol `symbol_index` (counted from the frame start,
/// preambles included), averaged over the symbol's useful samples.
pub fn true_freq_response(ch: &ChannelRealization, symbol_index: usize, spec: &FrameSpec) -> Result<FreqResponse> {
    let start = useful_start(ch, symbol_index, spec)?;
    let k = spec.k_total;
    let mean_taps: Vec<Complex64> = ch
        .tap_gains
        .iter()
        .map(|g| g[start..start + k].iter().sum::<Complex64>() / k as f64)
        .collect();
    let values = (0..spec.k_on)
        .map(|pos| {
            let bin = spec.fft_bin(pos);
            mean_taps
                .iter()
                .zip(&ch.tap_delays_samples)
                .map(|(g, &d)| g * Complex64::from_polar(1.0, -2.0 * PI * (bin * d) as f64 / k as f64))
                .sum()
        })
        .collect();
    Ok(FreqResponse { values })
}

/// Doppler-induced inter-carrier interference on each active subcarrier:
/// `e[k] = (1/K) Σ_{q≠k} Σ_n H(q, n)·exp(−j2π n(k − q)/K)·s[q]`.
pub fn ici_term(
    ch: &ChannelRealization,
    symbol: &OfdmSymbolFreq,
    symbol_index: usize,
    spec: &FrameSpec,
) -> Result<Vec<Complex64>> {
    check_len("ICI symbol", spec.k_on, symbol.len())?;
    let start = useful_start(ch, symbol_index, spec)?;
    let k_total = spec.k_total;
    let bins: Vec<usize> = (0..spec.k_on).map(|p| spec.fft_bin(p)).collect();
    // H(q, n) for every active q over the useful samples.
    let h_qn: Vec<Vec<Complex64>> = bins
        .iter()
        .map(|&q| (0..k_total).map(|n| ch.response_at(q, start + n, k_total)).collect())
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); spec.k_on];
    for (kp, &k) in bins.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (qp, &q) in bins.iter().enumerate() {
            if qp == kp || symbol.values[qp] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let diff = k as f64 - q as f64;
            let leak: Complex64 = (0..k_total)
                .map(|n| h_qn[qp][n] * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * diff / k_total as f64))
                .sum();
            acc += leak * symbol.values[qp];
        }
        out[kp] = acc / k_total as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_profile, ProfileName};
    use crate::phy::{ofdm_demodulate, ofdm_modulate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> TimeSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSignal::new(
            (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
            10e6,
        )
    }

    fn random_symbol(k_on: usize, seed: u64) -> OfdmSymbolFreq {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        OfdmSymbolFreq::new(
            (0..k_on)
                .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI))
                .collect(),
        )
    }

    #[test]
    fn zero_doppler_taps_are_constant() {
        let p = make_profile(ProfileName::VtvSdww, 0.0).unwrap();
        let ch = generate_realization(&p, 5000, 10e6, 16, 1).unwrap();
        for tap in &ch.tap_gains {
            assert!(tap.iter().all(|g| (g - tap[0]).norm() < 1e-12));
        }
        assert!(!ch.exceeds_cp);
        assert_eq!(ch.tap_delays_samples, vec![0, 0, 1, 1, 2, 3, 4, 4, 5, 6, 7, 7]);
    }

    #[test]
    fn seed_determinism() {
        let p = make_profile(ProfileName::VtvEx, 1000.0).unwrap();
        let a = generate_realization(&p, 2000, 10e6, 16, 9).unwrap();
        let b = generate_realization(&p, 2000, 10e6, 16, 9).unwrap();
        let c = generate_realization(&p, 2000, 10e6, 16, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn long_delays_flag_isi() {
        let p = ChannelProfile::new("long", vec![0.0, -3.0], vec![0.0, 2000.0], 100.0).unwrap();
        let ch = generate_realization(&p, 100, 10e6, 16, 1).unwrap();
        assert!(ch.exceeds_cp);
    }

    #[test]
    fn zero_samples_rejected() {
        let p = make_profile(ProfileName::VtvEx, 1000.0).unwrap();
        assert!(generate_realization(&p, 0, 10e6, 16, 1).is_err());
    }

    #[test]
    fn identity_and_delayed_static_taps() {
        let x = random_signal(200, 1);
        let y = apply_channel(&x, &ChannelRealization::identity(200)).unwrap();
        assert_eq!(y, x);

        let ch = ChannelRealization::static_taps(&[Complex64::new(0.5, 0.0)], &[2], 200);
        let y = apply_channel(&x, &ch).unwrap();
        assert_eq!(y.samples[0], Complex64::new(0.0, 0.0));
        assert_eq!(y.samples[1], Complex64::new(0.0, 0.0));
        for n in 2..200 {
            assert!((y.samples[n] - x.samples[n - 2] * 0.5).norm() < 1e-15);
        }
    }

    #[test]
    fn two_taps_match_direct_convolution() {
        let x = random_signal(1000, 2);
        let g = [Complex64::new(0.8, 0.1), Complex64::new(-0.3, 0.4)];
        let d = [0usize, 3];
        let ch = ChannelRealization::static_taps(&g, &d, 1000);
        let y = apply_channel(&x, &ch).unwrap();
        for n in 0..1000 {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..=n {
                let h = if n - m == 0 {
                    g[0]
                } else if n - m == 3 {
                    g[1]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                acc += h * x.samples[m];
            }
            assert!((acc - y.samples[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn short_realization_is_rejected() {
        let x = random_signal(100, 3);
        assert!(apply_channel(&x, &ChannelRealization::identity(50)).is_err());
    }

    #[test]
    fn channel_is_linear() {
        let p = make_profile(ProfileName::VtvSdww, 1000.0).unwrap();
        let ch = generate_realization(&p, 800, 10e6, 16, 4).unwrap();
        let x = random_signal(800, 5);
        let z = random_signal(800, 6);
        let (a, b) = (Complex64::new(0.7, -0.2), Complex64::new(-1.3, 0.5));
        let mix = TimeSignal::new(
            x.samples.iter().zip(&z.samples).map(|(p, q)| a * p + b * q).collect(),
            10e6,
        );
        let lhs = apply_channel(&mix, &ch).unwrap();
        let yx = apply_channel(&x, &ch).unwrap();
        let yz = apply_channel(&z, &ch).unwrap();
        for n in 0..800 {
            assert!((lhs.samples[n] - (a * yx.samples[n] + b * yz.samples[n])).norm() < 1e-12);
        }
    }

    #[test]
    fn static_responses() {
        let spec = FrameSpec::ieee80211p();
        let n = spec.symbol_len() * 3;
        let r = true_freq_response(&ChannelRealization::identity(n), 1, &spec).unwrap();
        assert!(r.values.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));

        let g = [Complex64::new(0.9, 0.2), Complex64::new(0.1, -0.4)];
        let ch = ChannelRealization::static_taps(&g, &[0, 5], n);
        let r = true_freq_response(&ch, 2, &spec).unwrap();
        for (pos, v) in r.values.iter().enumerate() {
            let k = spec.active_subcarriers[pos] as f64;
            let dft = g[0] + g[1] * Complex64::from_polar(1.0, -2.0 * PI * k * 5.0 / 64.0);
            assert!((v - dft).norm() < 1e-12);
        }
        assert!(true_freq_response(&ch, 3, &spec).is_err());
    }

    #[test]
    fn zero_doppler_response_is_time_invariant() {
        let spec = FrameSpec::ieee80211p();
        let p = make_profile(ProfileName::VtvSdww, 0.0).unwrap();
        let ch = generate_realization(&p, spec.symbol_len() * 5, 10e6, 16, 8).unwrap();
        let r0 = true_freq_response(&ch, 0, &spec).unwrap();
        for i in 1..5 {
            let ri = true_freq_response(&ch, i, &spec).unwrap();
            for (a, b) in r0.values.iter().zip(&ri.values) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn ici_vanishes_without_doppler_or_signal() {
        let spec = FrameSpec::ieee80211p();
        let p = make_profile(ProfileName::VtvSdww, 0.0).unwrap();
        let ch = generate_realization(&p, spec.symbol_len() * 2, 10e6, 16, 8).unwrap();
        let e = ici_term(&ch, &random_symbol(52, 1), 1, &spec).unwrap();
        assert!(e.iter().all(|v| v.norm() < 1e-10));

        let p = make_profile(ProfileName::VtvSdww, 1000.0).unwrap();
        let ch = generate_realization(&p, spec.symbol_len() * 2, 10e6, 16, 8).unwrap();
        let e = ici_term(&ch, &OfdmSymbolFreq::zeros(52), 1, &spec).unwrap();
        assert!(e.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn received_symbol_decomposes_into_channel_plus_ici() {
        let spec = FrameSpec::ieee80211p();
        // Exaggerated Doppler so the ICI term is far above the tolerance.
        let p = make_profile(ProfileName::VtvSdww, 20_000.0).unwrap();
        let syms: Vec<OfdmSymbolFreq> = (0..3).map(|i| random_symbol(52, 10 + i)).collect();
        let tx = ofdm_modulate(&syms, &spec);
        let ch = generate_realization(&p, tx.len(), 10e6, 16, 3).unwrap();
        let rx = ofdm_demodulate(&apply_channel(&tx, &ch).unwrap(), &spec).unwrap();
        let mut max_ici: f64 = 0.0;
        for i in 1..3 {
            let h = true_freq_response(&ch, i, &spec).unwrap();
            let e = ici_term(&ch, &syms[i], i, &spec).unwrap();
            for k in 0..52 {
                let residual = rx[i].values[k] - h.values[k] * syms[i].values[k];
                assert!((residual - e[k]).norm() < 1e-8);
                max_ici = max_ici.max(e[k].norm());
            }
        }
        assert!(max_ici > 1e-4);
    }
}
