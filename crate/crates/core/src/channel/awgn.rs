use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::phy::TimeSignal;
use crate::seed::rng_from_seed;

/// Complex noise variance for a given SNR against a reference signal power.
/// An infinite SNR means no noise.
pub fn noise_variance(snr_db: f64, signal_power_ref: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        signal_power_ref / 10f64.powf(snr_db / 10.0)
    }
}

/// Adds circular complex Gaussian noise; `snr_db = f64::INFINITY` returns
/// the input untouched.
pub fn add_awgn(signal: &TimeSignal, snr_db: f64, signal_power_ref: f64, seed: u64) -> TimeSignal {
    let var = noise_variance(snr_db, signal_power_ref);
    if var == 0.0 {
        return signal.clone();
    }
    let sigma = (var / 2.0).sqrt();
    let mut rng = rng_from_seed(seed);
    let samples = signal
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(re, im) * sigma
        })
        .collect();
    TimeSignal::new(samples, signal.sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_snr_is_noiseless() {
        let sig = TimeSignal::new(vec![Complex64::new(1.0, -2.0); 10], 10e6);
        assert_eq!(add_awgn(&sig, f64::INFINITY, 1.0, 5), sig);
    }

    #[test]
    fn empirical_variance_matches() {
        let sig = TimeSignal::new(vec![Complex64::new(0.0, 0.0); 1_000_000], 10e6);
        let noisy = add_awgn(&sig, 10.0, 1.0, 11);
        let var = noisy.mean_power();
        assert!((var - 0.1).abs() / 0.1 < 0.02, "{var}");
        let mean: Complex64 = noisy.samples.iter().sum::<Complex64>() / 1e6;
        assert!(mean.norm() < 1e-3);
    }

    #[test]
    fn same_seed_is_deterministic() {
        let sig = TimeSignal::new(vec![Complex64::new(0.5, 0.5); 100], 10e6);
        assert_eq!(add_awgn(&sig, 5.0, 1.0, 3), add_awgn(&sig, 5.0, 1.0, 3));
        assert_ne!(add_awgn(&sig, 5.0, 1.0, 3), add_awgn(&sig, 5.0, 1.0, 4));
    }
}
