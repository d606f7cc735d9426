use num_complex::Complex64;
use rustfft::FftPlanner;

use super::frame::{FrameSpec, OfdmSymbolFreq};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl TimeSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        TimeSignal {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Unitary IFFT of each symbol on the K-point grid, prefixed by its last
/// `k_cp` samples.
pub fn ofdm_modulate(symbols: &[OfdmSymbolFreq], spec: &FrameSpec) -> TimeSignal {
    let k = spec.k_total;
    let ifft = FftPlanner::new().plan_fft_inverse(k);
    let scale = 1.0 / (k as f64).sqrt();
    let mut samples = Vec::with_capacity(symbols.len() * spec.symbol_len());
    let mut grid = vec![Complex64::new(0.0, 0.0); k];
    for sym in symbols {
        grid.iter_mut().for_each(|g| *g = Complex64::new(0.0, 0.0));
        for (pos, &v) in sym.values.iter().enumerate() {
            grid[spec.fft_bin(pos)] = v;
        }
        ifft.process(&mut grid);
        samples.extend(grid[k - spec.k_cp..].iter().map(|s| s * scale));
        samples.extend(grid.iter().map(|s| s * scale));
    }
    TimeSignal::new(samples, spec.sample_rate_hz)
}

/// Strips each cyclic prefix, applies the unitary FFT and keeps the active
/// subcarriers in frame order.
pub fn ofdm_demodulate(signal: &TimeSignal, spec: &FrameSpec) -> Result<Vec<OfdmSymbolFreq>> {
    let len = spec.symbol_len();
    if signal.samples.len() % len != 0 {
        return Err(Error::Size {
            what: "time signal (must be a multiple of K + K_cp)",
            expected: signal.samples.len().div_ceil(len) * len,
            actual: signal.samples.len(),
        });
    }
    let k = spec.k_total;
    let fft = FftPlanner::new().plan_fft_forward(k);
    let scale = 1.0 / (k as f64).sqrt();
    let mut grid = vec![Complex64::new(0.0, 0.0); k];
    Ok(signal
        .samples
        .chunks_exact(len)
        .map(|chunk| {
            grid.copy_from_slice(&chunk[spec.k_cp..]);
            fft.process(&mut grid);
            OfdmSymbolFreq::new(
                (0..spec.k_on)
                    .map(|pos| grid[spec.fft_bin(pos)] * scale)
                    .collect(),
            )
        })
        .collect())
}
