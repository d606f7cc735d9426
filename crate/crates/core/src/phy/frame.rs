use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

/// 802.11a/p long training sequence on subcarriers −26..=26 (DC included as 0).
const LONG_TRAINING: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1, -1,
    -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

/// OFDM numerology and subcarrier allocation.
///
/// Active subcarriers are held in ascending frequency order; `pilot_indices`
/// and `data_indices` are positions into that order (not FFT bins).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub k_total: usize,
    pub k_on: usize,
    pub k_pilot: usize,
    pub k_data: usize,
    pub k_null: usize,
    pub k_cp: usize,
    pub n_symbols: usize,
    pub n_preambles: usize,
    /// Signed frequency index of each active subcarrier.
    pub active_subcarriers: Vec<i32>,
    pub pilot_indices: Vec<usize>,
    pub data_indices: Vec<usize>,
    pub pilot_values: Vec<Complex64>,
    /// Known BPSK preamble over all active subcarriers.
    pub preamble: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl FrameSpec {
    /// 10 MHz 802.11p numerology: K = 64, 16-sample CP, 52 active subcarriers,
    /// comb pilots at ±7 and ±21, two long-training preambles, 50 data symbols.
    pub fn ieee80211p() -> Self {
        let active_subcarriers: Vec<i32> = (-26..=26).filter(|&k| k != 0).collect();
        let pilot_freqs = [-21, -7, 7, 21];
        let pilot_indices: Vec<usize> = pilot_freqs
            .iter()
            .map(|f| active_subcarriers.iter().position(|k| k == f).unwrap())
            .collect();
        let data_indices: Vec<usize> = (0..active_subcarriers.len())
            .filter(|i| !pilot_indices.contains(i))
            .collect();
        let preamble = active_subcarriers
            .iter()
            .map(|&k| Complex64::new(LONG_TRAINING[(k + 26) as usize] as f64, 0.0))
            .collect();
        FrameSpec {
            k_total: 64,
            k_on: 52,
            k_pilot: 4,
            k_data: 48,
            k_null: 12,
            k_cp: 16,
            n_symbols: 50,
            n_preambles: 2,
            active_subcarriers,
            pilot_indices,
            data_indices,
            pilot_values: vec![Complex64::new(1.0, 0.0); 4],
            preamble,
            sample_rate_hz: 10e6,
        }
    }

    pub fn with_n_symbols(mut self, n_symbols: usize) -> Self {
        self.n_symbols = n_symbols;
        self
    }

    /// FFT bin of an active position.
    pub fn fft_bin(&self, position: usize) -> usize {
        let k = self.active_subcarriers[position] as i64;
        k.rem_euclid(self.k_total as i64) as usize
    }

    pub fn symbol_len(&self) -> usize {
        self.k_total + self.k_cp
    }

    pub fn frame_len(&self) -> usize {
        (self.n_preambles + self.n_symbols) * self.symbol_len()
    }

    pub fn is_pilot(&self, position: usize) -> bool {
        self.pilot_indices.contains(&position)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("frame spec: {m}")));
        if self.k_on != self.k_pilot + self.k_data {
            return bad("k_on must equal k_pilot + k_data");
        }
        if self.k_null + self.k_on != self.k_total {
            return bad("k_null must equal k_total - k_on");
        }
        if self.pilot_indices.len() != self.k_pilot || self.data_indices.len() != self.k_data {
            return bad("pilot/data index counts disagree with k_pilot/k_data");
        }
        if self.pilot_indices.iter().any(|p| self.data_indices.contains(p)) {
            return bad("pilot and data positions overlap");
        }
        if self.active_subcarriers.len() != self.k_on || self.preamble.len() != self.k_on {
            return bad("active subcarrier and preamble lengths must equal k_on");
        }
        if self.pilot_values.len() != self.k_pilot {
            return bad("pilot_values length must equal k_pilot");
        }
        if self.k_cp > self.k_total {
            return bad("cyclic prefix longer than the symbol");
        }
        Ok(())
    }
}

/// Frequency-domain OFDM symbol restricted to the active subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbolFreq {
    pub values: Vec<Complex64>,
}

impl OfdmSymbolFreq {
    pub fn new(values: Vec<Complex64>) -> Self {
        OfdmSymbolFreq { values }
    }

    pub fn zeros(k_on: usize) -> Self {
        OfdmSymbolFreq {
            values: vec![Complex64::new(0.0, 0.0); k_on],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn build_frame(data: &[Complex64], spec: &FrameSpec) -> Result<Vec<OfdmSymbolFreq>> {
    check_len("frame data", spec.n_symbols * spec.k_data, data.len())?;
    Ok(data
        .chunks_exact(spec.k_data)
        .map(|chunk| {
            let mut sym = OfdmSymbolFreq::zeros(spec.k_on);
            for (&pos, &v) in spec.pilot_indices.iter().zip(&spec.pilot_values) {
                sym.values[pos] = v;
            }
            for (&pos, &v) in spec.data_indices.iter().zip(chunk) {
                sym.values[pos] = v;
            }
            sym
        })
        .collect())
}

/// Data subcarriers of each symbol concatenated in frame order.
pub fn extract_data(symbols: &[OfdmSymbolFreq], spec: &FrameSpec) -> Vec<Complex64> {
    symbols
        .iter()
        .flat_map(|s| spec.data_indices.iter().map(move |&p| s.values[p]))
        .collect()
}
