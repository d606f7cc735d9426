use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
            Modulation::Qam64 => "qam64",
        }
    }
}

/// Square Gray-coded constellation with unit average power.
///
/// Codeword `c` (first `bits_per_symbol` bits of a group, MSB first) lives at
/// `points[c]`. The high half of the codeword selects the in-phase level and
/// the low half the quadrature level; each axis is Gray-coded so neighbouring
/// levels differ in one bit, and level 0 of each axis is the most positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationScheme {
    pub kind: Modulation,
    pub points: Vec<Complex64>,
    pub bits_per_symbol: usize,
}

impl ModulationScheme {
    pub fn new(kind: Modulation) -> Self {
        let bits_per_symbol = kind.bits_per_symbol();
        let axis_bits = bits_per_symbol / 2;
        let levels = 1usize << axis_bits;
        // Mean power of levels {±1, ±3, ...} per axis is (L² − 1)/3.
        let scale = (2.0 * ((levels * levels - 1) as f64) / 3.0).sqrt().recip();

        let amplitude_of_gray = |gray: usize| -> f64 {
            let mut level = gray;
            let mut shift = gray >> 1;
            while shift != 0 {
                level ^= shift;
                shift >>= 1;
            }
            (levels as f64 - 1.0) - 2.0 * level as f64
        };

        let points = (0..1usize << bits_per_symbol)
            .map(|code| {
                let i_gray = code >> axis_bits;
                let q_gray = code & (levels - 1);
                Complex64::new(amplitude_of_gray(i_gray), amplitude_of_gray(q_gray)) * scale
            })
            .collect();

        ModulationScheme {
            kind,
            points,
            bits_per_symbol,
        }
    }

    /// Index of the Euclidean-nearest point; ties go to the lowest index.
    pub fn nearest_index(&self, symbol: Complex64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (idx, p) in self.points.iter().enumerate() {
            let d = (symbol - p).norm_sqr();
            if d < best_dist {
                best_dist = d;
                best = idx;
            }
        }
        best
    }

    pub fn nearest(&self, symbol: Complex64) -> Complex64 {
        self.points[self.nearest_index(symbol)]
    }

    fn push_codeword(&self, code: usize, bits: &mut Vec<u8>) {
        for b in (0..self.bits_per_symbol).rev() {
            bits.push(((code >> b) & 1) as u8);
        }
    }
}

pub fn map_bits(bits: &[u8], scheme: &ModulationScheme) -> Result<Vec<Complex64>> {
    let m = scheme.bits_per_symbol;
    if bits.len() % m != 0 {
        return Err(Error::Size {
            what: "bit sequence (must be a multiple of bits per symbol)",
            expected: bits.len().div_ceil(m) * m,
            actual: bits.len(),
        });
    }
    Ok(bits
        .chunks_exact(m)
        .map(|group| {
            let code = group.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            scheme.points[code]
        })
        .collect())
}

/// Hard decision to the nearest constellation point plus its codeword bits.
pub fn demap_nearest(symbols: &[Complex64], scheme: &ModulationScheme) -> (Vec<Complex64>, Vec<u8>) {
    let mut hard = Vec::with_capacity(symbols.len());
    let mut bits = Vec::with_capacity(symbols.len() * scheme.bits_per_symbol);
    for &s in symbols {
        let idx = scheme.nearest_index(s);
        hard.push(scheme.points[idx]);
        scheme.push_codeword(idx, &mut bits);
    }
    (hard, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Modulation; 3] = [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64];

    fn codeword_bits(code: usize, m: usize) -> Vec<u8> {
        (0..m).rev().map(|b| ((code >> b) & 1) as u8).collect()
    }

    #[test]
    fn qpsk_zero_bits_map_to_first_quadrant() {
        let s = ModulationScheme::new(Modulation::Qpsk);
        let out = map_bits(&[0, 0], &s).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out[0] - Complex64::new(h, h)).norm() < 1e-15);
    }

    #[test]
    fn empty_bits_map_to_empty() {
        for kind in ALL {
            assert!(map_bits(&[], &ModulationScheme::new(kind)).unwrap().is_empty());
        }
    }

    #[test]
    fn wrong_length_is_size_error() {
        let s = ModulationScheme::new(Modulation::Qam16);
        assert!(matches!(map_bits(&[0, 1, 1], &s), Err(Error::Size { .. })));
    }

    #[test]
    fn constellations_are_normalised_and_distinct() {
        for kind in ALL {
            let s = ModulationScheme::new(kind);
            let n = s.points.len();
            assert_eq!(n, 1 << kind.bits_per_symbol());
            let mean: f64 = s.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / n as f64;
            assert!((mean - 1.0).abs() < 1e-12, "{kind:?} mean power {mean}");
            for i in 0..n {
                for j in i + 1..n {
                    assert!((s.points[i] - s.points[j]).norm() > 1e-6);
                }
            }
        }
    }

    #[test]
    fn qam16_all_codewords_by_enumeration() {
        let s = ModulationScheme::new(Modulation::Qam16);
        let bits: Vec<u8> = (0..16).flat_map(|c| codeword_bits(c, 4)).collect();
        let pts = map_bits(&bits, &s).unwrap();
        assert_eq!(pts.len(), 16);
        let mean: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for kind in ALL {
            let s = ModulationScheme::new(kind);
            let n = s.points.len();
            let mut dmin = f64::INFINITY;
            for i in 0..n {
                for j in i + 1..n {
                    dmin = dmin.min((s.points[i] - s.points[j]).norm());
                }
            }
            for i in 0..n {
                for j in i + 1..n {
                    if (s.points[i] - s.points[j]).norm() < dmin * (1.0 + 1e-9) {
                        assert_eq!((i ^ j).count_ones(), 1, "{kind:?} {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn demap_inverts_map_exhaustively() {
        for kind in ALL {
            let s = ModulationScheme::new(kind);
            let m = s.bits_per_symbol;
            let bits: Vec<u8> = (0..s.points.len()).flat_map(|c| codeword_bits(c, m)).collect();
            let syms = map_bits(&bits, &s).unwrap();
            let (hard, back) = demap_nearest(&syms, &s);
            assert_eq!(back, bits);
            assert_eq!(hard, syms);
        }
    }

    #[test]
    fn demap_brute_force_qpsk() {
        let s = ModulationScheme::new(Modulation::Qpsk);
        let x = Complex64::new(0.9, 0.1);
        let oracle = s
            .points
            .iter()
            .copied()
            .min_by(|a, b| (x - a).norm().partial_cmp(&(x - b).norm()).unwrap())
            .unwrap();
        let (hard, _) = demap_nearest(&[x], &s);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(hard[0], oracle);
        assert!((hard[0] - Complex64::new(h, h)).norm() < 1e-15);
    }

    #[test]
    fn demap_midpoint_tie_goes_to_lowest_index() {
        let s = ModulationScheme::new(Modulation::Qam64);
        let mut checked = 0;
        for i in 0..64 {
            for j in i + 1..64 {
                let mid = (s.points[i] + s.points[j]) * 0.5;
                let dists: Vec<f64> = s.points.iter().map(|p| (mid - p).norm_sqr()).collect();
                let dmin = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                let tied: Vec<usize> = (0..64).filter(|&k| dists[k] == dmin).collect();
                if tied.len() >= 2 && tied.contains(&i) && tied.contains(&j) {
                    assert_eq!(s.nearest_index(mid), tied[0]);
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn exact_point_demaps_to_itself() {
        let s = ModulationScheme::new(Modulation::Qam64);
        for p in &s.points {
            assert_eq!(s.nearest(*p), *p);
        }
    }
}
