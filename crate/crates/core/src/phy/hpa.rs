use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ofdm::TimeSignal;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HpaKind {
    Linear,
    Rapp,
}

/// Memoryless amplifier with its Bussgang gain.
///
/// For the Rapp kind the saturation amplitude is tied to the mean input power
/// of whatever signal is amplified: `IBO = 10·log10(P_sat / P_in)`, so the
/// characteristic is scale-free and `rho` only depends on `ibo_db` and
/// `smoothness`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpaModel {
    pub kind: HpaKind,
    pub ibo_db: f64,
    pub smoothness: f64,
    pub rho: Complex64,
}

const CALIBRATION_SAMPLES: usize = 100_000;
const CALIBRATION_SEED: u64 = 0x5EED_0B55;

impl HpaModel {
    pub fn linear() -> Self {
        HpaModel {
            kind: HpaKind::Linear,
            ibo_db: f64::INFINITY,
            smoothness: 0.0,
            rho: Complex64::new(1.0, 0.0),
        }
    }

    /// Rapp SSPA; `rho` is estimated once on complex Gaussian samples, which
    /// is what an OFDM waveform looks like to the amplifier.
    pub fn rapp(ibo_db: f64, smoothness: f64) -> Self {
        let mut model = HpaModel {
            kind: HpaKind::Rapp,
            ibo_db,
            smoothness,
            rho: Complex64::new(1.0, 0.0),
        };
        let probe = gaussian_signal(CALIBRATION_SAMPLES, CALIBRATION_SEED);
        let out = hpa_apply(&probe, &model);
        model.rho = bussgang_decompose(&probe, &out)
            .map(|(rho, _)| rho)
            .unwrap_or(Complex64::new(1.0, 0.0));
        model
    }

    /// Amplify and divide out the Bussgang gain, leaving `x + z`.
    pub fn transmit(&self, signal: &TimeSignal) -> TimeSignal {
        match self.kind {
            HpaKind::Linear => signal.clone(),
            HpaKind::Rapp => {
                let mut out = hpa_apply(signal, self);
                let inv = self.rho.inv();
                out.samples.iter_mut().for_each(|s| *s *= inv);
                out
            }
        }
    }
}

pub fn rapp_am_am(amplitude: f64, saturation: f64, smoothness: f64) -> f64 {
    let two_p = 2.0 * smoothness;
    amplitude / (1.0 + (amplitude / saturation).powf(two_p)).powf(1.0 / two_p)
}

/// AM/AM compression per sample with the phase preserved.
pub fn hpa_apply(signal: &TimeSignal, hpa: &HpaModel) -> TimeSignal {
    match hpa.kind {
        HpaKind::Linear => signal.clone(),
        HpaKind::Rapp => {
            let p_in = signal.mean_power();
            if p_in == 0.0 {
                return signal.clone();
            }
            let saturation = (p_in * 10f64.powf(hpa.ibo_db / 10.0)).sqrt();
            let samples = signal
                .samples
                .iter()
                .map(|&s| {
                    let r = s.norm();
                    if r == 0.0 {
                        s
                    } else {
                        s * (rapp_am_am(r, saturation, hpa.smoothness) / r)
                    }
                })
                .collect();
            TimeSignal::new(samples, signal.sample_rate_hz)
        }
    }
}

/// Splits `output = rho·(input + distortion)` with `distortion`
/// uncorrelated with `input` in the sample sense.
pub fn bussgang_decompose(input: &TimeSignal, output: &TimeSignal) -> Result<(Complex64, TimeSignal)> {
    check_len("Bussgang output", input.len(), output.len())?;
    let energy: f64 = input.samples.iter().map(|s| s.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::Degenerate("Bussgang decomposition of a zero-power input".into()));
    }
    let cross: Complex64 = output
        .samples
        .iter()
        .zip(&input.samples)
        .map(|(o, i)| o * i.conj())
        .sum();
    let rho = cross / energy;
    if rho.norm() == 0.0 {
        return Err(Error::Degenerate("output uncorrelated with input".into()));
    }
    let inv = rho.inv();
    let distortion = output
        .samples
        .iter()
        .zip(&input.samples)
        .map(|(o, i)| o * inv - i)
        .collect();
    Ok((rho, TimeSignal::new(distortion, input.sample_rate_hz)))
}

fn gaussian_signal(n: usize, seed: u64) -> TimeSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let samples = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * scale
        })
        .collect();
    TimeSignal::new(samples, 10e6)
}
