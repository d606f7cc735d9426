use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{add_awgn, apply_channel, generate_realization, noise_variance, true_freq_response, ChannelProfile, ChannelRealization};
use crate::error::{check_len, Error, Result};
use crate::estimators::{ls_preamble, ChannelEstimate, ConventionalTracker, EstimatorKind, StaParams};
use crate::neural::{stack_complex, unstack_complex, Dataset, ForwardCache, Mlp};
use crate::phy::{build_frame, map_bits, ofdm_demodulate, ofdm_modulate, FrameSpec, HpaModel, ModulationScheme, OfdmSymbolFreq};
use crate::seed::{SeedTree, Stream};
use crate::xai::RelevanceSet;

/// Propagation channel of a link.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkChannel {
    /// Doubly-selective tapped delay line.
    Fading(ChannelProfile),
    /// Unit-gain flat channel: the link reduces to AWGN.
    Flat,
}

#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub spec: FrameSpec,
    pub scheme: ModulationScheme,
    pub channel: LinkChannel,
    pub hpa: HpaModel,
    pub estimator: EstimatorKind,
    pub sta: StaParams,
    /// Equalise with the true per-symbol channel instead of an estimate.
    pub genie: bool,
    pub model: Option<Mlp>,
    pub relevance: Option<RelevanceSet>,
    /// Thread the network-corrected estimate into the next DPA step.
    pub feedback_fnn: bool,
    pub snr_grid_db: Vec<f64>,
    pub n_frames: usize,
    pub seed: u64,
}

impl LinkConfig {
    pub fn new(spec: FrameSpec, scheme: ModulationScheme, channel: LinkChannel) -> Self {
        LinkConfig {
            spec,
            scheme,
            channel,
            hpa: HpaModel::linear(),
            estimator: EstimatorKind::Sta,
            sta: StaParams::default(),
            genie: false,
            model: None,
            relevance: None,
            feedback_fnn: true,
            snr_grid_db: vec![40.0],
            n_frames: 200,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if let Some(model) = &self.model {
            let expected = match &self.relevance {
                Some(rel) => {
                    check_len("relevance set size", self.spec.k_on, rel.k_on())?;
                    2 * rel.relevant.len()
                }
                None => 2 * self.spec.k_on,
            };
            check_len("model input dim", expected, model.input_dim())?;
            check_len("model output dim", 2 * self.spec.k_on, model.output_dim())?;
        }
        if self.n_frames == 0 {
            return Err(Error::Config("n_frames must be at least 1".into()));
        }
        Ok(())
    }

    /// Total data bits of one frame.
    pub fn bits_per_frame(&self) -> usize {
        self.spec.n_symbols * self.spec.k_data * self.scheme.bits_per_symbol
    }
}

/// One simulated frame as seen by the receiver.
#[derive(Debug, Clone)]
pub struct FrameObservation {
    pub bits: Vec<u8>,
    /// Received preambles followed by received data symbols.
    pub rx_preambles: Vec<OfdmSymbolFreq>,
    pub rx_data: Vec<OfdmSymbolFreq>,
    /// Channel of each data symbol on the active subcarriers.
    pub true_channels: Vec<Vec<Complex64>>,
    pub noise_var: f64,
}

/// Transmits one random frame: bits, mapping, framing with preambles, OFDM,
/// HPA, channel and AWGN referenced to the frame's transmit power.
pub fn simulate_frame(cfg: &LinkConfig, snr_db: f64, frame_seed: SeedTree) -> Result<FrameObservation> {
    let spec = &cfg.spec;
    let mut bit_rng = frame_seed.stream(Stream::Bits).rng();
    let bits: Vec<u8> = (0..cfg.bits_per_frame()).map(|_| bit_rng.random_range(0..2u8)).collect();
    let data = map_bits(&bits, &cfg.scheme)?;
    let mut symbols: Vec<OfdmSymbolFreq> = (0..spec.n_preambles).map(|_| OfdmSymbolFreq::new(spec.preamble.clone())).collect();
    symbols.extend(build_frame(&data, spec)?);
    let tx = cfg.hpa.transmit(&ofdm_modulate(&symbols, spec));
    let p_ref = tx.mean_power();

    let n_samples = tx.len();
    let ch = match &cfg.channel {
        LinkChannel::Fading(profile) => generate_realization(
            profile,
            n_samples,
            spec.sample_rate_hz,
            spec.k_cp,
            frame_seed.stream(Stream::Channel).seed(),
        )?,
        LinkChannel::Flat => ChannelRealization::identity(n_samples),
    };
    let faded = apply_channel(&tx, &ch)?;
    let rx = add_awgn(&faded, snr_db, p_ref, frame_seed.stream(Stream::Noise).seed());
    let mut rx_symbols = ofdm_demodulate(&rx, spec)?;
    let rx_data = rx_symbols.split_off(spec.n_preambles);
    let true_channels = (0..spec.n_symbols)
        .map(|i| true_freq_response(&ch, spec.n_preambles + i, spec).map(|r| r.values))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameObservation {
        bits,
        rx_preambles: rx_symbols,
        rx_data,
        true_channels,
        noise_var: noise_variance(snr_db, p_ref),
    })
}

/// Seed of frame `index` in a run seeded with `seed`.
pub fn frame_seed(seed: u64, index: u64) -> SeedTree {
    SeedTree::new(seed).stream(Stream::Data).child(index)
}

/// Applies the attached network to a conventional estimate.
fn refine(model: &Mlp, relevance: Option<&RelevanceSet>, est: &ChannelEstimate, cache: &mut ForwardCache) -> Result<ChannelEstimate> {
    let stacked = stack_complex(&est.values);
    let input = match relevance {
        Some(rel) => rel.select(&stacked)?,
        None => stacked,
    };
    model.forward_into(&input, cache)?;
    Ok(ChannelEstimate::new(unstack_complex(cache.output())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameOutcome {
    pub bit_errors: u64,
    pub total_bits: u64,
    pub sq_error: f64,
    pub n_estimates: u64,
    pub noise_var: f64,
    pub flagged: bool,
    pub trfi_fallbacks: u64,
}

/// Receiver chain on one observed frame.
pub fn receive_frame(cfg: &LinkConfig, obs: &FrameObservation) -> Result<FrameOutcome> {
    let spec = &cfg.spec;
    let scheme = &cfg.scheme;
    let k_data = spec.k_data;
    let bps = scheme.bits_per_symbol;
    let h_ls = ls_preamble(&obs.rx_preambles, &OfdmSymbolFreq::new(spec.preamble.clone()))?;
    let mut tracker = ConventionalTracker::new(cfg.estimator, h_ls, cfg.sta, scheme, spec)?;
    let mut cache = ForwardCache::default();
    let mut out = FrameOutcome {
        noise_var: obs.noise_var,
        ..Default::default()
    };
    let mut estimates = Vec::with_capacity(obs.rx_data.len());
    for (y, h_true) in obs.rx_data.iter().zip(&obs.true_channels) {
        let est = if cfg.genie {
            ChannelEstimate::new(h_true.clone())
        } else {
            let conv = tracker.step(y)?;
            match &cfg.model {
                Some(model) => {
                    let refined = refine(model, cfg.relevance.as_ref(), &conv, &mut cache)?;
                    if cfg.feedback_fnn && refined.is_finite() && refined.values.iter().all(|v| v.norm_sqr() > 0.0) {
                        tracker.feedback(&refined);
                    }
                    refined
                }
                None => conv,
            }
        };
        if !est.is_finite() {
            return Ok(FrameOutcome {
                flagged: true,
                noise_var: obs.noise_var,
                ..Default::default()
            });
        }
        estimates.push(est);
    }
    out.trfi_fallbacks = tracker.fallbacks as u64;
    for (i, (y, est)) in obs.rx_data.iter().zip(&estimates).enumerate() {
        let tx_bits = &obs.bits[i * k_data * bps..(i + 1) * k_data * bps];
        for (j, &p) in spec.data_indices.iter().enumerate() {
            let eq = y.values[p] / est.values[p];
            let idx = if eq.is_finite() { scheme.nearest_index(eq) } else { usize::MAX };
            for b in 0..bps {
                let sent = tx_bits[j * bps + b];
                let got = if idx == usize::MAX {
                    1 - sent
                } else {
                    ((idx >> (bps - 1 - b)) & 1) as u8
                };
                out.bit_errors += (sent != got) as u64;
            }
        }
        out.total_bits += (k_data * bps) as u64;
        out.sq_error += est
            .values
            .iter()
            .zip(&obs.true_channels[i])
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / spec.k_on as f64;
        out.n_estimates += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkResult {
    pub snr_db: f64,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
    /// Mean per-symbol channel MSE over the active subcarriers.
    pub mse: f64,
    pub flagged_frames: u64,
    pub mean_noise_var: f64,
    pub trfi_fallbacks: u64,
}

/// Monte-Carlo BER at one SNR. Frames are simulated in parallel on the
/// current rayon pool and reduced in frame order.
pub fn run_link(cfg: &LinkConfig, snr_db: f64, seed: u64) -> Result<LinkResult> {
    cfg.validate()?;
    let outcomes = (0..cfg.n_frames as u64)
        .into_par_iter()
        .map(|f| simulate_frame(cfg, snr_db, frame_seed(seed, f)).and_then(|obs| receive_frame(cfg, &obs)))
        .collect::<Result<Vec<_>>>()?;
    let mut r = LinkResult {
        snr_db,
        ..Default::default()
    };
    let mut sq = 0.0;
    let mut n_est = 0;
    for o in &outcomes {
        r.bit_errors += o.bit_errors;
        r.total_bits += o.total_bits;
        r.flagged_frames += o.flagged as u64;
        r.trfi_fallbacks += o.trfi_fallbacks;
        r.mean_noise_var += o.noise_var;
        sq += o.sq_error;
        n_est += o.n_estimates;
    }
    r.mean_noise_var /= outcomes.len() as f64;
    r.mse = if n_est > 0 { sq / n_est as f64 } else { f64::NAN };
    r.ber = if r.total_bits > 0 {
        r.bit_errors as f64 / r.total_bits as f64
    } else {
        f64::NAN
    };
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub points: Vec<LinkResult>,
    pub config_digest: String,
}

/// Seed of SNR point `index` of a curve seeded with `seed`.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    SeedTree::new(seed).stream(Stream::Eval).child(index as u64).seed()
}

pub fn ber_curve(cfg: &LinkConfig, config_digest: &str) -> Result<BerCurve> {
    let points = cfg
        .snr_grid_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| run_link(cfg, snr, point_seed(cfg.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerCurve {
        points,
        config_digest: config_digest.to_string(),
    })
}

/// Per-symbol `(stacked conventional estimate, stacked true channel)` rows
/// of frames `frames`, simulated at `snr_db`.
pub fn collect_dataset(cfg: &LinkConfig, snr_db: f64, frames: std::ops::Range<u64>) -> Result<Dataset> {
    let spec = &cfg.spec;
    let per_frame = frames
        .into_par_iter()
        .map(|f| {
            let obs = simulate_frame(cfg, snr_db, frame_seed(cfg.seed, f))?;
            let h_ls = ls_preamble(&obs.rx_preambles, &OfdmSymbolFreq::new(spec.preamble.clone()))?;
            let mut tracker = ConventionalTracker::new(cfg.estimator, h_ls, cfg.sta, &cfg.scheme, spec)?;
            let mut ds = Dataset::new(2 * spec.k_on, 2 * spec.k_on);
            for (y, h) in obs.rx_data.iter().zip(&obs.true_channels) {
                let est = tracker.step(y)?;
                ds.push(&stack_complex(&est.values), &stack_complex(h))?;
            }
            Ok(ds)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Dataset::new(2 * spec.k_on, 2 * spec.k_on);
    for ds in &per_frame {
        out.append(ds)?;
    }
    Ok(out)
}
