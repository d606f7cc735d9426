//! Conventional channel estimators: LS on the preambles, data-pilot aided
//! (DPA) tracking, spectral-temporal averaging (STA) and time-domain reliable
//! test frequency-domain interpolation (TRFI).
//!
//! All estimators work on the active subcarriers in [`FrameSpec`] order. DPA
//! decisions use the known pilot values on pilot subcarriers and hard
//! nearest-point decisions elsewhere.

mod spline;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::phy::{FrameSpec, ModulationScheme, OfdmSymbolFreq};

pub use spline::cubic_spline;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub values: Vec<Complex64>,
}

impl ChannelEstimate {
    pub fn new(values: Vec<Complex64>) -> Self {
        ChannelEstimate { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaParams {
    /// Time-averaging coefficient, `>= 1`.
    pub alpha: f64,
    /// Half-width of the frequency averaging window.
    pub beta: usize,
    /// Estimate that equalises the next symbol for DPA decisions.
    #[serde(default)]
    pub reference: StaReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaReference {
    /// The previous STA output.
    #[default]
    StaOutput,
    /// A separate, unsmoothed DPA track.
    DpaTrack,
}

impl Default for StaParams {
    fn default() -> Self {
        StaParams {
            alpha: 2.0,
            beta: 2,
            reference: StaReference::StaOutput,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Dpa,
    Sta,
    Trfi,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Dpa => "dpa",
            EstimatorKind::Sta => "sta",
            EstimatorKind::Trfi => "trfi",
        }
    }
}

fn nonzero(values: &[Complex64], what: &str) -> Result<()> {
    match values.iter().position(|v| v.norm_sqr() == 0.0) {
        Some(i) => Err(Error::Degenerate(format!("{what} is zero at subcarrier {i}"))),
        None => Ok(()),
    }
}

/// Element-wise mean of `rx / known` over the received preambles.
pub fn ls_preamble(rx_preambles: &[OfdmSymbolFreq], known_preamble: &OfdmSymbolFreq) -> Result<ChannelEstimate> {
    if rx_preambles.is_empty() {
        return Err(Error::Degenerate("LS estimation needs at least one preamble".into()));
    }
    nonzero(&known_preamble.values, "known preamble")?;
    let k_on = known_preamble.len();
    let mut acc = vec![Complex64::new(0.0, 0.0); k_on];
    for rx in rx_preambles {
        check_len("received preamble", k_on, rx.len())?;
        for ((a, r), x) in acc.iter_mut().zip(&rx.values).zip(&known_preamble.values) {
            *a += r / x;
        }
    }
    let n = rx_preambles.len() as f64;
    Ok(ChannelEstimate::new(acc.into_iter().map(|a| a / n).collect()))
}

/// One DPA update: equalise with the previous estimate, decide, divide.
pub fn dpa_step(
    y: &OfdmSymbolFreq,
    h_prev: &ChannelEstimate,
    scheme: &ModulationScheme,
    spec: &FrameSpec,
) -> Result<(ChannelEstimate, OfdmSymbolFreq)> {
    check_len("received symbol", spec.k_on, y.len())?;
    check_len("previous estimate", spec.k_on, h_prev.len())?;
    nonzero(&h_prev.values, "previous channel estimate")?;
    let mut decided = vec![Complex64::new(0.0, 0.0); spec.k_on];
    for &p in &spec.data_indices {
        decided[p] = scheme.nearest(y.values[p] / h_prev.values[p]);
    }
    for (&p, &v) in spec.pilot_indices.iter().zip(&spec.pilot_values) {
        decided[p] = v;
    }
    let h = y.values.iter().zip(&decided).map(|(y, d)| y / d).collect();
    Ok((ChannelEstimate::new(h), OfdmSymbolFreq::new(decided)))
}

/// Equal-weight moving average of half-width `beta`; windows are truncated
/// at the band edges and renormalised.
pub fn frequency_average(h: &[Complex64], beta: usize) -> Vec<Complex64> {
    let n = h.len();
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(beta);
            let hi = (k + beta).min(n - 1);
            h[lo..=hi].iter().sum::<Complex64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// STA time recursion on top of a DPA estimate.
pub fn sta_combine(h_dpa: &ChannelEstimate, h_sta_prev: &ChannelEstimate, params: &StaParams) -> ChannelEstimate {
    let fd = frequency_average(&h_dpa.values, params.beta);
    let w = 1.0 / params.alpha;
    ChannelEstimate::new(
        h_sta_prev
            .values
            .iter()
            .zip(&fd)
            .map(|(p, f)| p * (1.0 - w) + f * w)
            .collect(),
    )
}

/// STA estimate for one symbol, using `h_sta_prev` both as the DPA reference
/// and as the time-averaging state.
pub fn sta_estimate(
    y: &OfdmSymbolFreq,
    h_sta_prev: &ChannelEstimate,
    params: &StaParams,
    scheme: &ModulationScheme,
    spec: &FrameSpec,
) -> Result<ChannelEstimate> {
    validate_sta(params)?;
    let (h_dpa, _) = dpa_step(y, h_sta_prev, scheme, spec)?;
    Ok(sta_combine(&h_dpa, h_sta_prev, params))
}

fn validate_sta(params: &StaParams) -> Result<()> {
    if params.alpha < 1.0 || !params.alpha.is_finite() {
        return Err(Error::Config(format!("STA alpha must be >= 1, got {}", params.alpha)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrfiOutput {
    pub estimate: ChannelEstimate,
    pub reliable: Vec<bool>,
    /// Fewer than four reliable subcarriers: the DPA estimate was returned.
    pub fell_back: bool,
}

/// Replaces unreliable subcarriers of `h_dpa` with a cubic spline through the
/// reliable ones, indexed by signed subcarrier frequency.
pub fn trfi_interpolate(h_dpa: &ChannelEstimate, reliable: &[bool], spec: &FrameSpec) -> Result<TrfiOutput> {
    check_len("reliability mask", spec.k_on, reliable.len())?;
    check_len("DPA estimate", spec.k_on, h_dpa.len())?;
    let n_reliable = reliable.iter().filter(|&&r| r).count();
    if n_reliable < 4 {
        return Ok(TrfiOutput {
            estimate: h_dpa.clone(),
            reliable: reliable.to_vec(),
            fell_back: true,
        });
    }
    if n_reliable == spec.k_on {
        return Ok(TrfiOutput {
            estimate: h_dpa.clone(),
            reliable: reliable.to_vec(),
            fell_back: false,
        });
    }
    let mut xs = Vec::with_capacity(n_reliable);
    let mut re = Vec::with_capacity(n_reliable);
    let mut im = Vec::with_capacity(n_reliable);
    let mut query = Vec::new();
    let mut query_pos = Vec::new();
    for (p, &ok) in reliable.iter().enumerate() {
        let x = spec.active_subcarriers[p] as f64;
        if ok {
            xs.push(x);
            re.push(h_dpa.values[p].re);
            im.push(h_dpa.values[p].im);
        } else {
            query.push(x);
            query_pos.push(p);
        }
    }
    let re_i = cubic_spline(&xs, &re, &query);
    let im_i = cubic_spline(&xs, &im, &query);
    let mut values = h_dpa.values.clone();
    for ((p, r), i) in query_pos.into_iter().zip(re_i).zip(im_i) {
        values[p] = Complex64::new(r, i);
    }
    Ok(TrfiOutput {
        estimate: ChannelEstimate::new(values),
        reliable: reliable.to_vec(),
        fell_back: false,
    })
}

/// TRFI: DPA, then a reliability test on the previous received symbol.
///
/// A data subcarrier is reliable when equalising `y_prev` with the new DPA
/// estimate and with `h_prev` lands on the same constellation point. Pilots
/// are always reliable. Without a previous symbol every subcarrier counts as
/// reliable.
pub fn trfi_estimate(
    y: &OfdmSymbolFreq,
    y_prev: Option<&OfdmSymbolFreq>,
    h_prev: &ChannelEstimate,
    scheme: &ModulationScheme,
    spec: &FrameSpec,
) -> Result<TrfiOutput> {
    let (h_dpa, _) = dpa_step(y, h_prev, scheme, spec)?;
    let mut reliable = vec![true; spec.k_on];
    if let Some(prev) = y_prev {
        check_len("previous received symbol", spec.k_on, prev.len())?;
        for &p in &spec.data_indices {
            if h_dpa.values[p].norm_sqr() == 0.0 {
                reliable[p] = false;
                continue;
            }
            let with_new = scheme.nearest_index(prev.values[p] / h_dpa.values[p]);
            let with_old = scheme.nearest_index(prev.values[p] / h_prev.values[p]);
            reliable[p] = with_new == with_old;
        }
    }
    trfi_interpolate(&h_dpa, &reliable, spec)
}

/// Symbol-by-symbol conventional estimator state.
///
/// `reference` is the estimate used to equalise the next symbol for DPA
/// decisions; `sta_state` is the STA time-averaging memory. Without feedback
/// both follow the estimator's own output; [`ConventionalTracker::feedback`]
/// replaces the decision reference with an externally refined estimate.
#[derive(Debug, Clone)]
pub struct ConventionalTracker<'a> {
    kind: EstimatorKind,
    params: StaParams,
    scheme: &'a ModulationScheme,
    spec: &'a FrameSpec,
    reference: ChannelEstimate,
    sta_state: ChannelEstimate,
    y_prev: Option<OfdmSymbolFreq>,
    pub fallbacks: usize,
}

impl<'a> ConventionalTracker<'a> {
    pub fn new(
        kind: EstimatorKind,
        h_ls: ChannelEstimate,
        params: StaParams,
        scheme: &'a ModulationScheme,
        spec: &'a FrameSpec,
    ) -> Result<Self> {
        check_len("LS estimate", spec.k_on, h_ls.len())?;
        if kind == EstimatorKind::Sta {
            validate_sta(&params)?;
        }
        Ok(ConventionalTracker {
            kind,
            params,
            scheme,
            spec,
            reference: h_ls.clone(),
            sta_state: h_ls,
            y_prev: None,
            fallbacks: 0,
        })
    }

    pub fn step(&mut self, y: &OfdmSymbolFreq) -> Result<ChannelEstimate> {
        let est = match self.kind {
            EstimatorKind::Dpa => dpa_step(y, &self.reference, self.scheme, self.spec)?.0,
            EstimatorKind::Sta => {
                let (h_dpa, _) = dpa_step(y, &self.reference, self.scheme, self.spec)?;
                let est = sta_combine(&h_dpa, &self.sta_state, &self.params);
                self.sta_state = est.clone();
                if self.params.reference == StaReference::DpaTrack {
                    self.reference = h_dpa;
                    return Ok(est);
                }
                est
            }
            EstimatorKind::Trfi => {
                let out = trfi_estimate(y, self.y_prev.as_ref(), &self.reference, self.scheme, self.spec)?;
                if out.fell_back {
                    self.fallbacks += 1;
                }
                self.y_prev = Some(y.clone());
                out.estimate
            }
        };
        self.reference = est.clone();
        Ok(est)
    }

    pub fn feedback(&mut self, refined: &ChannelEstimate) {
        self.reference = refined.clone();
    }
}

/// Runs the chosen estimator across a frame's data symbols, starting from the
/// preamble LS estimate.
pub fn run_conventional(
    frame_rx: &[OfdmSymbolFreq],
    h_ls: &ChannelEstimate,
    kind: EstimatorKind,
    params: &StaParams,
    scheme: &ModulationScheme,
    spec: &FrameSpec,
) -> Result<Vec<ChannelEstimate>> {
    let mut tracker = ConventionalTracker::new(kind, h_ls.clone(), *params, scheme, spec)?;
    frame_rx.iter().map(|y| tracker.step(y)).collect()
}
