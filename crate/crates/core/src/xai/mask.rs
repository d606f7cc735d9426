use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::neural::{Dataset, ForwardCache, Mlp};

/// Lower clamp applied to emitted noise weights so `log` stays finite.
pub const MASK_FLOOR: f64 = 1e-6;

#[inline]
pub(crate) fn clamp_mask(v: f64) -> f64 {
    v.clamp(MASK_FLOOR, 1.0 - MASK_FLOOR)
}

/// Per-input noise standard deviations, one per stacked coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMask {
    pub values: Vec<f64>,
}

/// Per-subcarrier noise weight: the mean of the real and imaginary entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedMask {
    pub values: Vec<f64>,
}

impl AggregatedMask {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }
}

pub fn aggregate_mask(mask: &NoiseMask, k_on: usize) -> Result<AggregatedMask> {
    check_len("noise mask", 2 * k_on, mask.values.len())?;
    Ok(AggregatedMask {
        values: (0..k_on).map(|k| 0.5 * (mask.values[k] + mask.values[k + k_on])).collect(),
    })
}

/// Clamped mask emitted by the noise network for one input.
pub fn mask_for_input(n_model: &Mlp, x: &[f64]) -> Result<NoiseMask> {
    Ok(NoiseMask {
        values: n_model.predict(x)?.into_iter().map(clamp_mask).collect(),
    })
}

/// Aggregated mask of every row of `data`.
pub fn aggregated_masks(n_model: &Mlp, data: &Dataset, k_on: usize) -> Result<Vec<AggregatedMask>> {
    check_len("noise model input", data.d_in, n_model.input_dim())?;
    let mut cache = ForwardCache::default();
    let mut x = vec![0.0; data.d_in];
    (0..data.len())
        .map(|i| {
            crate::neural::to_f64(data.input(i), &mut x);
            n_model.forward_into(&x, &mut cache)?;
            let mask = NoiseMask {
                values: cache.output().iter().map(|&v| clamp_mask(v)).collect(),
            };
            aggregate_mask(&mask, k_on)
        })
        .collect()
}

/// Mean aggregated mask over a dataset.
pub fn mean_aggregated_mask(n_model: &Mlp, data: &Dataset, k_on: usize) -> Result<AggregatedMask> {
    if data.is_empty() {
        return Err(Error::Degenerate("mask of an empty dataset".into()));
    }
    let masks = aggregated_masks(n_model, data, k_on)?;
    let mut acc = vec![0.0; k_on];
    for m in &masks {
        for (a, v) in acc.iter_mut().zip(&m.values) {
            *a += v;
        }
    }
    let n = masks.len() as f64;
    Ok(AggregatedMask {
        values: acc.into_iter().map(|a| a / n).collect(),
    })
}

/// Partition of the active subcarriers by a noise-weight threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceSet {
    pub gamma: f64,
    /// Positions with weight strictly below `gamma`, ascending.
    pub relevant: Vec<usize>,
    pub irrelevant: Vec<usize>,
}

impl RelevanceSet {
    /// Every subcarrier relevant.
    pub fn all(k_on: usize) -> Self {
        RelevanceSet {
            gamma: 1.0,
            relevant: (0..k_on).collect(),
            irrelevant: Vec::new(),
        }
    }

    /// An explicit set, e.g. the pilots.
    pub fn from_indices(indices: &[usize], k_on: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= k_on) {
            return Err(Error::Bounds { index: bad, len: k_on });
        }
        let mut relevant = indices.to_vec();
        relevant.sort_unstable();
        relevant.dedup();
        let irrelevant = (0..k_on).filter(|i| relevant.binary_search(i).is_err()).collect();
        Ok(RelevanceSet {
            gamma: f64::NAN,
            relevant,
            irrelevant,
        })
    }

    /// The complement as a relevance set of its own.
    pub fn complement(&self) -> Self {
        RelevanceSet {
            gamma: self.gamma,
            relevant: self.irrelevant.clone(),
            irrelevant: self.relevant.clone(),
        }
    }

    pub fn k_on(&self) -> usize {
        self.relevant.len() + self.irrelevant.len()
    }

    /// Columns of the stacked input kept for this set: real parts of the
    /// relevant subcarriers, then their imaginary parts.
    pub fn columns(&self) -> Vec<usize> {
        let k_on = self.k_on();
        self.relevant
            .iter()
            .copied()
            .chain(self.relevant.iter().map(|k| k + k_on))
            .collect()
    }

    pub fn select(&self, stacked: &[f64]) -> Result<Vec<f64>> {
        check_len("stacked input", 2 * self.k_on(), stacked.len())?;
        Ok(self.columns().into_iter().map(|c| stacked[c]).collect())
    }
}

/// Relevant = weight strictly below `gamma`; ties go to irrelevant.
pub fn classify_subcarriers(b: &AggregatedMask, gamma: f64) -> RelevanceSet {
    let (relevant, irrelevant) = (0..b.values.len()).partition(|&k| b.values[k] < gamma);
    RelevanceSet {
        gamma,
        relevant,
        irrelevant,
    }
}

/// Keeps only the input columns of the relevant subcarriers; targets are
/// untouched.
pub fn filter_dataset(data: &Dataset, rel: &RelevanceSet) -> Result<Dataset> {
    check_len("dataset input (full stacked width)", 2 * rel.k_on(), data.d_in)?;
    if rel.relevant.is_empty() {
        return Err(Error::Degenerate("relevance set is empty: no input columns left".into()));
    }
    let cols = rel.columns();
    let mut inputs = Vec::with_capacity(data.len() * cols.len());
    for i in 0..data.len() {
        let row = data.input(i);
        inputs.extend(cols.iter().map(|&c| row[c]));
    }
    let mut out = Dataset::from_rows(inputs, data.targets.clone(), cols.len(), data.d_out)?;
    out.meta = data.meta.clone();
    Ok(out)
}
