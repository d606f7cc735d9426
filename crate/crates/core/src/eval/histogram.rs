use crate::error::{Error, Result};
use crate::phy::FrameSpec;
use crate::xai::AggregatedMask;

/// Pooled noise weights in uniform bins on `[0, 1]`, pilots and data apart.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightHistogram {
    pub edges: Vec<f64>,
    pub count_data: Vec<u64>,
    pub count_pilot: Vec<u64>,
}

impl WeightHistogram {
    pub fn bins(&self) -> usize {
        self.count_data.len()
    }

    pub fn total(&self) -> u64 {
        self.count_data.iter().chain(&self.count_pilot).sum()
    }
}

pub fn noise_weight_histogram(masks: &[AggregatedMask], bins: usize, spec: &FrameSpec) -> Result<WeightHistogram> {
    if bins < 2 {
        return Err(Error::Config(format!("histogram needs at least 2 bins, got {bins}")));
    }
    let mut count_data = vec![0u64; bins];
    let mut count_pilot = vec![0u64; bins];
    for mask in masks {
        if mask.values.len() != spec.k_on {
            return Err(Error::Size {
                what: "aggregated mask",
                expected: spec.k_on,
                actual: mask.values.len(),
            });
        }
        for (k, &w) in mask.values.iter().enumerate() {
            let bin = ((w.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
            if spec.is_pilot(k) {
                count_pilot[bin] += 1;
            } else {
                count_data[bin] += 1;
            }
        }
    }
    Ok(WeightHistogram {
        edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
        count_data,
        count_pilot,
    })
}
