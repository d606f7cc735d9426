use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerFlops {
    pub inputs: usize,
    pub outputs: usize,
    pub multiply_adds: usize,
    pub bias_adds: usize,
    /// Reported for reference, not part of the total.
    pub activations: usize,
}

impl LayerFlops {
    pub fn flops(&self) -> usize {
        2 * self.multiply_adds + self.bias_adds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlopsReport {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<LayerFlops>,
    pub total: usize,
}

/// Inference cost of a dense network: two flops per multiply-add plus one
/// per bias add, summed over layers.
pub fn count_flops(layer_dims: &[usize]) -> Result<FlopsReport> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(format!(
            "FLOPS need at least an input and an output dim, got {layer_dims:?}"
        )));
    }
    let layers: Vec<LayerFlops> = layer_dims
        .windows(2)
        .map(|w| LayerFlops {
            inputs: w[0],
            outputs: w[1],
            multiply_adds: w[0] * w[1],
            bias_adds: w[1],
            activations: w[1],
        })
        .collect();
    let total = layers.iter().map(LayerFlops::flops).sum();
    Ok(FlopsReport {
        layer_dims: layer_dims.to_vec(),
        layers,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_definition() {
        for (n, m) in [(1, 1), (8, 104), (104, 15)] {
            assert_eq!(count_flops(&[n, m]).unwrap().total, 2 * n * m + m);
        }
        assert!(count_flops(&[5]).is_err());
    }

    #[test]
    fn total_is_sum_of_layers() {
        let r = count_flops(&[104, 15, 15, 15, 104]).unwrap();
        assert_eq!(r.total, 7289);
        assert_eq!(r.layers.iter().map(|l| l.flops()).sum::<usize>(), r.total);
        assert_eq!(count_flops(&[8, 10, 104]).unwrap().total, 2354);
    }
}
