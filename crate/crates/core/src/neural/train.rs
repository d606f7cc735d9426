use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::adam::{adam_step, AdamState, TrainConfig};
use super::mlp::{mse_loss, Activation, ForwardCache, Mlp, Params};
use crate::error::{check_len, Error, Result};
use crate::seed::{SeedTree, Stream};

/// Paired input/target rows stored as row-major `f32`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub d_in: usize,
    pub d_out: usize,
    pub inputs: Vec<f32>,
    pub targets: Vec<f32>,
    /// Free-form generation record (profile, SNR, scheme, seeds).
    pub meta: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(d_in: usize, d_out: usize) -> Self {
        Dataset {
            d_in,
            d_out,
            ..Default::default()
        }
    }

    pub fn from_rows(inputs: Vec<f32>, targets: Vec<f32>, d_in: usize, d_out: usize) -> Result<Self> {
        let ds = Dataset {
            d_in,
            d_out,
            inputs,
            targets,
            meta: BTreeMap::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_in == 0 || self.d_out == 0 {
            return Err(Error::Degenerate("dataset dimensions must be positive".into()));
        }
        if self.inputs.len() % self.d_in != 0 {
            return Err(Error::Size {
                what: "dataset inputs",
                expected: self.len() * self.d_in,
                actual: self.inputs.len(),
            });
        }
        check_len("dataset targets", self.len() * self.d_out, self.targets.len())
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.d_in.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: &[f64], target: &[f64]) -> Result<()> {
        check_len("dataset input row", self.d_in, input.len())?;
        check_len("dataset target row", self.d_out, target.len())?;
        self.inputs.extend(input.iter().map(|&v| v as f32));
        self.targets.extend(target.iter().map(|&v| v as f32));
        Ok(())
    }

    pub fn append(&mut self, other: &Dataset) -> Result<()> {
        check_len("appended dataset inputs", self.d_in, other.d_in)?;
        check_len("appended dataset targets", self.d_out, other.d_out)?;
        self.inputs.extend_from_slice(&other.inputs);
        self.targets.extend_from_slice(&other.targets);
        Ok(())
    }

    pub fn input(&self, i: usize) -> &[f32] {
        &self.inputs[i * self.d_in..(i + 1) * self.d_in]
    }

    pub fn target(&self, i: usize) -> &[f32] {
        &self.targets[i * self.d_out..(i + 1) * self.d_out]
    }

    pub fn input_f64(&self, i: usize) -> Vec<f64> {
        self.input(i).iter().map(|&v| v as f64).collect()
    }

    pub fn target_f64(&self, i: usize) -> Vec<f64> {
        self.target(i).iter().map(|&v| v as f64).collect()
    }

    /// Copy of the rows `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            d_in: self.d_in,
            d_out: self.d_out,
            inputs: self.inputs[start * self.d_in..end * self.d_in].to_vec(),
            targets: self.targets[start * self.d_out..end * self.d_out].to_vec(),
            meta: self.meta.clone(),
        }
    }
}

/// Mean per-sample MSE of `model` over the whole dataset.
pub fn evaluate_mse(model: &Mlp, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Degenerate("cannot evaluate on an empty dataset".into()));
    }
    check_len("model input", data.d_in, model.input_dim())?;
    let mut cache = ForwardCache::default();
    let mut total = 0.0;
    for i in 0..data.len() {
        model.forward_into(&data.input_f64(i), &mut cache)?;
        total += mse_loss(cache.output(), &data.target_f64(i))?.0;
    }
    Ok(total / data.len() as f64)
}

const MIN_RELATIVE_IMPROVEMENT: f64 = 1e-4;

/// Mini-batch ADAM on the MSE loss. Returns the trained model and the mean
/// training loss of each epoch.
pub fn train_u(data: &Dataset, arch: &[usize], config: &TrainConfig) -> Result<(Mlp, Vec<f64>)> {
    config.validate()?;
    data.validate()?;
    if data.is_empty() {
        return Err(Error::Degenerate("cannot train on an empty dataset".into()));
    }
    if arch.len() < 2 {
        return Err(Error::Config("architecture needs input and output dims".into()));
    }
    check_len("architecture input dim", data.d_in, arch[0])?;
    check_len("architecture output dim", data.d_out, arch[arch.len() - 1])?;

    let seeds = SeedTree::new(config.seed);
    let mut model = Mlp::init(arch, Activation::Identity, &mut seeds.stream(Stream::Init).rng())?;
    let mut adam = AdamState::new(&model);
    let mut grads = Params::zeros(arch);
    let mut cache = ForwardCache::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut x = vec![0.0; data.d_in];
    let mut t = vec![0.0; data.d_out];

    for epoch in 0..config.epochs {
        order.shuffle(&mut seeds.stream(Stream::Shuffle).child(epoch as u64).rng());
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.fill(0.0);
            for &i in batch {
                to_f64(data.input(i), &mut x);
                to_f64(data.target(i), &mut t);
                model.forward_into(&x, &mut cache)?;
                let (loss, g) = mse_loss(cache.output(), &t)?;
                epoch_loss += loss;
                model.backward_accumulate(&cache, &g, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut model, &mut adam, &grads, config)?;
        }
        let epoch_loss = epoch_loss / data.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss diverged at epoch {epoch}")));
        }
        history.push(epoch_loss);
        if let Some(patience) = config.patience {
            if epoch_loss < best * (1.0 - MIN_RELATIVE_IMPROVEMENT) {
                best = epoch_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok((model, history))
}

pub(crate) fn to_f64(src: &[f32], dst: &mut [f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = *s as f64;
    }
}
