use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Sigmoid,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            "sigmoid" => Some(Activation::Sigmoid),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// Weights and biases of a dense network, or gradients / optimizer moments
/// with the same shapes. `weights[l]` is row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Params {
    pub fn zeros(layer_dims: &[usize]) -> Self {
        let pairs = layer_dims.windows(2);
        Params {
            weights: pairs.clone().map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: pairs.map(|w| vec![0.0; w[1]]).collect(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.iter().count()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| w.iter().chain(b))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    pub fn fill(&mut self, value: f64) {
        self.iter_mut().for_each(|p| *p = value);
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|p| *p *= factor);
    }

    pub fn same_shape(&self, other: &Params) -> bool {
        self.weights.len() == other.weights.len()
            && self.weights.iter().zip(&other.weights).all(|(a, b)| a.len() == b.len())
            && self.biases.iter().zip(&other.biases).all(|(a, b)| a.len() == b.len())
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Fully connected network with ReLU hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layer_dims: Vec<usize>,
    pub params: Params,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl Mlp {
    pub fn zeros(layer_dims: &[usize], output_activation: Activation) -> Result<Self> {
        validate_dims(layer_dims)?;
        Ok(Mlp {
            layer_dims: layer_dims.to_vec(),
            params: Params::zeros(layer_dims),
            hidden_activation: Activation::Relu,
            output_activation,
        })
    }

    /// Seeded initialisation.
    ///
    /// Hidden ReLU layers draw from a normal with variance `2 / fan_in`
    /// truncated at two standard deviations; the output layer is
    /// Glorot-uniform. Biases start at zero.
    pub fn init<R: Rng + ?Sized>(layer_dims: &[usize], output_activation: Activation, rng: &mut R) -> Result<Self> {
        let mut mlp = Mlp::zeros(layer_dims, output_activation)?;
        let n_layers = mlp.num_layers();
        for l in 0..n_layers {
            let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
            let w = &mut mlp.params.weights[l];
            if l + 1 < n_layers {
                let sigma = (2.0 / fan_in as f64).sqrt();
                for v in w.iter_mut() {
                    *v = sigma * truncated_normal(rng);
                }
            } else {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for v in w.iter_mut() {
                    *v = rng.random_range(-limit..limit);
                }
            }
        }
        Ok(mlp)
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_dims(&self.layer_dims)?;
        if !self.params.same_shape(&Params::zeros(&self.layer_dims)) {
            return Err(Error::Degenerate("parameter shapes do not chain with layer_dims".into()));
        }
        if self.hidden_activation != Activation::Relu {
            return Err(Error::Config("hidden activation must be relu".into()));
        }
        if self.output_activation == Activation::Relu {
            return Err(Error::Config("output activation must be identity or sigmoid".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let mut cache = ForwardCache::default();
        self.forward_into(x, &mut cache)?;
        Ok((cache.output().to_vec(), cache))
    }

    /// Forward pass reusing the buffers of `cache`.
    pub fn forward_into(&self, x: &[f64], cache: &mut ForwardCache) -> Result<()> {
        check_len("network input", self.input_dim(), x.len())?;
        let n = self.num_layers();
        cache.activations.resize_with(n + 1, Vec::new);
        cache.pre_activations.resize_with(n, Vec::new);
        cache.activations[0].clear();
        cache.activations[0].extend_from_slice(x);
        for l in 0..n {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let w = &self.params.weights[l];
            let b = &self.params.biases[l];
            let act = self.activation(l);
            let (done, rest) = cache.activations.split_at_mut(l + 1);
            let input = &done[l];
            let z = &mut cache.pre_activations[l];
            let a = &mut rest[0];
            z.clear();
            a.clear();
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let s = b[o] + dot(row, input);
                z.push(s);
                a.push(act.apply(s));
            }
        }
        Ok(())
    }

    /// Output only.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Reverse pass: returns parameter gradients and the gradient with
    /// respect to the input.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64]) -> Result<(Params, Vec<f64>)> {
        let mut grads = Params::zeros(&self.layer_dims);
        let input_grad = self.backward_accumulate(cache, grad_output, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`Mlp::backward`] but adds the parameter gradients into `grads`.
    pub fn backward_accumulate(&self, cache: &ForwardCache, grad_output: &[f64], grads: &mut Params) -> Result<Vec<f64>> {
        if !grads.same_shape(&self.params) {
            return Err(Error::Degenerate("gradient buffer shape does not match the network".into()));
        }
        self.backward_impl(cache, grad_output, Some(grads))
    }

    /// Gradient with respect to the input only.
    pub fn input_gradient(&self, cache: &ForwardCache, grad_output: &[f64]) -> Result<Vec<f64>> {
        self.backward_impl(cache, grad_output, None)
    }

    fn backward_impl(&self, cache: &ForwardCache, grad_output: &[f64], mut grads: Option<&mut Params>) -> Result<Vec<f64>> {
        let n = self.num_layers();
        check_len("cached layers", n + 1, cache.activations.len())?;
        check_len("output gradient", self.output_dim(), grad_output.len())?;
        let mut upstream = grad_output.to_vec();
        for l in (0..n).rev() {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let act = self.activation(l);
            let z = &cache.pre_activations[l];
            let a = &cache.activations[l + 1];
            let input = &cache.activations[l];
            check_len("cached pre-activation", fan_out, z.len())?;
            check_len("cached activation", fan_in, input.len())?;
            let w = &self.params.weights[l];
            let mut downstream = vec![0.0; fan_in];
            for o in 0..fan_out {
                let delta = upstream[o] * act.derivative(z[o], a[o]);
                if delta == 0.0 {
                    continue;
                }
                let row = o * fan_in..(o + 1) * fan_in;
                for (d, wv) in downstream.iter_mut().zip(&w[row.clone()]) {
                    *d += delta * wv;
                }
                if let Some(g) = grads.as_deref_mut() {
                    g.biases[l][o] += delta;
                    for (gw, x) in g.weights[l][row].iter_mut().zip(input) {
                        *gw += delta * x;
                    }
                }
            }
            upstream = downstream;
        }
        Ok(upstream)
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(format!("a network needs at least two layer dims, got {}", layer_dims.len())));
    }
    if layer_dims.contains(&0) {
        return Err(Error::Config("layer dims must be positive".into()));
    }
    Ok(())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn truncated_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = StandardNormal.sample(rng);
        if v.abs() <= 2.0 {
            return v;
        }
    }
}

/// Mean squared error over coordinates and its gradient.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len("MSE target", pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::Degenerate("MSE of empty vectors".into()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}
