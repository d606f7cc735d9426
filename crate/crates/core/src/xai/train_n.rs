use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::mask::{clamp_mask, MASK_FLOOR};
use crate::error::{check_len, Error, Result};
use crate::neural::{adam_step, mse_loss, to_f64, Activation, AdamState, Dataset, ForwardCache, Mlp, Params, TrainConfig};
use crate::seed::{SeedTree, Stream};

/// The three terms of the noise-network objective `L_N = L_U − λ·L_X`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompositeLoss {
    pub l_n: f64,
    pub l_u: f64,
    pub l_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NEpoch {
    pub loss: CompositeLoss,
    pub mean_mask: f64,
}

/// Reusable buffers for [`composite_loss`].
#[derive(Debug, Default)]
pub struct CompositeScratch {
    n_cache: ForwardCache,
    u_cache: ForwardCache,
    mask: Vec<f64>,
    perturbed: Vec<f64>,
}

/// Composite loss of one sample with a fixed noise draw `eps`.
///
/// `b′ = clamp(N(x))`, `x″ = x + b′⊙ε`, `L_U = MSE(U(x″), h)`,
/// `L_X = mean(log b′)`. When `grads` is given, `∂L_N/∂θ_N` is added to it;
/// the gradient reaches `b′` through the input gradient of the frozen `U`.
pub fn composite_loss(
    u_model: &Mlp,
    n_model: &Mlp,
    x: &[f64],
    h: &[f64],
    eps: &[f64],
    lambda: f64,
    grads: Option<&mut Params>,
    scratch: &mut CompositeScratch,
) -> Result<CompositeLoss> {
    let d = x.len();
    check_len("noise draw", d, eps.len())?;
    n_model.forward_into(x, &mut scratch.n_cache)?;
    let raw = scratch.n_cache.output();
    scratch.mask.clear();
    scratch.mask.extend(raw.iter().map(|&v| clamp_mask(v)));
    scratch.perturbed.clear();
    scratch
        .perturbed
        .extend(x.iter().zip(&scratch.mask).zip(eps).map(|((x, b), e)| x + b * e));
    u_model.forward_into(&scratch.perturbed, &mut scratch.u_cache)?;
    let (l_u, g_out) = mse_loss(scratch.u_cache.output(), h)?;
    let l_x = mask_log_term(&scratch.mask);
    let loss = CompositeLoss {
        l_n: l_u - lambda * l_x,
        l_u,
        l_x,
    };
    if let Some(grads) = grads {
        let g_in = u_model.input_gradient(&scratch.u_cache, &g_out)?;
        let g_mask: Vec<f64> = (0..d)
            .map(|j| {
                let s = raw[j];
                if s < MASK_FLOOR || s > 1.0 - MASK_FLOOR {
                    0.0
                } else {
                    g_in[j] * eps[j] - lambda / (d as f64 * scratch.mask[j])
                }
            })
            .collect();
        n_model.backward_accumulate(&scratch.n_cache, &g_mask, grads)?;
    }
    Ok(loss)
}

/// Mean of `log b′`; zero exactly when every entry is one, negative otherwise.
pub fn mask_log_term(mask: &[f64]) -> f64 {
    mask.iter().map(|b| b.ln()).sum::<f64>() / mask.len() as f64
}

/// Seeded initial noise network: the `U` architecture with a sigmoid output.
pub fn init_n_model(u_model: &Mlp, seed: u64) -> Result<Mlp> {
    let mut rng = SeedTree::new(seed).stream(Stream::Init).child(1).rng();
    Mlp::init(&u_model.layer_dims, Activation::Sigmoid, &mut rng)
}

/// Trains the noise network against a frozen `U`.
pub fn train_n_model(u_model: &Mlp, data: &Dataset, config: &TrainConfig) -> Result<(Mlp, Vec<NEpoch>)> {
    let n_model = init_n_model(u_model, config.seed)?;
    train_n_from(u_model, n_model, data, config)
}

/// Like [`train_n_model`] but starting from a given noise network.
pub fn train_n_from(u_model: &Mlp, mut n_model: Mlp, data: &Dataset, config: &TrainConfig) -> Result<(Mlp, Vec<NEpoch>)> {
    config.validate()?;
    data.validate()?;
    if data.is_empty() {
        return Err(Error::Degenerate("cannot train the noise network on an empty dataset".into()));
    }
    check_len("U input dim", data.d_in, u_model.input_dim())?;
    check_len("U output dim", data.d_out, u_model.output_dim())?;
    if n_model.layer_dims != u_model.layer_dims || n_model.output_activation != Activation::Sigmoid {
        return Err(Error::Config("noise network must mirror the U architecture with a sigmoid output".into()));
    }

    let seeds = SeedTree::new(config.seed);
    let mut adam = AdamState::new(&n_model);
    let mut grads = Params::zeros(&n_model.layer_dims);
    let mut scratch = CompositeScratch::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut x = vec![0.0; data.d_in];
    let mut h = vec![0.0; data.d_out];
    let mut eps = vec![0.0; data.d_in];
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut seeds.stream(Stream::Shuffle).child(epoch as u64).rng());
        let mut eps_rng = seeds.stream(Stream::Epsilon).child(epoch as u64).rng();
        let mut total = CompositeLoss::default();
        let mut mask_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            grads.fill(0.0);
            for &i in batch {
                to_f64(data.input(i), &mut x);
                to_f64(data.target(i), &mut h);
                for e in eps.iter_mut() {
                    *e = StandardNormal.sample(&mut eps_rng);
                }
                let l = composite_loss(u_model, &n_model, &x, &h, &eps, config.lambda, Some(&mut grads), &mut scratch)?;
                if !l.l_n.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "noise-network loss at epoch {epoch}, batch {b}, row {i}: L_U = {}, L_X = {}",
                        l.l_u, l.l_x
                    )));
                }
                total.l_n += l.l_n;
                total.l_u += l.l_u;
                total.l_x += l.l_x;
                mask_sum += scratch.mask.iter().sum::<f64>() / data.d_in as f64;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut n_model, &mut adam, &grads, config)?;
        }
        let n = data.len() as f64;
        history.push(NEpoch {
            loss: CompositeLoss {
                l_n: total.l_n / n,
                l_u: total.l_u / n,
                l_x: total.l_x / n,
            },
            mean_mask: mask_sum / n,
        });
    }
    Ok((n_model, history))
}
