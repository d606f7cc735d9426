//! Dense networks with exact reverse-mode gradients, ADAM and MSE training.

mod adam;
mod mlp;
mod persist;
mod train;

pub use adam::{adam_step, AdamState, TrainConfig};
pub use mlp::{mse_loss, Activation, ForwardCache, Mlp, Params};
pub use persist::{load_model, model_from_str, model_to_string, save_model, MODEL_FORMAT_VERSION};
pub use train::{evaluate_mse, train_u, Dataset};
pub(crate) use train::to_f64;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real parts first, then imaginary parts.
pub fn stack_complex(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|c| c.re).chain(v.iter().map(|c| c.im)).collect()
}

pub fn unstack_complex(v: &[f64]) -> Result<Vec<Complex64>> {
    if v.len() % 2 != 0 {
        return Err(Error::Size {
            what: "stacked complex vector (must be even)",
            expected: v.len() + 1,
            actual: v.len(),
        });
    }
    let m = v.len() / 2;
    Ok((0..m).map(|k| Complex64::new(v[k], v[k + m])).collect())
}
