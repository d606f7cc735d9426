//! Noise-mask explainability for a trained channel-estimation network `U`.
//!
//! A second network `N` with the same architecture and a sigmoid output
//! learns, per input coordinate, the standard deviation of Gaussian noise
//! that `U` tolerates. Training minimises `L_U − λ·mean(log b′)`: the first
//! term keeps `U` accurate on the perturbed input, the second rewards large
//! noise. Inputs that receive little noise are the ones `U` relies on.

mod mask;
mod probe;
mod sweep;
mod train_n;

pub use mask::{
    aggregate_mask, aggregated_masks, classify_subcarriers, filter_dataset, mask_for_input, mean_aggregated_mask, AggregatedMask,
    NoiseMask, RelevanceSet, MASK_FLOOR,
};
pub use probe::{find_convexity_violation, loss_landscape_probe, unit_direction, ConvexityViolation, ProbeResult, CONVEXITY_TOLERANCE};
pub use sweep::{
    architecture, select_threshold, threshold_sweep, train_and_evaluate, SweepRecord, SweepResult, SweepSetup, TrainedVariant,
};
pub use train_n::{composite_loss, init_n_model, mask_log_term, train_n_from, train_n_model, CompositeLoss, CompositeScratch, NEpoch};
