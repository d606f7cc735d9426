//! Link-level OFDM simulation over doubly-selective vehicular channels, the
//! conventional DPA/STA/TRFI channel estimators, a small dense-network stack,
//! and the noise-mask explainability pipeline that ranks which input
//! subcarriers a trained channel-estimation network relies on.
//!
//! The crate is organised bottom-up:
//!
//! - [`phy`]: constellations, OFDM framing, IFFT/CP modulation, the Rapp HPA.
//! - [`channel`]: tapped-delay-line Rayleigh fading with a Jakes spectrum, AWGN.
//! - [`estimators`]: LS, DPA, STA and TRFI estimation.
//! - [`neural`]: MLP forward/backward, ADAM, MSE training, persistence.
//! - [`xai`]: noise-mask network training, relevance sets, threshold sweeps.
//! - [`eval`]: BER links, FLOPS accounting, noise-weight histograms.

pub mod channel;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod neural;
pub mod phy;
pub mod seed;
pub mod xai;

pub use error::{Error, Result};
pub use num_complex::Complex64;
