//! Doubly-selective vehicular channels: tapped delay lines whose taps fade
//! with a Jakes Doppler spectrum, per-symbol frequency responses, the
//! Doppler-induced inter-carrier interference term, and AWGN.

mod awgn;
mod fading;
mod profile;

pub use awgn::{add_awgn, noise_variance};
pub use fading::{
    apply_channel, generate_realization, ici_term, true_freq_response, ChannelRealization, FreqResponse,
    SINUSOIDS_PER_TAP,
};
pub use profile::{make_profile, ChannelProfile, ProfileName};
