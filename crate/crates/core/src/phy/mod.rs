//! Baseband physical layer: Gray-mapped QAM, 802.11p-style OFDM framing,
//! unitary IFFT/FFT with cyclic prefix, and a memoryless Rapp amplifier.

mod constellation;
mod frame;
mod hpa;
mod ofdm;

pub use constellation::{demap_nearest, map_bits, Modulation, ModulationScheme};
pub use frame::{build_frame, extract_data, FrameSpec, OfdmSymbolFreq};
pub use hpa::{bussgang_decompose, hpa_apply, rapp_am_am, HpaKind, HpaModel};
pub use ofdm::{ofdm_demodulate, ofdm_modulate, TimeSignal};
