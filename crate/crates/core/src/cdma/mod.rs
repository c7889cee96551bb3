//! DS-CDMA uplink with a uniform linear antenna array.
//!
//! Users spread BPSK symbols with random binary codes, pass through
//! three-path fading channels and arrive at the array with per-path
//! directions of arrival. The receiver observes `J (N + L_p - 1)` chip
//! samples per symbol, including the spill from the neighbouring symbols.

pub mod channel;
pub mod scenario;
pub mod signature;
pub mod trial;

pub use channel::{gen_channel, ChannelConfig, ChannelModel, FadingProcess, SpaceTimeChannel};
pub use scenario::{ScenarioConfig, SignalComponent, Snapshot, TrialScenario};
pub use signature::{
    build_convolution_matrices, gen_signatures, ConvolutionMatrices, SymbolSlot, UserSignature,
};
pub use trial::{decide, frames, run_ber_trial, run_on_frames, Frame, Receiver, TrialOutcome};
