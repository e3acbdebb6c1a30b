//! Wiener phase-noise waveform channels.
//!
//! Simulation of oversampled integrate-and-dump receivers under Wiener phase
//! noise, simulation-based lower bounds on their information rates through
//! quantized-phase auxiliary channels, and closed-form moments and high-SNR
//! bounds.

pub mod bounds;
pub mod channel;
pub mod dump;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod lemmas;
pub mod moments;
pub mod phase_noise;
pub mod quadrature;
pub mod rng;
pub mod signal;

pub use channel::{double_filter_energy, simulate, ModelKind, Observation, SampleBlock};
pub use error::{Error, Result};
pub use moments::{closed_form_moments, moment_limits, MomentReport};
pub use phase_noise::{ChannelConfig, FilterFactor, PhasePath};
pub use signal::{Constellation, Pulse};
