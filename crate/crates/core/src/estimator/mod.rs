//! Auxiliary-channel lower bounds on the information rate.
//!
//! The auxiliary channel quantizes the phase to S states that follow a
//! first-order Markov chain. Rates are computed from the forward recursion
//! of that hidden Markov model run on data from the true channel.

pub mod forward;
pub mod mtr;
pub mod propagator;
pub mod quantizer;
pub mod rate;
pub mod transition;

pub use forward::{
    forward_conditional, forward_conditional_trace, forward_marginal, forward_marginal_trace,
    Candidate, Emission, ForwardState, SymbolKernel,
};
pub use mtr::{
    estimate_rate_lb_mtr, estimate_replica_mtr, estimate_transitions, mtr_channel, training_phases,
};
pub use propagator::{Propagator, Workspace};
pub use quantizer::{build_quantizer, PhaseQuantizer};
pub use rate::{
    aux_for_model, estimate_rate_lb, estimate_replica, rate_from_data, AuxChannel, RateEstimate,
    RateOptions, ReplicaEstimate,
};
pub use transition::{build_transitions, TransitionTable};
