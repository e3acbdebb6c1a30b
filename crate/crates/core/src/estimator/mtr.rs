//! Symbol-rate comparison estimator whose phase transition law is learned
//! from a training simulation.
//!
//! The receiver adds the L samples of each symbol of the multi-sample model
//! without filter factors, V_m = sum_l Psi_l, and
//! decodes with V_m = c X_m e^{j Theta_m} + Z_m, c = sum_l Delta g_l. The
//! phase chain Theta_m is quantized to S states and its transition matrix is
//! estimated by counting consecutive quantized phases of the noise-free
//! per-symbol phasor, with one pseudo-count per entry.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{simulate_from, ModelKind};
use crate::error::{Error, Result};
use crate::phase_noise::ChannelConfig;
use crate::rng;
use crate::signal::{draw_iud_symbols, Constellation, Pulse};

use super::forward::Emission;
use super::propagator::Propagator;
use super::quantizer::{build_quantizer, PhaseQuantizer};
use super::rate::{
    check_options, rate_from_data, AuxChannel, RateEstimate, RateOptions, ReplicaEstimate,
    PURPOSE_DATA, PURPOSE_TRAINING,
};

/// Minimum training length in symbols.
pub const MIN_TRAINING: usize = 10_000;

/// Laplace-smoothed transition matrix of the quantized phase sequence,
/// row-major with rows indexed by the previous state.
pub fn estimate_transitions(phases: &[f64], q: &PhaseQuantizer) -> Vec<f64> {
    let s = q.states();
    let mut counts = vec![1.0; s * s];
    for w in phases.windows(2) {
        counts[q.cell_of(w[0]) * s + q.cell_of(w[1])] += 1.0;
    }
    for row in counts.chunks_mut(s) {
        let total: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    counts
}

/// Argument of the noise-free per-symbol phasor of a filter-free
/// multi-sample simulation of `n_train` symbols.
pub fn training_phases(
    constellation: &Constellation,
    pulse: &Pulse,
    config: &ChannelConfig,
    n_train: usize,
    rng: &mut rng::Stream,
) -> Result<Vec<f64>> {
    let symbols = draw_iud_symbols(constellation, n_train, config.p, rng)?;
    let obs = simulate_from(
        ModelKind::MultisampleApprox,
        &symbols,
        pulse,
        config,
        Default::default(),
        rng,
    )?;
    Ok(obs.symbol_phasors().iter().map(|z| z.arg()).collect())
}

/// MTR auxiliary channel with the learned transition matrix.
pub fn mtr_channel(
    config: &ChannelConfig,
    constellation: &Constellation,
    pulse: &Pulse,
    states: usize,
    phases: &[f64],
) -> Result<AuxChannel> {
    let quantizer = build_quantizer(states)?;
    let matrix = estimate_transitions(phases, &quantizer);
    let gain: f64 = pulse.sample_weights(config).iter().sum::<f64>() * config.delta();
    let mut aux = AuxChannel::symbol_rate(config, constellation, states, gain, 0.0)?;
    aux.propagator = Propagator::dense(states, matrix)?;
    aux.emission = Emission::new(gain, config.sigma_n2 * config.ts)?;
    aux.quantizer = quantizer;
    Ok(aux)
}

/// Rate of the MTR receiver on filter-free multi-sample data, in bits per
/// symbol.
///
/// Replica r uses the same data stream as [`super::estimate_rate_lb`], so
/// symbols, phase and noise match those of the multi-sample estimate.
pub fn estimate_rate_lb_mtr(
    constellation: &Constellation,
    pulse: &Pulse,
    config: &ChannelConfig,
    n_train: usize,
    opts: &RateOptions,
) -> Result<RateEstimate> {
    check_options(opts)?;
    config.validate()?;
    check_training(n_train)?;
    let replicas: Result<Vec<ReplicaEstimate>> = (0..opts.replicas)
        .into_par_iter()
        .map(|r| mtr_replica(constellation, pulse, config, n_train, opts, r))
        .collect();
    RateEstimate::combine(replicas?, opts.tolerance)
}

/// A single replica of [`estimate_rate_lb_mtr`].
pub fn estimate_replica_mtr(
    constellation: &Constellation,
    pulse: &Pulse,
    config: &ChannelConfig,
    n_train: usize,
    opts: &RateOptions,
    replica: usize,
) -> Result<ReplicaEstimate> {
    check_options(opts)?;
    config.validate()?;
    check_training(n_train)?;
    mtr_replica(constellation, pulse, config, n_train, opts, replica)
}

fn check_training(n_train: usize) -> Result<()> {
    if n_train < MIN_TRAINING {
        return Err(Error::param(
            "n_train",
            format!("at least {MIN_TRAINING} training symbols, got {n_train}"),
        ));
    }
    Ok(())
}

fn mtr_replica(
    constellation: &Constellation,
    pulse: &Pulse,
    config: &ChannelConfig,
    n_train: usize,
    opts: &RateOptions,
    r: usize,
) -> Result<ReplicaEstimate> {
    let mut train = rng::stream(opts.seed, rng::stream_index(PURPOSE_TRAINING, r as u32));
    let phases = training_phases(constellation, pulse, config, n_train, &mut train)?;
    let aux = mtr_channel(config, constellation, pulse, opts.states, &phases)?;

    let mut rng = rng::stream(opts.seed, rng::stream_index(PURPOSE_DATA, r as u32));
    let symbols = draw_iud_symbols(constellation, opts.nsymb, config.p, &mut rng)?;
    let obs = simulate_from(
        ModelKind::MultisampleApprox,
        &symbols,
        pulse,
        config,
        opts.initial_phase,
        &mut rng,
    )?;
    let v: Vec<Complex64> = obs.symbol_sums();
    let mut est = rate_from_data(&symbols, &v, &aux, opts.batches)?;
    est.replica = r;
    Ok(est)
}
