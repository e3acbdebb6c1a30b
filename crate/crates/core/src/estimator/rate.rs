use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{simulate_from, ModelKind};
use crate::error::{Error, Result};
use crate::phase_noise::{ChannelConfig, InitialPhase};
use crate::rng;
use crate::signal::{draw_iud_symbols, Constellation, Pulse};

use super::forward::{forward_conditional_trace, forward_marginal_trace, Candidate, Emission};
use super::propagator::Propagator;
use super::quantizer::{build_quantizer, PhaseQuantizer};
use super::transition::{build_transitions, TransitionTable};

/// Stream purposes within one replica.
pub(crate) const PURPOSE_DATA: u32 = 0;
pub(crate) const PURPOSE_TRAINING: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RateOptions {
    /// Number of quantized phase states S.
    pub states: usize,
    pub nsymb: usize,
    pub replicas: usize,
    pub seed: u64,
    pub initial_phase: InitialPhase,
    /// Batches per replica for the within-replica standard error.
    pub batches: usize,
    /// Standard error above which an estimate is flagged as unstable.
    pub tolerance: Option<f64>,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            states: 32,
            nsymb: 2000,
            replicas: 4,
            seed: 1,
            initial_phase: InitialPhase::Uniform,
            batches: 20,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaEstimate {
    pub replica: usize,
    pub rate_bits: f64,
    /// Batch-means standard error within the replica.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rate_bits: f64,
    pub std_error: f64,
    pub replicas: Vec<ReplicaEstimate>,
    /// Set when `std_error` exceeds the requested tolerance.
    pub unstable: bool,
}

impl RateEstimate {
    /// Mean over replicas; the standard error is the replica spread over
    /// sqrt(R), or the batch error when there is a single replica.
    pub fn combine(replicas: Vec<ReplicaEstimate>, tolerance: Option<f64>) -> Result<Self> {
        let n = replicas.len();
        if n == 0 {
            return Err(Error::param("replicas", "at least one replica"));
        }
        let mean = replicas.iter().map(|r| r.rate_bits).sum::<f64>() / n as f64;
        let se = if n >= 2 {
            let var = replicas
                .iter()
                .map(|r| (r.rate_bits - mean).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            replicas[0].std_error
        };
        Ok(RateEstimate {
            rate_bits: mean,
            std_error: se,
            unstable: tolerance.is_some_and(|t| se > t),
            replicas,
        })
    }
}

/// A complete auxiliary channel: quantizer, transition law, emission law,
/// per-sample pulse weights and the input alphabet.
#[derive(Debug, Clone)]
pub struct AuxChannel {
    pub quantizer: PhaseQuantizer,
    pub propagator: Propagator,
    pub emission: Emission,
    /// Weight of the symbol in each of the L samples.
    pub weights: Vec<f64>,
    pub candidates: Vec<Candidate>,
}

fn transition_for(q: &PhaseQuantizer, sigma_w2: f64) -> Result<Propagator> {
    let table = if sigma_w2 == 0.0 {
        TransitionTable::identity(q.states())?
    } else {
        build_transitions(q, sigma_w2)?
    };
    Ok(Propagator::for_table(&table))
}

fn candidates_for(points: &[Complex64], weights: &[f64]) -> Vec<Candidate> {
    let prior = 1.0 / points.len() as f64;
    points
        .iter()
        .map(|&x| Candidate {
            samples: weights.iter().map(|&w| x * w).collect(),
            prior,
        })
        .collect()
}

fn scaled_points(c: &Constellation, p: f64) -> Vec<Complex64> {
    c.points.iter().map(|&x| x * p.sqrt()).collect()
}

impl AuxChannel {
    /// L samples per symbol, discrete Wiener phase of variance 2 pi beta
    /// Delta per sample, per-sample input X times the interval average of g.
    pub fn multisample(
        config: &ChannelConfig,
        constellation: &Constellation,
        pulse: &Pulse,
        states: usize,
    ) -> Result<Self> {
        let quantizer = build_quantizer(states)?;
        let weights = pulse.sample_weights(config);
        Ok(AuxChannel {
            propagator: transition_for(&quantizer, config.sigma_w2())?,
            quantizer,
            emission: Emission::multisample(config)?,
            candidates: candidates_for(&scaled_points(constellation, config.p), &weights),
            weights,
        })
    }

    /// One sample per symbol with the given per-symbol gain and phase
    /// increment variance.
    pub fn symbol_rate(
        config: &ChannelConfig,
        constellation: &Constellation,
        states: usize,
        gain: f64,
        sigma_w2: f64,
    ) -> Result<Self> {
        let quantizer = build_quantizer(states)?;
        Ok(AuxChannel {
            propagator: transition_for(&quantizer, sigma_w2)?,
            quantizer,
            emission: Emission::new(gain, config.sigma_n2 * config.ts)?,
            candidates: candidates_for(&scaled_points(constellation, config.p), &[1.0]),
            weights: vec![1.0],
        })
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.weights.len()
    }
}

/// Rate estimate from one recorded sequence: `symbols` are the transmitted
/// symbols and `y` the L observations per symbol.
pub fn rate_from_data(
    symbols: &[Complex64],
    y: &[Complex64],
    aux: &AuxChannel,
    batches: usize,
) -> Result<ReplicaEstimate> {
    let l = aux.samples_per_symbol();
    if symbols.is_empty() || y.len() != symbols.len() * l {
        return Err(Error::Length(format!(
            "{} symbols with {l} samples each need {} observations, got {}",
            symbols.len(),
            symbols.len() * l,
            y.len()
        )));
    }
    let x: Vec<Complex64> = symbols
        .iter()
        .flat_map(|&s| aux.weights.iter().map(move |&w| s * w))
        .collect();
    let cond = forward_conditional_trace(&x, y, l, &aux.propagator, &aux.quantizer, &aux.emission)?;
    let marg = forward_marginal_trace(
        y,
        &aux.candidates,
        &aux.propagator,
        &aux.quantizer,
        &aux.emission,
    )?;
    let n = symbols.len();
    let mut per_symbol = Vec::with_capacity(n);
    let (mut pc, mut pm) = (0.0, 0.0);
    for (&c, &m) in cond.iter().zip(&marg) {
        per_symbol.push(((c - pc) - (m - pm)) / LN_2);
        pc = c;
        pm = m;
    }
    let rate = per_symbol.iter().sum::<f64>() / n as f64;
    Ok(ReplicaEstimate {
        replica: 0,
        rate_bits: rate,
        std_error: batch_std_error(&per_symbol, batches),
    })
}

fn batch_std_error(values: &[f64], batches: usize) -> f64 {
    let b = batches.clamp(2, values.len().max(2));
    let size = values.len() / b;
    if size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(b)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

pub(crate) fn check_options(opts: &RateOptions) -> Result<()> {
    if opts.states < 1 {
        return Err(Error::param("states", "at least one state"));
    }
    if opts.nsymb < 1 {
        return Err(Error::param("nsymb", "at least one symbol"));
    }
    if opts.replicas < 1 {
        return Err(Error::param("replicas", "at least one replica"));
    }
    Ok(())
}

/// Auxiliary channel used to decode data from the true `model`.
///
/// Multi-sample models are decoded with the L-sample auxiliary channel,
/// the Baud-rate model with its own symbol-rate law. The matched-filter
/// model has no auxiliary channel here.
pub fn aux_for_model(
    model: ModelKind,
    constellation: &Constellation,
    pulse: &Pulse,
    config: &ChannelConfig,
    states: usize,
) -> Result<AuxChannel> {
    match model {
        ModelKind::MultisampleTrue | ModelKind::MultisampleApprox => {
            AuxChannel::multisample(config, constellation, pulse, states)
        }
        ModelKind::BaudRate => AuxChannel::symbol_rate(
            config,
            constellation,
            states,
            1.0,
            TAU * config.beta * config.ts,
        ),
        ModelKind::MatchedFilter => Err(Error::param(
            "model",
            "no rate bound for the matched-filter model",
        )),
    }
}

fn run_replica(
    model: ModelKind,
    constellation: &Constellation,
    pulse: &Pulse,
    config: &ChannelConfig,
    aux: &AuxChannel,
    opts: &RateOptions,
    replica: usize,
) -> Result<ReplicaEstimate> {
    let mut rng = rng::stream(opts.seed, rng::stream_index(PURPOSE_DATA, replica as u32));
    let symbols = draw_iud_symbols(constellation, opts.nsymb, config.p, &mut rng)?;
    let obs = simulate_from(model, &symbols, pulse, config, opts.initial_phase, &mut rng)?;
    let mut est = rate_from_data(&symbols, &obs.y, aux, opts.batches)?;
    est.replica = replica;
    Ok(est)
}

/// A single replica of [`estimate_rate_lb`]; `opts.replicas` is ignored.
pub fn estimate_replica(
    model: ModelKind,
    constellation: &Constellation,
    pulse: &Pulse,
    config: &ChannelConfig,
    opts: &RateOptions,
    replica: usize,
) -> Result<ReplicaEstimate> {
    check_options(opts)?;
    config.validate()?;
    let aux = aux_for_model(model, constellation, pulse, config, opts.states)?;
    run_replica(model, constellation, pulse, config, &aux, opts, replica)
}

/// Auxiliary-channel lower bound on I(X;Y) in bits per symbol for data from
/// the true `model`, averaged over independent replicas.
pub fn estimate_rate_lb(
    model: ModelKind,
    constellation: &Constellation,
    pulse: &Pulse,
    config: &ChannelConfig,
    opts: &RateOptions,
) -> Result<RateEstimate> {
    check_options(opts)?;
    config.validate()?;
    let aux = aux_for_model(model, constellation, pulse, config, opts.states)?;
    let replicas: Result<Vec<ReplicaEstimate>> = (0..opts.replicas)
        .into_par_iter()
        .map(|r| run_replica(model, constellation, pulse, config, &aux, opts, r))
        .collect();
    RateEstimate::combine(replicas?, opts.tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_uses_replica_spread() {
        let reps = vec![
            ReplicaEstimate {
                replica: 0,
                rate_bits: 1.0,
                std_error: 0.5,
            },
            ReplicaEstimate {
                replica: 1,
                rate_bits: 3.0,
                std_error: 0.5,
            },
        ];
        let e = RateEstimate::combine(reps, Some(0.1)).unwrap();
        assert_eq!(e.rate_bits, 2.0);
        assert!((e.std_error - 1.0).abs() < 1e-15);
        assert!(e.unstable);
        assert!(RateEstimate::combine(vec![], None).is_err());
    }

    #[test]
    fn batch_error_of_constant_is_zero() {
        assert_eq!(batch_std_error(&[2.0; 100], 10), 0.0);
    }

    #[test]
    fn matched_filter_has_no_bound() {
        let cfg = ChannelConfig::normalized(0.01, 10.0, 1, 16).unwrap();
        let r = estimate_rate_lb(
            ModelKind::MatchedFilter,
            &Constellation::qpsk(),
            &Pulse::square(1.0).unwrap(),
            &cfg,
            &RateOptions {
                nsymb: 10,
                replicas: 1,
                ..Default::default()
            },
        );
        assert!(r.is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = ChannelConfig::normalized(0.05, 10.0, 2, 16).unwrap();
        let opts = RateOptions {
            states: 8,
            nsymb: 100,
            replicas: 2,
            ..Default::default()
        };
        let c = Constellation::qpsk();
        let p = Pulse::square(1.0).unwrap();
        let a = estimate_rate_lb(ModelKind::MultisampleTrue, &c, &p, &cfg, &opts).unwrap();
        let b = estimate_rate_lb(ModelKind::MultisampleTrue, &c, &p, &cfg, &opts).unwrap();
        assert_eq!(a, b);
    }
}
