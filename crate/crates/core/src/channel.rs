//! Receiver observations under the discrete-time models, all driven by one
//! fine-rate phase path per sequence.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::phase_noise::{ChannelConfig, InitialPhase};
use crate::rng::Stream;
use crate::signal::Pulse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// L integrate-and-dump samples per symbol with the exact filtered phasor.
    MultisampleTrue,
    /// L samples per symbol, filtering replaced by the average pulse value.
    MultisampleApprox,
    /// One matched-filter output per symbol.
    MatchedFilter,
    /// One sample per symbol, discrete Wiener phase of variance 2 pi beta Ts.
    BaudRate,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::MultisampleTrue,
        ModelKind::MultisampleApprox,
        ModelKind::MatchedFilter,
        ModelKind::BaudRate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::MultisampleTrue => "multisample-true",
            ModelKind::MultisampleApprox => "multisample-approx",
            ModelKind::MatchedFilter => "matched-filter",
            ModelKind::BaudRate => "baud-rate",
        }
    }

    /// Output samples per symbol.
    pub fn samples_per_symbol(&self, config: &ChannelConfig) -> usize {
        match self {
            ModelKind::MultisampleTrue | ModelKind::MultisampleApprox => config.l,
            ModelKind::MatchedFilter | ModelKind::BaudRate => 1,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .or(match s.as_str() {
                "multisample" | "ms" => Some(ModelKind::MultisampleTrue),
                "mf" => Some(ModelKind::MatchedFilter),
                "baud" => Some(ModelKind::BaudRate),
                _ => None,
            })
            .ok_or_else(|| Error::param("model", format!("unknown model `{s}`")))
    }
}

/// The L receiver samples belonging to one symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBlock<'a> {
    pub samples: &'a [Complex64],
}

/// Output of one simulated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub model: ModelKind,
    /// Samples per symbol in `y`.
    pub l: usize,
    pub y: Vec<Complex64>,
    /// Channel phase at the start of each output sample.
    pub theta: Vec<f64>,
    /// Noise-free multiplicative factor of each output sample, excluding the
    /// symbol and the phase `theta`: Delta F_k, Delta g_l, H_m e^{-j theta_m}
    /// or 1 depending on the model.
    pub gain: Vec<Complex64>,
}

impl Observation {
    pub fn n_symbols(&self) -> usize {
        self.y.len() / self.l
    }

    pub fn block(&self, m: usize) -> SampleBlock<'_> {
        SampleBlock {
            samples: &self.y[m * self.l..(m + 1) * self.l],
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = SampleBlock<'_>> {
        self.y.chunks(self.l).map(|samples| SampleBlock { samples })
    }

    /// Per-symbol noise-free phasor sum_l gain_l e^{j theta_l}; its argument
    /// is the phase seen by a receiver that adds the L samples of a symbol.
    pub fn symbol_phasors(&self) -> Vec<Complex64> {
        self.gain
            .chunks(self.l)
            .zip(self.theta.chunks(self.l))
            .map(|(g, t)| {
                g.iter()
                    .zip(t)
                    .map(|(&g, &th)| g * Complex64::from_polar(1.0, th))
                    .sum()
            })
            .collect()
    }

    /// Sum of the L samples of each symbol.
    pub fn symbol_sums(&self) -> Vec<Complex64> {
        self.y.chunks(self.l).map(|c| c.iter().sum()).collect()
    }
}

/// V = sum_l |Y_l|^2 over one symbol.
pub fn double_filter_energy(block: &SampleBlock<'_>) -> f64 {
    block.samples.iter().map(|y| y.norm_sqr()).sum()
}

fn complex_normal<R: Rng + ?Sized>(sd: f64, rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sd * re, sd * im)
}

/// Simulates `model` with a uniformly distributed initial phase.
pub fn simulate<R: Rng + ?Sized>(
    model: ModelKind,
    symbols: &[Complex64],
    pulse: &Pulse,
    config: &ChannelConfig,
    rng: &mut R,
) -> Result<Observation> {
    simulate_from(model, symbols, pulse, config, InitialPhase::Uniform, rng)
}

/// Simulates `model`.
///
/// The phase is a Wiener path sampled every half fine step so that every
/// fine cell has its midpoint on the grid. Two child streams seeded from
/// `rng` drive the phase and the noise separately, so the same `rng` state
/// yields the same phase realization under every model.
pub fn simulate_from<R: Rng + ?Sized>(
    model: ModelKind,
    symbols: &[Complex64],
    pulse: &Pulse,
    config: &ChannelConfig,
    start: InitialPhase,
    rng: &mut R,
) -> Result<Observation> {
    config.validate()?;
    if symbols.is_empty() {
        return Err(Error::Length("no symbols to transmit".into()));
    }
    if (pulse.ts() - config.ts).abs() > 1e-12 * config.ts {
        return Err(Error::param(
            "pulse",
            format!(
                "pulse Ts {} differs from channel Ts {}",
                pulse.ts(),
                config.ts
            ),
        ));
    }
    let l = config.l;
    let m = config.fine_per_sample();
    let n_fine = config.l_sim;
    let delta = config.delta();
    let g = pulse.samples(n_fine);
    let gbar = pulse.sample_weights(config);
    let mf_weight: Vec<f64> = g.iter().map(|v| v * v * config.fine_step()).collect();
    let sd_path = (TAU * config.beta * 0.5 * config.fine_step()).sqrt();
    let out_l = model.samples_per_symbol(config);
    let noise_sd = match model {
        ModelKind::MultisampleTrue | ModelKind::MultisampleApprox => {
            (0.5 * config.sigma_n2 * delta).sqrt()
        }
        ModelKind::MatchedFilter => (0.5 * config.sigma_n2).sqrt(),
        ModelKind::BaudRate => (0.5 * config.sigma_n2 * config.ts).sqrt(),
    };

    let total = symbols.len() * out_l;
    let mut y = Vec::with_capacity(total);
    let mut theta = Vec::with_capacity(total);
    let mut gain = Vec::with_capacity(total);
    let mut phase_rng = Stream::seed_from_u64(rng.random());
    let mut noise_rng = Stream::seed_from_u64(rng.random());
    let mut nodes = vec![0.0; 2 * n_fine + 1];
    nodes[2 * n_fine] = start.draw(&mut phase_rng);

    for &x in symbols {
        nodes[0] = nodes[2 * n_fine];
        for i in 1..nodes.len() {
            let w = if sd_path > 0.0 {
                sd_path * Distribution::<f64>::sample(&StandardNormal, &mut phase_rng)
            } else {
                0.0
            };
            nodes[i] = nodes[i - 1] + w;
        }
        match model {
            ModelKind::MultisampleTrue => {
                for k in 0..l {
                    let base = 2 * m * k;
                    let th = nodes[base];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..m {
                        acc += Complex64::from_polar(g[k * m + i], nodes[base + 2 * i + 1] - th);
                    }
                    let f = acc / m as f64;
                    theta.push(th);
                    gain.push(f * delta);
                }
            }
            ModelKind::MultisampleApprox => {
                for (k, &gk) in gbar.iter().enumerate() {
                    theta.push(nodes[2 * m * k]);
                    gain.push(Complex64::new(delta * gk, 0.0));
                }
            }
            ModelKind::MatchedFilter => {
                let th = nodes[0];
                let h: Complex64 = mf_weight
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| Complex64::from_polar(w, nodes[2 * i + 1] - th))
                    .sum();
                theta.push(th);
                gain.push(h);
            }
            ModelKind::BaudRate => {
                theta.push(nodes[0]);
                gain.push(Complex64::new(1.0, 0.0));
            }
        }
        let first = y.len();
        for k in first..first + out_l {
            let clean = x * gain[k] * Complex64::from_polar(1.0, theta[k]);
            y.push(clean + complex_normal(noise_sd, &mut noise_rng));
        }
    }

    Ok(Observation {
        model,
        l: out_l,
        y,
        theta,
        gain,
    })
}
