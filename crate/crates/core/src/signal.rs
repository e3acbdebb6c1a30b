//! Transmit pulses, constellations, input laws and waveform synthesis.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::phase_noise::ChannelConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum PulseKind {
    Square,
    /// sin^2 bump over one symbol (a raised cosine shifted onto [0, Ts)).
    CosineSquared,
    /// Piecewise-constant pulse given by equally spaced samples over [0, Ts).
    Custom(Vec<f64>),
}

/// Unit-energy pulse supported on one symbol interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    kind: PulseKind,
    ts: f64,
    energy_correction: f64,
}

impl Pulse {
    pub fn square(ts: f64) -> Result<Self> {
        Self::builtin(PulseKind::Square, ts)
    }

    pub fn cosine_squared(ts: f64) -> Result<Self> {
        Self::builtin(PulseKind::CosineSquared, ts)
    }

    fn builtin(kind: PulseKind, ts: f64) -> Result<Self> {
        check_ts(ts)?;
        Ok(Pulse {
            kind,
            ts,
            energy_correction: 1.0,
        })
    }

    /// Takes `samples` as values of g on equal cells of [0, Ts) and rescales
    /// them to unit energy. The applied factor is kept in
    /// [`Pulse::energy_correction`].
    pub fn custom(samples: Vec<f64>, ts: f64) -> Result<Self> {
        check_ts(ts)?;
        if samples.is_empty() {
            return Err(Error::Length(
                "custom pulse needs at least one sample".into(),
            ));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("pulse", "non-finite sample"));
        }
        let cell = ts / samples.len() as f64;
        let energy: f64 = samples.iter().map(|v| v * v).sum::<f64>() * cell;
        if energy <= 0.0 {
            return Err(Error::param("pulse", "zero energy"));
        }
        let scale = energy.sqrt().recip();
        Ok(Pulse {
            kind: PulseKind::Custom(samples.into_iter().map(|v| v * scale).collect()),
            ts,
            energy_correction: scale,
        })
    }

    pub fn by_name(name: &str, ts: f64) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "square" | "rect" | "g1" => Self::square(ts),
            "cos2" | "cosine-squared" | "cosine_squared" | "g2" => Self::cosine_squared(ts),
            other => Err(Error::param("pulse", format!("unknown pulse `{other}`"))),
        }
    }

    pub fn kind(&self) -> &PulseKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PulseKind::Square => "square",
            PulseKind::CosineSquared => "cos2",
            PulseKind::Custom(_) => "custom",
        }
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// Multiplier applied to a custom pulse to reach unit energy (1 for the
    /// built-in shapes).
    pub fn energy_correction(&self) -> f64 {
        self.energy_correction
    }

    /// g(t), zero outside [0, Ts).
    pub fn value(&self, t: f64) -> f64 {
        if !(0.0..self.ts).contains(&t) {
            return 0.0;
        }
        match &self.kind {
            PulseKind::Square => self.ts.sqrt().recip(),
            PulseKind::CosineSquared => {
                let s = (PI * t / self.ts).sin();
                (8.0 / (3.0 * self.ts)).sqrt() * s * s
            }
            PulseKind::Custom(v) => {
                let i = ((t / self.ts) * v.len() as f64) as usize;
                v[i.min(v.len() - 1)]
            }
        }
    }

    /// g at the midpoints of `resolution` equal cells of [0, Ts).
    pub fn samples(&self, resolution: usize) -> Vec<f64> {
        let step = self.ts / resolution as f64;
        (0..resolution)
            .map(|i| self.value((i as f64 + 0.5) * step))
            .collect()
    }

    /// Average of g over each of the `l` receiver sample intervals, computed
    /// from `fine_per_sample` midpoint samples per interval.
    pub fn interval_averages(&self, l: usize, fine_per_sample: usize) -> Vec<f64> {
        let fine = self.samples(l * fine_per_sample);
        fine.chunks(fine_per_sample)
            .map(|c| c.iter().sum::<f64>() / fine_per_sample as f64)
            .collect()
    }

    pub fn sample_weights(&self, config: &ChannelConfig) -> Vec<f64> {
        self.interval_averages(config.l, config.fine_per_sample())
    }
}

fn check_ts(ts: f64) -> Result<()> {
    if ts.is_finite() && ts > 0.0 {
        Ok(())
    } else {
        Err(Error::param("ts", format!("must be > 0, got {ts}")))
    }
}

/// Finite input alphabet with unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub name: String,
    pub points: Vec<Complex64>,
    pub labels: Vec<u32>,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn qpsk() -> Self {
        let pts = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
            .iter()
            .map(|&(re, im)| Complex64::new(re, im) * FRAC_1_SQRT_2)
            .collect();
        Constellation {
            name: "qpsk".into(),
            points: pts,
            labels: vec![0b00, 0b01, 0b11, 0b10],
        }
    }

    /// Square 16-QAM, Gray labelled per axis.
    pub fn qam16() -> Self {
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let scale = 1.0 / 10f64.sqrt();
        let mut points = Vec::with_capacity(16);
        let mut labels = Vec::with_capacity(16);
        for (i, &re) in levels.iter().enumerate() {
            for (q, &im) in levels.iter().enumerate() {
                points.push(Complex64::new(re, im) * scale);
                labels.push((gray(i as u32) << 2) | gray(q as u32));
            }
        }
        Constellation {
            name: "16qam".into(),
            points,
            labels,
        }
    }

    /// M-PSK on the unit circle starting at angle zero, Gray labelled.
    pub fn psk(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::param("m", "PSK needs at least one point"));
        }
        Ok(Constellation {
            name: format!("{m}psk"),
            points: (0..m)
                .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / m as f64))
                .collect(),
            labels: (0..m as u32).map(gray).collect(),
        })
    }

    /// Arbitrary points, rescaled to unit average energy.
    pub fn custom(name: &str, points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Length("empty constellation".into()));
        }
        let e = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::param("points", "zero or non-finite average energy"));
        }
        let s = e.sqrt().recip();
        let n = points.len() as u32;
        Ok(Constellation {
            name: name.into(),
            points: points.into_iter().map(|p| p * s).collect(),
            labels: (0..n).collect(),
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        match lower.as_str() {
            "qpsk" | "4qam" => Ok(Self::qpsk()),
            "16qam" | "qam16" => Ok(Self::qam16()),
            "bpsk" => Self::psk(2),
            _ => {
                if let Some(m) = lower.strip_suffix("psk").and_then(|m| m.parse().ok()) {
                    Self::psk(m)
                } else {
                    Err(Error::param(
                        "constellation",
                        format!("unknown constellation `{name}`"),
                    ))
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

/// Indices of `n` i.u.d. symbols.
pub fn draw_iud_indices<R: Rng + ?Sized>(
    constellation: &Constellation,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if constellation.is_empty() {
        return Err(Error::Length("empty constellation".into()));
    }
    let m = constellation.len();
    Ok((0..n).map(|_| rng.random_range(0..m)).collect())
}

/// `n` i.u.d. symbols scaled to average energy `p`.
pub fn draw_iud_symbols<R: Rng + ?Sized>(
    constellation: &Constellation,
    n: usize,
    p: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if n < 1 {
        return Err(Error::param("n", "at least one symbol"));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::param("p", format!("must be > 0, got {p}")));
    }
    let scale = p.sqrt();
    Ok(draw_iud_indices(constellation, n, rng)?
        .into_iter()
        .map(|i| constellation.points[i] * scale)
        .collect())
}

/// Shifted exponential law of |X|^2: P/2 plus an exponential of mean P/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeLaw {
    pub p: f64,
}

impl AmplitudeLaw {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::param("p", format!("must be > 0, got {p}")));
        }
        Ok(AmplitudeLaw { p })
    }

    pub fn p_min(&self) -> f64 {
        0.5 * self.p
    }

    pub fn lambda(&self) -> f64 {
        self.p - self.p_min()
    }
}

/// Inverse-CDF draws of |X|^2 = P/2 - lambda ln U with U on (0, 1].
pub fn draw_shifted_exponential_amplitudes<R: Rng + ?Sized>(
    law: &AmplitudeLaw,
    n: usize,
    rng: &mut R,
) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u = 1.0 - rng.random::<f64>();
            law.p_min() - law.lambda() * u.ln()
        })
        .collect()
}

/// Transmit waveform x(t) = sum_m x_m g(t - m Ts) at the fine rate
/// (`l_sim` cell midpoints per symbol).
pub fn synthesize_waveform(
    symbols: &[Complex64],
    pulse: &Pulse,
    config: &ChannelConfig,
) -> Result<Vec<Complex64>> {
    if symbols.is_empty() {
        return Err(Error::Length("no symbols to synthesize".into()));
    }
    config.validate()?;
    let g = pulse.samples(config.l_sim);
    let mut out = Vec::with_capacity(symbols.len() * config.l_sim);
    for &x in symbols {
        out.extend(g.iter().map(|&v| x * v));
    }
    Ok(out)
}
