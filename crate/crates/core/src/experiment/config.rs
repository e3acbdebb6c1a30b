//! Flat `key=value` experiment configuration.
//!
//! Lines starting with `#` are comments. Grids are comma lists or inclusive
//! `start:stop:step` ranges.

use std::fmt;
use std::str::FromStr;

use crate::bounds::{AlphaChoice, Schedule};
use crate::channel::ModelKind;
use crate::error::{Error, Result};
use crate::phase_noise::ChannelConfig;
use crate::signal::{Constellation, Pulse};

/// Which receiver's rate a sweep estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    Model(ModelKind),
    /// Symbol-rate receiver with a trained Markov phase law.
    Mtr,
}

impl Receiver {
    /// Receiver samples per symbol entering the forward recursion.
    pub fn samples_per_symbol(&self, l: usize) -> usize {
        match self {
            Receiver::Model(ModelKind::MultisampleTrue | ModelKind::MultisampleApprox) => l,
            _ => 1,
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Receiver::Model(m) => f.write_str(m.name()),
            Receiver::Mtr => f.write_str("mtr"),
        }
    }
}

impl FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("mtr") {
            Ok(Receiver::Mtr)
        } else {
            s.parse().map(Receiver::Model)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model: Receiver,
    pub constellation: String,
    /// `square`, `cos2`, or `custom:v0;v1;...`
    pub pulse: String,
    pub snr_db: Vec<f64>,
    pub l: Vec<usize>,
    pub states: Vec<usize>,
    /// f_HWHM * Ts
    pub linewidth: f64,
    /// Simulation cells per symbol; a multiple of every L in the grid.
    pub l_sim: usize,
    pub nsymb: usize,
    pub replicas: usize,
    pub seed: u64,
    pub batches: usize,
    pub n_train: usize,
    /// None evaluates bounds at each fixed L of the grid.
    pub schedule: Option<Schedule>,
    pub alpha: AlphaChoice,
    /// Cap on S * nsymb * L per cell.
    pub max_work: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            model: Receiver::Model(ModelKind::MultisampleTrue),
            constellation: "qpsk".into(),
            pulse: "square".into(),
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            l: vec![4],
            states: vec![32],
            linewidth: 0.125,
            l_sim: 64,
            nsymb: 2000,
            replicas: 4,
            seed: 1,
            batches: 20,
            n_train: 10_000,
            schedule: None,
            alpha: AlphaChoice::SnrDelta,
            max_work: 1e10,
        }
    }
}

fn alpha_name(a: AlphaChoice) -> &'static str {
    match a {
        AlphaChoice::SnrDelta => "snr-delta",
        AlphaChoice::Optimal => "optimal",
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_num<T: FromStr>(key: &'static str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

/// Comma list or inclusive `start:stop:step` range of floats.
pub fn parse_grid_f64(key: &'static str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    let out = match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (
                parse_num(key, a)?,
                parse_num(key, b)?,
                parse_num(key, step)?,
            );
            if step.is_nan() || step <= 0.0 || b < a {
                return Err(Error::Config(format!("{key}: bad range `{v}`")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| a + i as f64 * step).collect()
        }
        [_] => v
            .split(',')
            .map(|x| parse_num(key, x))
            .collect::<Result<Vec<f64>>>()?,
        _ => return Err(Error::Config(format!("{key}: bad grid `{v}`"))),
    };
    if out.is_empty() || out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{key}: empty or non-finite grid")));
    }
    Ok(out)
}

pub fn parse_grid_usize(key: &'static str, v: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = v.split(':').collect();
    let out: Vec<usize> = match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (usize, usize, usize) = (
                parse_num(key, a)?,
                parse_num(key, b)?,
                parse_num(key, step)?,
            );
            if step == 0 || b < a {
                return Err(Error::Config(format!("{key}: bad range `{v}`")));
            }
            (a..=b).step_by(step).collect()
        }
        [_] => v
            .split(',')
            .map(|x| parse_num(key, x))
            .collect::<Result<_>>()?,
        _ => return Err(Error::Config(format!("{key}: bad grid `{v}`"))),
    };
    if out.is_empty() || out.contains(&0) {
        return Err(Error::Config(format!(
            "{key}: grid must be non-empty and positive"
        )));
    }
    Ok(out)
}

/// `key=value` pairs of a config text, comments and blank lines dropped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))
        })
        .collect()
}

impl SweepSpec {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = value.parse()?,
            "constellation" => {
                Constellation::by_name(value)?;
                self.constellation = value.to_string();
            }
            "pulse" => {
                self.pulse = value.to_string();
                self.build_pulse()?;
            }
            "snr_db" => self.snr_db = parse_grid_f64("snr_db", value)?,
            "l" => self.l = parse_grid_usize("l", value)?,
            "states" => self.states = parse_grid_usize("states", value)?,
            "linewidth" => self.linewidth = parse_num("linewidth", value)?,
            "l_sim" => self.l_sim = parse_num("l_sim", value)?,
            "nsymb" => self.nsymb = parse_num("nsymb", value)?,
            "replicas" => self.replicas = parse_num("replicas", value)?,
            "seed" => self.seed = parse_num("seed", value)?,
            "batches" => self.batches = parse_num("batches", value)?,
            "n_train" => self.n_train = parse_num("n_train", value)?,
            "schedule" => {
                self.schedule = match value {
                    "" | "none" => None,
                    v => Some(v.parse()?),
                }
            }
            "alpha" => self.alpha = value.parse()?,
            "max_work" => self.max_work = parse_num("max_work", value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Defaults, then the file's pairs, then the overrides.
    pub fn from_sources(file: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut spec = SweepSpec::default();
        if let Some(text) = file {
            for (k, v) in parse_pairs(text)? {
                spec.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            spec.set(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth.is_finite() && self.linewidth >= 0.0) {
            return Err(Error::Config(format!(
                "linewidth must be >= 0, got {}",
                self.linewidth
            )));
        }
        if self.snr_db.is_empty() || self.l.is_empty() || self.states.is_empty() {
            return Err(Error::Config("grids must be non-empty".into()));
        }
        if let Some(l) = self.l.iter().find(|&&l| !self.l_sim.is_multiple_of(l)) {
            return Err(Error::Config(format!(
                "l_sim = {} is not a multiple of L = {l}",
                self.l_sim
            )));
        }
        if self.nsymb == 0 || self.replicas == 0 {
            return Err(Error::Config("nsymb and replicas must be positive".into()));
        }
        Ok(())
    }

    /// beta = f_FWHM Ts = 2 f_HWHM Ts.
    pub fn beta(&self) -> f64 {
        2.0 * self.linewidth
    }

    pub fn build_constellation(&self) -> Result<Constellation> {
        Constellation::by_name(&self.constellation)
    }

    pub fn build_pulse(&self) -> Result<Pulse> {
        match self.pulse.strip_prefix("custom:") {
            Some(vals) => {
                let samples = vals
                    .split(';')
                    .map(|v| parse_num("pulse", v))
                    .collect::<Result<Vec<f64>>>()?;
                Pulse::custom(samples, 1.0)
            }
            None => Pulse::by_name(&self.pulse, 1.0),
        }
    }

    pub fn channel(&self, snr_db: f64, l: usize) -> Result<ChannelConfig> {
        ChannelConfig::normalized(self.linewidth, snr_db, l, self.l_sim)
    }

    /// Canonical text: one `key=value` line per field in a fixed order.
    pub fn to_text(&self) -> String {
        let schedule = self.schedule.map_or("none".to_string(), |s| s.to_string());
        [
            ("model", self.model.to_string()),
            ("constellation", self.constellation.clone()),
            ("pulse", self.pulse.clone()),
            ("snr_db", join(&self.snr_db)),
            ("l", join(&self.l)),
            ("states", join(&self.states)),
            ("linewidth", self.linewidth.to_string()),
            ("l_sim", self.l_sim.to_string()),
            ("nsymb", self.nsymb.to_string()),
            ("replicas", self.replicas.to_string()),
            ("seed", self.seed.to_string()),
            ("batches", self.batches.to_string()),
            ("n_train", self.n_train.to_string()),
            ("schedule", schedule),
            ("alpha", alpha_name(self.alpha).to_string()),
            ("max_work", self.max_work.to_string()),
        ]
        .iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect()
    }
}
