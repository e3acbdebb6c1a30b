use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// S equal cells on the circle with midpoints i 2pi/S - pi/S - pi, i = 1..S.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseQuantizer {
    midpoints: Vec<f64>,
    phasors: Vec<Complex64>,
}

pub fn build_quantizer(s: usize) -> Result<PhaseQuantizer> {
    if s < 1 {
        return Err(Error::param("s", "at least one state"));
    }
    let w = TAU / s as f64;
    let midpoints: Vec<f64> = (1..=s).map(|i| i as f64 * w - PI / s as f64 - PI).collect();
    let phasors = midpoints
        .iter()
        .map(|&m| Complex64::from_polar(1.0, m))
        .collect();
    Ok(PhaseQuantizer { midpoints, phasors })
}

impl PhaseQuantizer {
    pub fn states(&self) -> usize {
        self.midpoints.len()
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// e^{j s_i} for every midpoint.
    pub fn phasors(&self) -> &[Complex64] {
        &self.phasors
    }

    pub fn half_width(&self) -> f64 {
        PI / self.states() as f64
    }

    pub fn cell_width(&self) -> f64 {
        TAU / self.states() as f64
    }

    /// Index of the cell [-pi + i w, -pi + (i+1) w) holding `phase` mod 2pi.
    pub fn cell_of(&self, phase: f64) -> usize {
        let s = self.states();
        let u = (phase + PI).rem_euclid(TAU);
        ((u / self.cell_width()) as usize).min(s - 1)
    }
}
