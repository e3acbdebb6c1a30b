use crate::error::{Error, Result};
use crate::phase_noise::WrappedGaussian;
use crate::quadrature::GaussLegendre;

use super::quantizer::PhaseQuantizer;

/// Circulant S x S transition law of the quantized phase, stored by offset:
/// Q(to | from) = `offsets[(to - from) mod S]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    offsets: Vec<f64>,
    prefactor_row_sum: f64,
}

const PANEL_CAP: usize = 4096;

/// Q(s | s~) proportional to the integral of p_W(phi - phi~) over the product
/// of the two cells, rows normalized to one.
///
/// With cell width w the double integral over an offset of d cells reduces to
/// the one-dimensional integral of (w - |t|) p_W(d w + t) over t in [-w, w],
/// evaluated by composite 8-point Gauss-Legendre with panels no wider than
/// half a standard deviation.
pub fn build_transitions(q: &PhaseQuantizer, sigma_w2: f64) -> Result<TransitionTable> {
    if !(sigma_w2.is_finite() && sigma_w2 > 0.0) {
        return Err(Error::param(
            "sigma_w2",
            format!("must be > 0, got {sigma_w2}"),
        ));
    }
    let s = q.states();
    if s == 1 {
        return Ok(TransitionTable {
            offsets: vec![1.0],
            prefactor_row_sum: q.cell_width() * q.cell_width(),
        });
    }
    let pdf = WrappedGaussian::new(sigma_w2, 1e-14)?;
    let w = q.cell_width();
    let panels = ((w / (0.5 * sigma_w2.sqrt())).ceil() as usize).clamp(1, PANEL_CAP);
    let rule = GaussLegendre::new(8);
    let mut raw = vec![0.0; s];
    for d in 0..=s / 2 {
        let c = d as f64 * w;
        let f = |t: f64| (w - t.abs()) * pdf.pdf(c + t);
        let v = rule.integrate_composite(-w, 0.0, panels, f)
            + rule.integrate_composite(0.0, w, panels, f);
        raw[d] = v;
        raw[(s - d) % s] = v;
    }
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numerical(format!("transition row sum {total}")));
    }
    Ok(TransitionTable {
        offsets: raw.iter().map(|v| v / total).collect(),
        prefactor_row_sum: total * w,
    })
}

impl TransitionTable {
    /// Phase held constant: Q = I.
    pub fn identity(s: usize) -> Result<Self> {
        if s < 1 {
            return Err(Error::param("s", "at least one state"));
        }
        let mut offsets = vec![0.0; s];
        offsets[0] = 1.0;
        Ok(TransitionTable {
            offsets,
            prefactor_row_sum: 1.0,
        })
    }

    /// Circulant table from arbitrary nonnegative offset weights, normalized.
    pub fn from_offsets(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Length("no transition weights".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("weights", "must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("weights", "all zero"));
        }
        Ok(TransitionTable {
            offsets: weights.iter().map(|w| w / total).collect(),
            prefactor_row_sum: total,
        })
    }

    pub fn states(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Row sum before normalization, scaled by the cell width 2pi/S. A
    /// properly normalized conditional law would give exactly one.
    pub fn prefactor_row_sum(&self) -> f64 {
        self.prefactor_row_sum
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        let s = self.states();
        self.offsets[(to + s - from % s) % s]
    }

    /// Dense row-major matrix with rows indexed by the previous state.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let s = self.states();
        (0..s)
            .map(|i| (0..s).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::quantizer::build_quantizer;

    #[test]
    fn single_state_and_bad_variance() {
        let q1 = build_quantizer(1).unwrap();
        assert_eq!(build_transitions(&q1, 0.3).unwrap().offsets(), &[1.0]);
        let q = build_quantizer(8).unwrap();
        assert!(build_transitions(&q, 0.0).is_err());
        assert!(build_transitions(&q, -1.0).is_err());
    }

    #[test]
    fn uniform_limit() {
        let q = build_quantizer(16).unwrap();
        let t = build_transitions(&q, 1e4).unwrap();
        assert!(t.offsets().iter().all(|&v| (v - 1.0 / 16.0).abs() < 1e-6));
    }

    #[test]
    fn rows_circulant_symmetric() {
        for s in [2, 3, 5, 16, 32, 100] {
            for s2 in [1e-4, 0.01, 0.1, 2.0] {
                let q = build_quantizer(s).unwrap();
                let t = build_transitions(&q, s2).unwrap();
                let m = t.matrix();
                for (i, row) in m.iter().enumerate() {
                    assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    for j in 0..s {
                        assert_eq!(row[j], m[(i + 1) % s][(j + 1) % s]);
                    }
                }
                for d in 1..s {
                    assert_eq!(t.offsets()[d], t.offsets()[s - d]);
                }
                // unnormalized row sum is (2 pi / S)^2 analytically
                let w = q.cell_width();
                assert!(
                    (t.prefactor_row_sum() / (w * w) - 1.0).abs() < 1e-8,
                    "s={s} s2={s2}"
                );
            }
        }
    }
}
