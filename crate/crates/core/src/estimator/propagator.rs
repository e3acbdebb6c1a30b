use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

use super::transition::TransitionTable;

/// States at or above which circulant steps go through the FFT.
pub const FFT_THRESHOLD: usize = 16;

/// One prediction step rho'(s) = sum_{s~} rho(s~) Q(s | s~).
#[derive(Clone)]
pub enum Propagator {
    Identity(usize),
    /// Circulant, direct O(S^2) circular convolution.
    Direct {
        offsets: Vec<f64>,
    },
    /// Circulant, convolution through the DFT of the offset vector.
    Fft {
        spectrum: Vec<Complex64>,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    /// General row-stochastic matrix, row-major, rows indexed by the
    /// previous state.
    Dense {
        s: usize,
        matrix: Vec<f64>,
    },
}

impl fmt::Debug for Propagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Propagator::{}({})", self.kind(), self.states())
    }
}

/// Scratch buffers for one thread.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Propagator {
    /// FFT for S >= 16, direct below.
    pub fn for_table(table: &TransitionTable) -> Self {
        if table.states() >= FFT_THRESHOLD {
            Self::fft(table)
        } else {
            Self::direct(table)
        }
    }

    pub fn direct(table: &TransitionTable) -> Self {
        Propagator::Direct {
            offsets: table.offsets().to_vec(),
        }
    }

    pub fn fft(table: &TransitionTable) -> Self {
        let s = table.states();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(s);
        let inverse = planner.plan_fft_inverse(s);
        let mut spectrum: Vec<Complex64> = table
            .offsets()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        forward.process(&mut spectrum);
        // fold the 1/S of the inverse transform into the kernel
        let inv = 1.0 / s as f64;
        for v in &mut spectrum {
            *v *= inv;
        }
        Propagator::Fft {
            spectrum,
            forward,
            inverse,
        }
    }

    /// Row-stochastic matrix given row-major with rows = previous state.
    pub fn dense(s: usize, matrix: Vec<f64>) -> Result<Self> {
        if s < 1 || matrix.len() != s * s {
            return Err(Error::Length(format!(
                "dense transition needs {s}x{s} entries, got {}",
                matrix.len()
            )));
        }
        if matrix.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param(
                "matrix",
                "entries must be finite and nonnegative",
            ));
        }
        Ok(Propagator::Dense { s, matrix })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Propagator::Identity(_) => "identity",
            Propagator::Direct { .. } => "direct",
            Propagator::Fft { .. } => "fft",
            Propagator::Dense { .. } => "dense",
        }
    }

    pub fn states(&self) -> usize {
        match self {
            Propagator::Identity(s) => *s,
            Propagator::Direct { offsets } => offsets.len(),
            Propagator::Fft { spectrum, .. } => spectrum.len(),
            Propagator::Dense { s, .. } => *s,
        }
    }

    /// Writes the predicted distribution of `rho` into `out`.
    pub fn apply(&self, rho: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let s = self.states();
        debug_assert_eq!(rho.len(), s);
        debug_assert_eq!(out.len(), s);
        match self {
            Propagator::Identity(_) => out.copy_from_slice(rho),
            Propagator::Direct { offsets } => {
                for (to, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    // offsets index (to - from) mod S
                    for (from, &r) in rho[..=to].iter().enumerate() {
                        acc += r * offsets[to - from];
                    }
                    for (from, &r) in rho.iter().enumerate().skip(to + 1) {
                        acc += r * offsets[to + s - from];
                    }
                    *o = acc;
                }
            }
            Propagator::Fft {
                spectrum,
                forward,
                inverse,
            } => {
                ws.buf.clear();
                ws.buf.extend(rho.iter().map(|&v| Complex64::new(v, 0.0)));
                let need = forward
                    .get_inplace_scratch_len()
                    .max(inverse.get_inplace_scratch_len());
                if ws.scratch.len() < need {
                    ws.scratch.resize(need, Complex64::new(0.0, 0.0));
                }
                forward.process_with_scratch(&mut ws.buf, &mut ws.scratch);
                for (b, k) in ws.buf.iter_mut().zip(spectrum) {
                    *b *= k;
                }
                inverse.process_with_scratch(&mut ws.buf, &mut ws.scratch);
                for (o, b) in out.iter_mut().zip(&ws.buf) {
                    *o = b.re.max(0.0);
                }
            }
            Propagator::Dense { s, matrix } => {
                out.fill(0.0);
                for (from, &r) in rho.iter().enumerate() {
                    if r == 0.0 {
                        continue;
                    }
                    let row = &matrix[from * s..(from + 1) * s];
                    for (o, &q) in out.iter_mut().zip(row) {
                        *o += r * q;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::quantizer::build_quantizer;
    use crate::estimator::transition::build_transitions;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn uniform_is_stationary() {
        for s in [3, 16, 64] {
            let t = build_transitions(&build_quantizer(s).unwrap(), 0.05).unwrap();
            let rho = vec![1.0 / s as f64; s];
            let mut out = vec![0.0; s];
            let mut ws = Workspace::new();
            for p in [Propagator::direct(&t), Propagator::fft(&t)] {
                p.apply(&rho, &mut out, &mut ws);
                assert!(out.iter().all(|&v| (v - 1.0 / s as f64).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn all_paths_agree() {
        let mut r = rng::stream(31, 0);
        let t = build_transitions(&build_quantizer(12).unwrap(), 0.2).unwrap();
        let flat: Vec<f64> = t.matrix().into_iter().flatten().collect();
        let paths = [
            Propagator::direct(&t),
            Propagator::fft(&t),
            Propagator::dense(12, flat).unwrap(),
        ];
        let rho: Vec<f64> = (0..12).map(|_| r.random::<f64>()).collect();
        let mut ws = Workspace::new();
        let mut reference = vec![0.0; 12];
        paths[0].apply(&rho, &mut reference, &mut ws);
        for p in &paths[1..] {
            let mut out = vec![0.0; 12];
            p.apply(&rho, &mut out, &mut ws);
            for (a, b) in out.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-14, "{}", p.kind());
            }
        }
        assert!(Propagator::dense(3, vec![0.0; 8]).is_err());
    }
}
