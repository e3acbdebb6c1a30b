use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase_noise::ChannelConfig;

use super::propagator::{Propagator, Workspace};
use super::quantizer::PhaseQuantizer;

/// Auxiliary observation law y = gain x e^{j s} + CN(0, variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub gain: f64,
    pub variance: f64,
}

impl Emission {
    pub fn new(gain: f64, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::param(
                "variance",
                format!("emission variance must be finite and > 0, got {variance}"),
            ));
        }
        if !gain.is_finite() {
            return Err(Error::param("gain", format!("must be finite, got {gain}")));
        }
        Ok(Emission { gain, variance })
    }

    /// Per-sample law of the multi-sample receiver: gain Delta, variance
    /// sigma_N^2 Delta.
    pub fn multisample(config: &ChannelConfig) -> Result<Self> {
        Self::new(config.delta(), config.sigma_n2 * config.delta())
    }

    /// Symbol-rate law: unit gain, variance sigma_N^2 Ts.
    pub fn symbol_rate(config: &ChannelConfig) -> Result<Self> {
        Self::new(1.0, config.sigma_n2 * config.ts)
    }

    pub fn log_density(&self, y: Complex64, x: Complex64, phase: f64) -> f64 {
        let d = y - x * self.gain * Complex64::from_polar(1.0, phase);
        -(PI * self.variance).ln() - d.norm_sqr() / self.variance
    }
}

/// Normalized forward vector with its accumulated log normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardState {
    pub weights: Vec<f64>,
    pub log_scale: f64,
}

impl ForwardState {
    pub fn uniform(s: usize) -> Self {
        ForwardState {
            weights: vec![1.0 / s as f64; s],
            log_scale: 0.0,
        }
    }
}

/// One candidate symbol for the marginal recursion: its per-sample inputs
/// (symbol times pulse weight) and prior probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub samples: Vec<Complex64>,
    pub prior: f64,
}

/// Tables shared by every emission step.
struct Emitter<'a> {
    phasors: &'a [Complex64],
    gain: f64,
    inv_var: f64,
    log_norm: f64,
}

impl<'a> Emitter<'a> {
    fn new(q: &'a PhaseQuantizer, em: &Emission) -> Result<Self> {
        let em = Emission::new(em.gain, em.variance)?;
        Ok(Emitter {
            phasors: q.phasors(),
            gain: em.gain,
            inv_var: 1.0 / em.variance,
            log_norm: -(PI * em.variance).ln(),
        })
    }

    /// out(s) = pred(s) p(y | x, s), rescaled to sum one. Returns the log of
    /// the removed scale, or None when every state is (numerically) excluded.
    fn emit(&self, pred: &[f64], y: Complex64, x: Complex64, out: &mut [f64]) -> Option<f64> {
        let gx = x * self.gain;
        let c = y.conj() * gx;
        // exponent(s) = (2 Re(c e^{js}) - |y|^2 - |gx|^2) / var
        let mut rmax = f64::NEG_INFINITY;
        for (o, p) in out.iter_mut().zip(self.phasors) {
            let r = c.re * p.re - c.im * p.im;
            *o = r;
            rmax = rmax.max(r);
        }
        let mut sum = 0.0;
        for (o, &w) in out.iter_mut().zip(pred) {
            let v = w * (2.0 * (*o - rmax) * self.inv_var).exp();
            *o = v;
            sum += v;
        }
        if !(sum > 0.0 && sum.is_finite()) {
            return None;
        }
        let inv = 1.0 / sum;
        for o in out.iter_mut() {
            *o *= inv;
        }
        let top = (2.0 * rmax - y.norm_sqr() - gx.norm_sqr()) * self.inv_var;
        Some(sum.ln() + top + self.log_norm)
    }
}

fn check_states(prop: &Propagator, q: &PhaseQuantizer) -> Result<()> {
    if prop.states() != q.states() {
        return Err(Error::Length(format!(
            "transition has {} states, quantizer {}",
            prop.states(),
            q.states()
        )));
    }
    Ok(())
}

fn check_finite(v: &[Complex64], what: &'static str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::param(what, "non-finite sample"))
    }
}

/// log q(y^n | x^n) of the auxiliary hidden Markov model.
///
/// `x` holds the per-sample inputs. The recursion starts from a uniform
/// state distribution, predicts with Q and weights by the emission density,
/// renormalizing after every sample.
pub fn forward_conditional(
    x: &[Complex64],
    y: &[Complex64],
    prop: &Propagator,
    q: &PhaseQuantizer,
    em: &Emission,
) -> Result<f64> {
    let trace = forward_conditional_trace(x, y, 1.max(y.len()), prop, q, em)?;
    Ok(trace.last().copied().unwrap_or(0.0))
}

/// Like [`forward_conditional`], returning the running log-likelihood after
/// each group of `l` samples.
pub fn forward_conditional_trace(
    x: &[Complex64],
    y: &[Complex64],
    l: usize,
    prop: &Propagator,
    q: &PhaseQuantizer,
    em: &Emission,
) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::Length(format!(
            "{} inputs vs {} outputs",
            x.len(),
            y.len()
        )));
    }
    if l == 0 || !y.len().is_multiple_of(l) {
        return Err(Error::Length(format!(
            "{} samples are not whole groups of {l}",
            y.len()
        )));
    }
    check_states(prop, q)?;
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let emitter = Emitter::new(q, em)?;
    let s = q.states();
    let mut state = ForwardState::uniform(s);
    let mut pred = vec![0.0; s];
    let mut ws = Workspace::new();
    let mut trace = Vec::with_capacity(y.len() / l);
    for (k, (&xk, &yk)) in x.iter().zip(y).enumerate() {
        prop.apply(&state.weights, &mut pred, &mut ws);
        let inc = emitter
            .emit(&pred, yk, xk, &mut state.weights)
            .ok_or_else(|| Error::Numerical(format!("forward vector vanished at sample {k}")))?;
        state.log_scale += inc;
        if (k + 1) % l == 0 {
            trace.push(state.log_scale);
        }
    }
    Ok(trace)
}

/// log q(y^n) with i.i.d. symbols drawn from `candidates`.
pub fn forward_marginal(
    y: &[Complex64],
    candidates: &[Candidate],
    prop: &Propagator,
    q: &PhaseQuantizer,
    em: &Emission,
) -> Result<f64> {
    let trace = forward_marginal_trace(y, candidates, prop, q, em)?;
    Ok(trace.last().copied().unwrap_or(0.0))
}

/// Running log q(y^{mL}) after each symbol m.
///
/// For each symbol the previous symbol-level vector is propagated once,
/// then carried through the L inner emission/prediction steps separately
/// for every candidate, and the candidates are mixed by their priors.
pub fn forward_marginal_trace(
    y: &[Complex64],
    candidates: &[Candidate],
    prop: &Propagator,
    q: &PhaseQuantizer,
    em: &Emission,
) -> Result<Vec<f64>> {
    let l = validate_candidates(candidates)?;
    if !y.len().is_multiple_of(l) {
        return Err(Error::Length(format!(
            "{} samples are not whole symbols of {l}",
            y.len()
        )));
    }
    check_states(prop, q)?;
    check_finite(y, "y")?;
    let emitter = Emitter::new(q, em)?;
    let s = q.states();
    let log_priors: Vec<f64> = candidates.iter().map(|c| c.prior.ln()).collect();

    let mut psi = ForwardState::uniform(s);
    let mut pred0 = vec![0.0; s];
    let mut pred = vec![0.0; s];
    let mut v = vec![0.0; s];
    let mut acc = vec![0.0; s];
    let mut ws = Workspace::new();
    let mut trace = Vec::with_capacity(y.len() / l);

    for (m, block) in y.chunks(l).enumerate() {
        prop.apply(&psi.weights, &mut pred0, &mut ws);
        acc.fill(0.0);
        let mut acc_log = f64::NEG_INFINITY;
        for (cand, &lp) in candidates.iter().zip(&log_priors) {
            if lp == f64::NEG_INFINITY {
                continue;
            }
            let mut lc = lp;
            let mut alive = true;
            for (i, (&yk, &xk)) in block.iter().zip(&cand.samples).enumerate() {
                let input: &[f64] = if i == 0 {
                    &pred0
                } else {
                    prop.apply(&v, &mut pred, &mut ws);
                    &pred
                };
                match emitter.emit(input, yk, xk, &mut v) {
                    Some(inc) => lc += inc,
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
            if !alive {
                continue;
            }
            // acc holds sum_c exp(lc - acc_log) v_c
            if lc > acc_log {
                let r = (acc_log - lc).exp();
                for a in acc.iter_mut() {
                    *a *= r;
                }
                acc_log = lc;
            }
            let w = (lc - acc_log).exp();
            for (a, &vi) in acc.iter_mut().zip(&v) {
                *a += w * vi;
            }
        }
        let sum: f64 = acc.iter().sum();
        if acc_log == f64::NEG_INFINITY || !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::Numerical(format!(
                "every candidate vanished at symbol {m}"
            )));
        }
        for (p, a) in psi.weights.iter_mut().zip(&acc) {
            *p = a / sum;
        }
        psi.log_scale += acc_log + sum.ln();
        trace.push(psi.log_scale);
    }
    Ok(trace)
}

fn validate_candidates(candidates: &[Candidate]) -> Result<usize> {
    let first = candidates
        .first()
        .ok_or_else(|| Error::Length("no candidate symbols".into()))?;
    let l = first.samples.len();
    if l == 0 {
        return Err(Error::Length("candidate with no samples".into()));
    }
    let mut total = 0.0;
    for c in candidates {
        if c.samples.len() != l {
            return Err(Error::Length("candidates differ in length".into()));
        }
        if !(c.prior.is_finite() && c.prior >= 0.0) {
            return Err(Error::param("prior", format!("invalid prior {}", c.prior)));
        }
        check_finite(&c.samples, "candidate")?;
        total += c.prior;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param("prior", format!("priors sum to {total}")));
    }
    Ok(l)
}

/// Explicit S x S kernel chi(s, s~) = p(y_block, S_L = s | S_0 = s~, x~) of
/// one symbol, including the transition into the first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolKernel {
    /// Row-major, rows indexed by the end state s.
    pub chi: Vec<f64>,
    pub s: usize,
}

impl SymbolKernel {
    /// Builds chi column by column by running the inner recursion from
    /// each unit vector, without renormalization.
    pub fn build(
        block: &[Complex64],
        candidate: &[Complex64],
        prop: &Propagator,
        q: &PhaseQuantizer,
        em: &Emission,
    ) -> Result<Self> {
        if block.len() != candidate.len() {
            return Err(Error::Length("block and candidate lengths differ".into()));
        }
        check_states(prop, q)?;
        let em = Emission::new(em.gain, em.variance)?;
        let s = q.states();
        let mut chi = vec![0.0; s * s];
        let mut ws = Workspace::new();
        let mut v = vec![0.0; s];
        let mut pred = vec![0.0; s];
        for start in 0..s {
            v.fill(0.0);
            v[start] = 1.0;
            for (&yk, &xk) in block.iter().zip(candidate) {
                prop.apply(&v, &mut pred, &mut ws);
                for (i, (vi, p)) in v.iter_mut().zip(&pred).enumerate() {
                    *vi = p * em.log_density(yk, xk, q.midpoints()[i]).exp();
                }
            }
            for (end, &val) in v.iter().enumerate() {
                chi[end * s + start] = val;
            }
        }
        Ok(SymbolKernel { chi, s })
    }

    /// sum_{s~} chi(s, s~) psi(s~).
    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        self.chi
            .chunks(self.s)
            .map(|row| row.iter().zip(psi).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::quantizer::build_quantizer;
    use crate::estimator::transition::{build_transitions, TransitionTable};
    use crate::rng;
    use rand::Rng;

    fn cn<R: Rng>(r: &mut R) -> Complex64 {
        Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)
    }

    #[test]
    fn single_state_is_memoryless() {
        let q = build_quantizer(1).unwrap();
        let p = Propagator::for_table(&TransitionTable::identity(1).unwrap());
        let em = Emission::new(0.5, 0.3).unwrap();
        let mut r = rng::stream(41, 0);
        let x: Vec<Complex64> = (0..50).map(|_| cn(&mut r)).collect();
        let y: Vec<Complex64> = (0..50).map(|_| cn(&mut r)).collect();
        let got = forward_conditional(&x, &y, &p, &q, &em).unwrap();
        let want: f64 = x
            .iter()
            .zip(&y)
            .map(|(&a, &b)| em.log_density(b, a, 0.0))
            .sum();
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let q = build_quantizer(4).unwrap();
        let p = Propagator::for_table(&build_transitions(&q, 0.1).unwrap());
        let em = Emission {
            gain: 1.0,
            variance: 0.0,
        };
        let x = vec![Complex64::new(1.0, 0.0); 3];
        assert!(matches!(
            forward_conditional(&x, &x, &p, &q, &em),
            Err(Error::Parameter { .. })
        ));
        let em = Emission::new(1.0, 1.0).unwrap();
        assert!(forward_conditional(&x, &x[..2], &p, &q, &em).is_err());
        let q8 = build_quantizer(8).unwrap();
        assert!(forward_conditional(&x, &x, &p, &q8, &em).is_err());
    }

    #[test]
    fn marginal_dominates_each_sequence() {
        let mut r = rng::stream(42, 0);
        let q = build_quantizer(8).unwrap();
        let p = Propagator::for_table(&build_transitions(&q, 0.05).unwrap());
        let em = Emission::new(1.0, 0.2).unwrap();
        let cands: Vec<Candidate> = (0..3)
            .map(|_| Candidate {
                samples: vec![cn(&mut r), cn(&mut r)],
                prior: 1.0 / 3.0,
            })
            .collect();
        let y: Vec<Complex64> = (0..8).map(|_| cn(&mut r)).collect();
        let marg = forward_marginal(&y, &cands, &p, &q, &em).unwrap();
        let pick = [0usize, 2, 1, 1];
        let x: Vec<Complex64> = pick
            .iter()
            .flat_map(|&i| cands[i].samples.clone())
            .collect();
        let cond = forward_conditional(&x, &y, &p, &q, &em).unwrap();
        assert!(marg >= cond + 4.0 * (1.0f64 / 3.0).ln() - 1e-12);
    }

    #[test]
    fn kernel_matches_two_level_recursion() {
        let mut r = rng::stream(43, 0);
        let q = build_quantizer(5).unwrap();
        let p = Propagator::for_table(&build_transitions(&q, 0.3).unwrap());
        let em = Emission::new(1.0, 0.5).unwrap();
        let cands: Vec<Candidate> = [0.25, 0.75]
            .iter()
            .map(|&prior| Candidate {
                samples: vec![cn(&mut r), cn(&mut r), cn(&mut r)],
                prior,
            })
            .collect();
        let y: Vec<Complex64> = (0..9).map(|_| cn(&mut r)).collect();
        let mut psi = vec![0.2; 5];
        let mut log_total = 0.0;
        for block in y.chunks(3) {
            let mut next = [0.0; 5];
            for c in &cands {
                let k = SymbolKernel::build(block, &c.samples, &p, &q, &em).unwrap();
                assert!(k.chi.iter().all(|&v| v >= 0.0));
                for (n, v) in next.iter_mut().zip(k.apply(&psi)) {
                    *n += c.prior * v;
                }
            }
            let s: f64 = next.iter().sum();
            log_total += s.ln();
            psi = next.iter().map(|v| v / s).collect();
        }
        let got = forward_marginal(&y, &cands, &p, &q, &em).unwrap();
        assert!((got - log_total).abs() < 1e-11, "{got} vs {log_total}");
    }
}
