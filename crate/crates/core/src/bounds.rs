//! Closed-form finite-SNR and asymptotic lower bounds, all in nats.
//!
//! Unit symbol time and unit noise density are assumed, so SNR = P and
//! Delta = 1 / L.

use std::f64::consts::{E, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{simulate, ModelKind};
use crate::error::{Error, Result};
use crate::moments::closed_form_moments;
use crate::phase_noise::ChannelConfig;
use crate::quadrature::integrate_adaptive;
use crate::signal::{draw_shifted_exponential_amplitudes, AmplitudeLaw, Pulse};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    FiniteSnr,
    Asymptote,
}

/// A bound value with its additive terms.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub value_nats: f64,
    pub components: Vec<(&'static str, f64)>,
    pub regime: Regime,
}

impl BoundReport {
    fn from_components(components: Vec<(&'static str, f64)>, regime: Regime) -> Self {
        BoundReport {
            value_nats: components.iter().map(|c| c.1).sum(),
            components,
            regime,
        }
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|c| c.0 == name).map(|c| c.1)
    }
}

/// How the oversampling factor follows the SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Fixed(usize),
    /// L = ceil(beta sqrt(SNR))
    Sqrt,
    /// L = ceil((beta^2 SNR)^(1/3))
    Cbrt,
}

impl Schedule {
    pub fn samples(&self, snr: f64, beta: f64) -> usize {
        let l = match *self {
            Schedule::Fixed(l) => return l.max(1),
            Schedule::Sqrt => (beta * snr.sqrt()).ceil(),
            Schedule::Cbrt => (beta * beta * snr).cbrt().ceil(),
        };
        (l as usize).max(1)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Fixed(l) => write!(f, "fixed:{l}"),
            Schedule::Sqrt => f.write_str("sqrt"),
            Schedule::Cbrt => f.write_str("cbrt"),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(Schedule::Sqrt),
            "cbrt" => Ok(Schedule::Cbrt),
            _ => {
                let l = s.strip_prefix("fixed").unwrap_or(s).trim_start_matches(':');
                if l.is_empty() {
                    return Ok(Schedule::Fixed(1));
                }
                l.parse()
                    .map(Schedule::Fixed)
                    .map_err(|_| Error::param("schedule", format!("unknown schedule `{s}`")))
            }
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be > 0, got {v}")))
    }
}

fn amplitude_constant() -> f64 {
    -2.0 - 0.5 * (8.0 * PI).ln()
}

fn amplitude_report(snr: f64, delta: f64, filtering: f64) -> BoundReport {
    BoundReport::from_components(
        vec![
            ("half_log_snr", 0.5 * snr.ln()),
            ("constant", amplitude_constant()),
            ("noise", -0.5 / (snr * delta)),
            ("filtering", -0.25 * snr * filtering),
        ],
        Regime::FiniteSnr,
    )
}

/// Amplitude-modulation bound with the double-filtering receiver:
/// 1/2 ln SNR - 2 - 1/2 ln(8 pi) - 1/(2 SNR Delta) - SNR E[(G-1)^2] / 4.
pub fn amplitude_lb_finite(snr: f64, delta: f64, beta: f64) -> Result<BoundReport> {
    check_positive("snr", snr)?;
    let m = closed_form_moments(beta, delta)?;
    Ok(amplitude_report(snr, delta, m.ms_g_minus_1))
}

/// Variant whose auxiliary channel uses E[G] in place of one, so only
/// Var(G) enters the filtering penalty.
pub fn amplitude_lb_finite_centered(snr: f64, delta: f64, beta: f64) -> Result<BoundReport> {
    check_positive("snr", snr)?;
    let m = closed_form_moments(beta, delta)?;
    Ok(amplitude_report(snr, delta, m.var_g))
}

/// Limit of the amplitude bound minus 1/2 ln SNR along L = ceil(beta sqrt(SNR)).
pub fn amplitude_asymptote(beta: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    Ok(amplitude_constant() - PI * PI / 36.0)
}

/// Limit of the centered bound minus 1/2 ln SNR along
/// L = ceil((beta^2 SNR)^(1/3)).
pub fn cubicroot_asymptote(beta: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    Ok(amplitude_constant() - PI * PI / 45.0)
}

/// Amplitude bound at one SNR with L taken from `schedule`.
pub fn amplitude_lb_scheduled(snr: f64, beta: f64, schedule: Schedule) -> Result<BoundReport> {
    let delta = 1.0 / schedule.samples(snr, beta) as f64;
    match schedule {
        Schedule::Cbrt => amplitude_lb_finite_centered(snr, delta, beta),
        _ => amplitude_lb_finite(snr, delta, beta),
    }
}

/// Density of arg(R e^{j0} + Z) for unit-variance circular Gaussian Z.
pub fn awgn_phase_pdf(phi: f64, r: f64) -> f64 {
    let c = phi.cos();
    let s = phi.sin();
    (-r * r).exp() / TAU + r * c / (4.0 * PI).sqrt() * (-r * r * s * s).exp() * libm::erfc(-r * c)
}

/// Phase-only rate of the AWGN channel with uniform phase input:
/// max(0, 1/2 ln R^2 - 1).
pub fn awgn_phase_rate_lb(r: f64) -> Result<f64> {
    check_positive("r", r)?;
    Ok((0.5 * (r * r).ln() - 1.0).max(0.0))
}

/// I(Phi_X; Phi_Y) = integral of p ln(2 pi p) over one period, by adaptive
/// quadrature.
pub fn awgn_phase_mutual_information(r: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::param("r", format!("must be >= 0, got {r}")));
    }
    Ok(integrate_adaptive(
        |phi| {
            let p = awgn_phase_pdf(phi, r);
            if p > 0.0 {
                p * (TAU * p).ln()
            } else {
                0.0
            }
        },
        -PI,
        PI,
        1e-10,
    ))
}

/// E[cos Phi] under `awgn_phase_pdf`.
pub fn awgn_mean_cos(r: f64) -> f64 {
    integrate_adaptive(|phi| phi.cos() * awgn_phase_pdf(phi, r), -PI, PI, 1e-10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaChoice {
    /// alpha = SNR Delta
    SnrDelta,
    /// alpha maximizing the bound
    Optimal,
}

impl FromStr for AlphaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr-delta" => Ok(AlphaChoice::SnrDelta),
            "optimal" => Ok(AlphaChoice::Optimal),
            _ => Err(Error::param("alpha", format!("unknown choice `{s}`"))),
        }
    }
}

/// Phase-modulation bound of the two-stage receiver, valid for
/// SNR Delta > 2.
pub fn phase_lb_finite(snr: f64, delta: f64, beta: f64, alpha: AlphaChoice) -> Result<BoundReport> {
    check_positive("snr", snr)?;
    check_positive("delta", delta)?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param("beta", format!("must be >= 0, got {beta}")));
    }
    let sd = snr * delta;
    if sd <= 2.0 {
        return Err(Error::Domain(format!("SNR Delta = {sd} must exceed 2")));
    }
    let components = match alpha {
        AlphaChoice::SnrDelta => vec![
            ("half_log_snr_delta", 0.5 * sd.ln()),
            ("phase_noise", -PI * beta * sd * delta),
            ("constant", -4.0),
        ],
        AlphaChoice::Optimal => vec![
            (
                "half_log_ratio",
                0.5 * (sd / (TAU * beta * sd * delta + 8.0)).ln(),
            ),
            ("constant", -0.5),
        ],
    };
    Ok(BoundReport::from_components(components, Regime::FiniteSnr))
}

/// Limit of the alpha = SNR Delta phase bound minus 1/4 ln SNR along
/// L = ceil(beta sqrt(SNR)): 1/2 ln(1/beta) - pi/beta - 4.
pub fn phase_asymptote(beta: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    Ok(0.5 * (1.0 / beta).ln() - PI / beta - 4.0)
}

/// Same limit for the optimal alpha: -1/2 ln(2 pi + 8 beta) - 1/2.
pub fn phase_optimal_asymptote(beta: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    Ok(-0.5 * (TAU + 8.0 * beta).ln() - 0.5)
}

/// Monte Carlo estimate of E[cos(arg Y~_k - Phi_X,k)] for the two-stage
/// receiver on the model without filtering, where
/// Y~_k = (Y_first / sqrt(Delta)) conj(Y_last,prev / (X_prev Delta)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageCheck {
    pub mean_cos: f64,
    pub std_error: f64,
    /// 1 - sigma_W^2 / 2 - 4 / (SNR Delta)
    pub bound: f64,
}

pub fn two_stage_cos_check<R: Rng + ?Sized>(
    snr: f64,
    l: usize,
    beta: f64,
    nsymb: usize,
    rng: &mut R,
) -> Result<TwoStageCheck> {
    check_positive("snr", snr)?;
    let delta = 1.0 / l as f64;
    if snr * delta <= 2.0 {
        return Err(Error::Domain(format!(
            "SNR Delta = {} must exceed 2",
            snr * delta
        )));
    }
    if nsymb < 3 {
        return Err(Error::param("nsymb", "at least three symbols"));
    }
    let config = ChannelConfig::new(beta, 1.0, l, l, 1.0 / snr, 1.0)?;
    let law = AmplitudeLaw::new(1.0)?;
    let amps = draw_shifted_exponential_amplitudes(&law, nsymb, rng);
    let symbols: Vec<Complex64> = amps
        .iter()
        .map(|&a| Complex64::from_polar(a.sqrt(), rng.random_range(-PI..PI)))
        .collect();
    let obs = simulate(
        ModelKind::MultisampleApprox,
        &symbols,
        &Pulse::square(1.0)?,
        &config,
        rng,
    )?;
    let vals: Vec<f64> = (1..nsymb)
        .map(|k| {
            let first = obs.y[k * l] / delta.sqrt();
            let theta_hat = obs.y[k * l - 1] / (symbols[k - 1] * delta);
            let yt = first * theta_hat.conj();
            (yt.arg() - symbols[k].arg()).cos()
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(TwoStageCheck {
        mean_cos: mean,
        std_error: (var / n).sqrt(),
        bound: 1.0 - config.sigma_w2() / 2.0 - 4.0 / (snr * delta),
    })
}

/// Maximum of x^n e^{-a x^2} over x >= 0: (n / (2 a e))^(n/2).
pub fn max_power_exp(n: u32, a: f64) -> f64 {
    (n as f64 / (2.0 * a * E)).powf(n as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn components_sum_to_value() {
        let r = amplitude_lb_finite(1e4, 0.01, 0.1).unwrap();
        let s: f64 = r.components.iter().map(|c| c.1).sum();
        assert_eq!(s, r.value_nats);
        assert_eq!(r.regime, Regime::FiniteSnr);
    }

    #[test]
    fn noiseless_filterless_limit() {
        // beta = 0 removes the filtering term; huge SNR Delta removes the noise term
        let snr = 1e12;
        let r = amplitude_lb_finite(snr, 1e-2, 0.0).unwrap();
        assert!((r.value_nats - 0.5 * snr.ln() - amplitude_constant()).abs() < 1e-9);
    }

    #[test]
    fn asymptote_constants() {
        let t1 = amplitude_asymptote(0.3).unwrap();
        let c = cubicroot_asymptote(0.3).unwrap();
        assert!((t1 - c + PI * PI / 180.0).abs() < 1e-14);
        assert!((t1 - (-2.0 - 1.612_085_713 - 0.274_155_678)).abs() < 1e-8);
    }

    #[test]
    fn phase_bound_reaches_its_limit() {
        let beta = 0.25;
        for (alpha, lim) in [
            (AlphaChoice::SnrDelta, phase_asymptote(beta).unwrap()),
            (AlphaChoice::Optimal, phase_optimal_asymptote(beta).unwrap()),
        ] {
            let excess = |snr: f64| {
                let l = Schedule::Sqrt.samples(snr, beta);
                let r = phase_lb_finite(snr, 1.0 / l as f64, beta, alpha).unwrap();
                r.value_nats - 0.25 * snr.ln()
            };
            let e = excess(1e12);
            assert!((e - lim).abs() < 1e-3, "{alpha:?} {e} {lim}");
        }
        let full_log = (1.0 / beta).ln() - PI / beta - 4.0;
        assert!((phase_asymptote(beta).unwrap() - full_log).abs() > 0.5);
    }

    #[test]
    fn schedules() {
        assert_eq!(Schedule::Sqrt.samples(1e4, 0.25), 25);
        assert_eq!(Schedule::Cbrt.samples(1e6, 1.0), 100);
        assert_eq!(Schedule::Fixed(0).samples(1.0, 1.0), 1);
        assert_eq!("cbrt".parse::<Schedule>().unwrap(), Schedule::Cbrt);
        assert_eq!("fixed:8".parse::<Schedule>().unwrap(), Schedule::Fixed(8));
        assert!("nope".parse::<Schedule>().is_err());
    }

    #[test]
    fn phase_pdf_basics() {
        for phi in [-3.0, 0.0, 1.0] {
            assert!((awgn_phase_pdf(phi, 0.0) - 1.0 / TAU).abs() < 1e-16);
        }
        for r in [0.5, 1.0, 3.0, 10.0] {
            let m = integrate_adaptive(|p| awgn_phase_pdf(p, r), -PI, PI, 1e-12);
            assert!((m - 1.0).abs() < 1e-9, "r={r} mass={m}");
        }
    }

    #[test]
    fn phase_rate_bound() {
        assert!(awgn_phase_rate_lb(E).unwrap().abs() < 1e-15);
        assert!((awgn_phase_rate_lb(E * E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(awgn_phase_rate_lb(0.5).unwrap(), 0.0);
        for r in [3.0, 10.0, 30.0] {
            assert!(awgn_phase_mutual_information(r).unwrap() > awgn_phase_rate_lb(r).unwrap());
        }
    }

    #[test]
    fn phase_bound_domain_and_ordering() {
        assert!(matches!(
            phase_lb_finite(10.0, 0.1, 0.1, AlphaChoice::SnrDelta),
            Err(Error::Domain(_))
        ));
        for &snr in &[1e2, 1e4, 1e6] {
            for &l in &[1usize, 4, 32] {
                for &beta in &[0.01, 0.1, 1.0] {
                    let d = 1.0 / l as f64;
                    if snr * d <= 2.0 {
                        continue;
                    }
                    let a = phase_lb_finite(snr, d, beta, AlphaChoice::SnrDelta).unwrap();
                    let b = phase_lb_finite(snr, d, beta, AlphaChoice::Optimal).unwrap();
                    assert!(b.value_nats >= a.value_nats - 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_stage_receiver_meets_bound() {
        let mut r = rng::stream(51, 0);
        let chk = two_stage_cos_check(1e4, 20, 1.0, 20_000, &mut r).unwrap();
        assert!(chk.mean_cos + 4.0 * chk.std_error >= chk.bound, "{chk:?}");
        assert!(two_stage_cos_check(10.0, 10, 1.0, 100, &mut r).is_err());
    }
}
