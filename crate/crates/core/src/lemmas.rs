//! Numerical checks of the scalar inequalities and identities the high-SNR
//! bounds rest on.

use std::f64::consts::{PI, TAU};

use crate::bounds::{awgn_mean_cos, awgn_phase_pdf, max_power_exp};
use crate::quadrature::{integrate_adaptive, GaussLegendre};

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest slack observed; negative means a violation beyond tolerance.
    pub worst_margin: f64,
}

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

fn check(name: &'static str, margins: impl Iterator<Item = f64>, tol: f64) -> LemmaCheck {
    let worst = margins.fold(f64::INFINITY, f64::min);
    LemmaCheck {
        name,
        passed: worst >= -tol,
        worst_margin: worst,
    }
}

/// E[cos(Phi_Y - Phi_X)] computed with Phi_Y integrated over a fixed
/// period for several priors of Phi_X equals the prior-free value.
pub fn phase_prior_invariance(r: f64) -> LemmaCheck {
    let reference = awgn_mean_cos(r);
    let inner = |px: f64| {
        integrate_adaptive(
            |py| awgn_phase_pdf(py - px, r) * (py - px).cos(),
            -PI,
            PI,
            1e-12,
        )
    };
    let point = inner(1.0);
    let two_point = 0.3 * inner(-2.0) + 0.7 * inner(2.5);
    let gl = GaussLegendre::new(16);
    let uniform = gl.integrate_composite(-PI, PI, 16, inner) / TAU;
    check(
        "phase-prior-invariance",
        [point, two_point, uniform]
            .into_iter()
            .map(|v| -(v - reference).abs()),
        1e-9,
    )
}

/// erfc(-z) >= 2 - e^{-z^2} for z >= 0.
pub fn erfc_lower() -> LemmaCheck {
    check(
        "erfc-lower",
        grid(0.0, 10.0, 10_000).map(|z| libm::erfc(-z) - (2.0 - (-z * z).exp())),
        1e-15,
    )
}

/// sin t <= t for t >= 0.
pub fn sine_upper() -> LemmaCheck {
    check(
        "sine-upper",
        grid(0.0, 20.0, 20_000).map(|t| t - t.sin()),
        0.0,
    )
}

/// cos^2 t e^{-a sin^2 t} >= (1 - t^2) e^{-a t^2} on [0, pi].
pub fn cos_exp_lower() -> LemmaCheck {
    let margins = [0.1, 1.0, 10.0].into_iter().flat_map(|a| {
        grid(0.0, PI, 10_000).map(move |t| {
            let c = t.cos();
            let s = t.sin();
            c * c * (-a * s * s).exp() - (1.0 - t * t) * (-a * t * t).exp()
        })
    });
    check("cos-exp-lower", margins, 1e-15)
}

/// max over x >= 0 of x^n e^{-a x^2} equals (n / (2 a e))^{n/2}: the grid
/// maximum never exceeds it and comes within 1e-6 relative.
pub fn power_exp_max() -> LemmaCheck {
    let mut worst = f64::INFINITY;
    let mut attained = true;
    for n in 1..=3u32 {
        for a in [0.1, 1.0, 10.0] {
            let bound = max_power_exp(n, a);
            let peak = (n as f64 / (2.0 * a)).sqrt();
            let m = grid(0.0, 3.0 * peak, 200_000)
                .map(|x| x.powi(n as i32) * (-a * x * x).exp())
                .fold(0.0, f64::max);
            worst = worst.min((bound - m) / bound);
            attained &= (bound - m) / bound < 1e-6;
        }
    }
    LemmaCheck {
        name: "power-exp-max",
        passed: attained && worst >= -1e-12,
        worst_margin: worst,
    }
}

/// E[cos Phi] >= 1 - 1/R^2 for the phase of R + Z.
pub fn mean_cos_lower() -> LemmaCheck {
    check(
        "mean-cos-lower",
        [1.5, 2.0, 3.0, 5.0, 10.0]
            .into_iter()
            .map(|r| awgn_mean_cos(r) - (1.0 - 1.0 / (r * r))),
        1e-10,
    )
}

pub fn run_all() -> Vec<LemmaCheck> {
    vec![
        phase_prior_invariance(2.0),
        erfc_lower(),
        sine_upper(),
        cos_exp_lower(),
        power_exp_max(),
        mean_cos_lower(),
    ]
}
