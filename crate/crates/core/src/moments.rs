//! Closed-form moments of the filtered phasor F and of G = (1/L) sum |F_l|^2
//! for a rectangular pulse.
//!
//! Everything is expressed in x = pi beta Delta = -ln a. For x < 1 the
//! closed forms lose digits to cancellation, so a power series in x is used
//! instead. The series coefficients follow from expanding each numerator in
//! powers of x (the leading terms cancel exactly):
//!
//! E[F]       = sum_{n>=0} (-x)^n / (n+1)!
//! E[|F|^2]   = 2 x^-2 sum_{n>=2} (-x)^n / n!
//! E[|F|^4]   = (18 x^4)^-1 sum_{n>=4} (-1)^n (4^n + 240 n - 784) x^n / n!
//! Var(|F|^2) = (18 x^4)^-1 sum_{n>=6} (-1)^n (4^n - 72 2^n + 384 n - 640) x^n / n!
//! Var(F)     = x^-2 sum_{n>=3} (-1)^n (4 - 2^n) x^n / n!

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Moments of F_1 and G at one (beta, Delta) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub a: f64,
    pub ef1: f64,
    pub ef1_sq: f64,
    pub ef1_4: f64,
    pub var_f1: f64,
    pub var_f1sq: f64,
    pub eg: f64,
    pub var_g: f64,
    pub ms_g_minus_1: f64,
}

/// Small-Delta limits of the scaled G moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentLimits {
    /// lim Var(G) / Delta^3 = 4 (pi beta)^2 / 45
    pub var_g_over_delta3: f64,
    /// lim (E[G] - 1)^2 / Delta^2 = (pi beta)^2 / 9
    pub bias_sq_over_delta2: f64,
    /// lim E[(G - 1)^2] / Delta^2 = (pi beta)^2 / 9
    pub ms_g_minus_1_over_delta2: f64,
    /// lim Var(G) / Delta^2 = 0
    pub var_g_over_delta2: f64,
}

const SERIES_TERMS: usize = 40;
const SERIES_BELOW: f64 = 1.0;

fn series<F: Fn(usize) -> f64>(x: f64, from: usize, coeff: F) -> f64 {
    // sum_{n>=from} coeff(n) (-x)^(n-from) / n!
    let mut fact = (1..=from).map(|k| k as f64).product::<f64>();
    let mut pow = 1.0;
    let mut acc = 0.0;
    for n in from..from + SERIES_TERMS {
        if n > from {
            fact *= n as f64;
            pow *= -x;
        }
        acc += coeff(n) * pow / fact;
    }
    acc
}

/// E[F_1] as a function of x = pi beta Delta.
pub fn mean_f(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x < SERIES_BELOW {
        series(x, 0, |n| 1.0 / (n as f64 + 1.0))
    } else {
        -(-x).exp_m1() / x
    }
}

/// E[|F_1|^2].
pub fn mean_f_sq(x: f64) -> f64 {
    if x < SERIES_BELOW {
        2.0 * series(x, 2, |_| 1.0)
    } else {
        let a = (-x).exp();
        2.0 * (a - 1.0 + x) / (x * x)
    }
}

/// E[|F_1|^4].
pub fn mean_f_4(x: f64) -> f64 {
    if x < SERIES_BELOW {
        series(x, 4, |n| 4f64.powi(n as i32) + 240.0 * n as f64 - 784.0) / 18.0
    } else {
        let a = (-x).exp();
        let la = -x;
        (783.0 - 784.0 * a + a.powi(4) + 540.0 * la + 240.0 * a * la + 144.0 * la * la)
            / (18.0 * la.powi(4))
    }
}

/// Var(|F_1|^2).
pub fn var_f_sq(x: f64) -> f64 {
    let v = if x < SERIES_BELOW {
        x * x
            * series(x, 6, |n| {
                4f64.powi(n as i32) - 72.0 * 2f64.powi(n as i32) + 384.0 * n as f64 - 640.0
            })
            / 18.0
    } else {
        let a = (-x).exp();
        let la = -x;
        (711.0 - 640.0 * a - 72.0 * a * a
            + a.powi(4)
            + 396.0 * la
            + 384.0 * a * la
            + 72.0 * la * la)
            / (18.0 * la.powi(4))
    };
    v.max(0.0)
}

/// Var(F_1) = E|F_1|^2 - |E F_1|^2.
pub fn var_f(x: f64) -> f64 {
    let v = if x < SERIES_BELOW {
        -x * series(x, 3, |n| 4.0 - 2f64.powi(n as i32))
    } else {
        let a = (-x).exp();
        let la = -x;
        -(3.0 - 4.0 * a + a * a + 2.0 * la) / (la * la)
    };
    v.max(0.0)
}

fn check(beta: f64, delta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param(
            "beta",
            format!("must be finite and >= 0, got {beta}"),
        ));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param("delta", format!("must be > 0, got {delta}")));
    }
    Ok(())
}

/// Moments for unit symbol time, i.e. L = 1 / Delta samples per symbol.
pub fn closed_form_moments(beta: f64, delta: f64) -> Result<MomentReport> {
    closed_form_moments_with_l(beta, delta, 1.0 / delta)
}

/// Moments with an explicit number of samples per symbol in G.
pub fn closed_form_moments_with_l(beta: f64, delta: f64, l: f64) -> Result<MomentReport> {
    check(beta, delta)?;
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::param("l", format!("must be > 0, got {l}")));
    }
    let x = PI * beta * delta;
    let ef1_sq = mean_f_sq(x);
    let var_f1sq = var_f_sq(x);
    let var_g = var_f1sq / l;
    let bias = ef1_sq - 1.0;
    Ok(MomentReport {
        a: (-x).exp(),
        ef1: mean_f(x),
        ef1_sq,
        ef1_4: mean_f_4(x),
        var_f1: var_f(x),
        var_f1sq,
        eg: ef1_sq,
        var_g,
        ms_g_minus_1: var_g + bias * bias,
    })
}

/// Limits of the scaled G moments as Delta -> 0 (unit symbol time).
pub fn moment_limits(beta: f64) -> Result<MomentLimits> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::param("beta", format!("must be > 0, got {beta}")));
    }
    let pb2 = (PI * beta).powi(2);
    Ok(MomentLimits {
        var_g_over_delta3: 4.0 * pb2 / 45.0,
        bias_sq_over_delta2: pb2 / 9.0,
        ms_g_minus_1_over_delta2: pb2 / 9.0,
        var_g_over_delta2: 0.0,
    })
}
