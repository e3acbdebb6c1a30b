//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// log of sum over all state paths s_0..s_n of
/// (1/S) prod_k Q(s_k | s_{k-1}) N(y_k; gain x_k e^{j phi(s_k)}, var).
pub fn brute_log_conditional(
    x: &[Complex64],
    y: &[Complex64],
    phases: &[f64],
    q: &dyn Fn(usize, usize) -> f64,
    gain: f64,
    var: f64,
) -> f64 {
    let s = phases.len();
    let n = y.len();
    let density = |k: usize, st: usize| {
        let d = y[k] - x[k] * gain * Complex64::from_polar(1.0, phases[st]);
        (-d.norm_sqr() / var).exp() / (PI * var)
    };
    let paths = s.pow(n as u32 + 1);
    let mut total = 0.0;
    for code in 0..paths {
        let mut states = Vec::with_capacity(n + 1);
        let mut c = code;
        for _ in 0..=n {
            states.push(c % s);
            c /= s;
        }
        let mut p = 1.0 / s as f64;
        for k in 0..n {
            p *= q(states[k], states[k + 1]) * density(k, states[k + 1]);
        }
        total += p;
    }
    total.ln()
}

/// log sum over symbol sequences of prod p(x) q(y | x); each symbol is
/// repeated with the given per-sample weights.
pub fn brute_log_marginal(
    alphabet: &[Complex64],
    weights: &[f64],
    y: &[Complex64],
    phases: &[f64],
    q: &dyn Fn(usize, usize) -> f64,
    gain: f64,
    var: f64,
) -> f64 {
    let l = weights.len();
    let nsymb = y.len() / l;
    let a = alphabet.len();
    let mut total = 0.0;
    for code in 0..a.pow(nsymb as u32) {
        let mut c = code;
        let mut x = Vec::with_capacity(y.len());
        for _ in 0..nsymb {
            let sym = alphabet[c % a];
            c /= a;
            x.extend(weights.iter().map(|&w| sym * w));
        }
        let prior = (a as f64).powi(-(nsymb as i32));
        total += prior * brute_log_conditional(&x, y, phases, q, gain, var).exp();
    }
    total.ln()
}

/// Cell transition weights for S equal cells under a wrapped Gaussian
/// increment, from the closed-form second antiderivative
/// K(x) = x Phi(x / sigma) + sigma^2 phi_sigma(x) of the Gaussian density.
/// K is split as max(x, 0) + h(x); the second difference of max(x, 0) is the
/// hat (w - |c|)+, and h decays, so large images do not cancel.
/// Rows are normalized.
pub fn closed_form_offsets(s: usize, sigma2: f64) -> Vec<f64> {
    let sigma = sigma2.sqrt();
    let w = TAU / s as f64;
    let h = |x: f64| {
        let a = x.abs();
        sigma2 * (-(x * x) / (2.0 * sigma2)).exp() / (TAU.sqrt() * sigma)
            - a * 0.5 * libm::erfc(a / sigma / SQRT_2)
    };
    let images = (10.0 * sigma / TAU).ceil() as i64 + 2;
    let raw: Vec<f64> = (0..s)
        .map(|d| {
            (-images..=images)
                .map(|m| {
                    let c = d as f64 * w + m as f64 * TAU;
                    (w - c.abs()).max(0.0) + h(c + w) - 2.0 * h(c) + h(c - w)
                })
                .sum::<f64>()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// I(X;Y) in bits for equiprobable `points` over y = x + CN(0, var), by
/// tensor-product composite Gauss-Legendre over the noise plane.
pub fn awgn_mi_bits(points: &[Complex64], var: f64) -> f64 {
    let (gx, gw) = gauss_legendre(16);
    let sd = (var / 2.0).sqrt();
    let half = 9.0 * sd;
    let panels = 24;
    let h = 2.0 * half / panels as f64;
    let mut nodes = Vec::new();
    for p in 0..panels {
        let lo = -half + p as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    let m = points.len() as f64;
    let mut acc = 0.0;
    for &xi in points {
        for &(zr, wr) in &nodes {
            for &(zi, wi) in &nodes {
                let z = Complex64::new(zr, zi);
                let pz = (-z.norm_sqr() / var).exp() / (PI * var);
                let s: f64 = points
                    .iter()
                    .map(|&xj| (-((xi - xj + z).norm_sqr() - z.norm_sqr()) / var).exp())
                    .sum();
                acc += wr * wi * pz * s.log2();
            }
        }
    }
    m.log2() - acc / m
}

/// Monte Carlo draws of F = (1/D) int_0^D e^{j W(t)} dt for a Wiener phase of
/// rate 2 pi beta, with D = 1 and `steps` midpoint cells per interval.
pub fn sample_filter_factor<R: Rng + ?Sized>(beta: f64, steps: usize, rng: &mut R) -> Complex64 {
    let dt = 1.0 / steps as f64;
    let sd = (TAU * beta * dt / 2.0).sqrt();
    let mut phase = 0.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..steps {
        let a: f64 = StandardNormal.sample(rng);
        phase += sd * a;
        acc += Complex64::from_polar(1.0, phase);
        let b: f64 = StandardNormal.sample(rng);
        phase += sd * b;
    }
    acc * dt
}

/// Mean and standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

use phasenoise::estimator::{
    build_quantizer, build_transitions, forward_conditional, forward_marginal, Candidate, Emission,
    Propagator,
};

/// Largest log-domain gap between the forward recursions and exhaustive
/// enumeration over nsymb <= 3, L <= 2, S <= 3, |X| <= 2, for both circulant
/// code paths. Returns (max error, number of comparisons).
pub fn forward_vs_enumeration() -> (f64, usize) {
    let mut rng = phasenoise::rng::stream(77, 0);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for nsymb in 1..=3 {
        for l in 1..=2usize {
            for s in 1..=3 {
                for a in 1..=2usize {
                    for &(sigma_w2, var) in &[(0.05, 0.3), (1.5, 0.05)] {
                        let q = build_quantizer(s).unwrap();
                        let table = build_transitions(&q, sigma_w2).unwrap();
                        let alphabet: Vec<Complex64> = (0..a)
                            .map(|i| Complex64::from_polar(1.0, 0.3 + PI * i as f64))
                            .collect();
                        let weights: Vec<f64> = (0..l).map(|i| 0.7 + 0.6 * i as f64).collect();
                        let gain = 1.0 / l as f64;
                        let em = Emission::new(gain, var).unwrap();
                        let symbols: Vec<Complex64> = (0..nsymb)
                            .map(|_| alphabet[rng.random_range(0..a)])
                            .collect();
                        let x: Vec<Complex64> = symbols
                            .iter()
                            .flat_map(|&sym| weights.iter().map(move |&w| sym * w))
                            .collect();
                        let y: Vec<Complex64> = x
                            .iter()
                            .map(|&xi| {
                                xi * gain * Complex64::from_polar(1.0, rng.random_range(-PI..PI))
                                    + Complex64::new(
                                        rng.random::<f64>() - 0.5,
                                        rng.random::<f64>() - 0.5,
                                    )
                            })
                            .collect();
                        let qf = |i: usize, j: usize| table.get(i, j);
                        let want_c = brute_log_conditional(&x, &y, q.midpoints(), &qf, gain, var);
                        let want_m = brute_log_marginal(
                            &alphabet,
                            &weights,
                            &y,
                            q.midpoints(),
                            &qf,
                            gain,
                            var,
                        );
                        let candidates: Vec<Candidate> = alphabet
                            .iter()
                            .map(|&sym| Candidate {
                                samples: weights.iter().map(|&w| sym * w).collect(),
                                prior: 1.0 / a as f64,
                            })
                            .collect();
                        for prop in [Propagator::direct(&table), Propagator::fft(&table)] {
                            let c = forward_conditional(&x, &y, &prop, &q, &em).unwrap();
                            let m = forward_marginal(&y, &candidates, &prop, &q, &em).unwrap();
                            worst = worst.max((c - want_c).abs()).max((m - want_m).abs());
                            count += 2;
                        }
                    }
                }
            }
        }
    }
    (worst, count)
}
