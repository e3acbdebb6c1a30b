//! Wiener phase process, additive noise and the filtered-phase factors `F_k`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};

/// Physical parameters shared by every model.
///
/// `beta` is the full-width half-maximum linewidth of the oscillator, `ts` the
/// symbol interval, `l` receiver samples per symbol and `l_sim` the number of
/// fine simulation points per symbol used to emulate the continuous-time
/// channel. `sigma_n2` is the two-sided noise density (N0 = 2 sigma_n2) and `p`
/// the average symbol energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub beta: f64,
    pub ts: f64,
    pub l: usize,
    pub l_sim: usize,
    pub sigma_n2: f64,
    pub p: f64,
}

impl ChannelConfig {
    pub fn new(beta: f64, ts: f64, l: usize, l_sim: usize, sigma_n2: f64, p: f64) -> Result<Self> {
        let cfg = ChannelConfig {
            beta,
            ts,
            l,
            l_sim,
            sigma_n2,
            p,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit symbol time and unit power, parameterized the way sweeps are:
    /// normalized half-width linewidth `f_HWHM * Ts` and SNR in dB.
    pub fn normalized(fhwhm_ts: f64, snr_db: f64, l: usize, l_sim: usize) -> Result<Self> {
        let snr = 10f64.powf(snr_db / 10.0);
        Self::new(2.0 * fhwhm_ts, 1.0, l, l_sim, 1.0 / snr, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::param(
                "beta",
                format!("must be finite and >= 0, got {}", self.beta),
            ));
        }
        if !(self.ts.is_finite() && self.ts > 0.0) {
            return Err(Error::param("ts", format!("must be > 0, got {}", self.ts)));
        }
        if self.l < 1 {
            return Err(Error::param("l", "at least one sample per symbol"));
        }
        if self.l_sim < self.l || !self.l_sim.is_multiple_of(self.l) {
            return Err(Error::param(
                "l_sim",
                format!("must be a multiple of L = {}, got {}", self.l, self.l_sim),
            ));
        }
        if !(self.sigma_n2.is_finite() && self.sigma_n2 > 0.0) {
            return Err(Error::param(
                "sigma_n2",
                format!("must be > 0, got {}", self.sigma_n2),
            ));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::param("p", format!("must be > 0, got {}", self.p)));
        }
        Ok(())
    }

    /// Receiver sample interval Ts / L.
    pub fn delta(&self) -> f64 {
        self.ts / self.l as f64
    }

    pub fn snr(&self) -> f64 {
        self.p / (self.sigma_n2 * self.ts)
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }

    /// Phase increment variance over one receiver sample, 2 pi beta Delta.
    pub fn sigma_w2(&self) -> f64 {
        TAU * self.beta * self.delta()
    }

    /// Fine simulation points inside one receiver sample interval.
    pub fn fine_per_sample(&self) -> usize {
        self.l_sim / self.l
    }

    pub fn fine_step(&self) -> f64 {
        self.ts / self.l_sim as f64
    }

    pub fn with_l(&self, l: usize) -> Result<Self> {
        Self::new(self.beta, self.ts, l, self.l_sim, self.sigma_n2, self.p)
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self> {
        let snr = 10f64.powf(snr_db / 10.0);
        Self::new(
            self.beta,
            self.ts,
            self.l,
            self.l_sim,
            self.p / (snr * self.ts),
            self.p,
        )
    }
}

/// One realization of the unwrapped phase on a uniform grid.
///
/// `cumulative[0]` is the initial phase and `cumulative[k] = cumulative[k-1] +
/// increments[k-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePath {
    pub increments: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub dt: f64,
}

impl PhasePath {
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}

/// Where the process starts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialPhase {
    /// Uniform on [-pi, pi).
    #[default]
    Uniform,
    Fixed(f64),
}

impl InitialPhase {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialPhase::Uniform => Uniform::new(-PI, PI).expect("valid range").sample(rng),
            InitialPhase::Fixed(v) => v,
        }
    }
}

/// Samples `n_steps` independent Gaussian increments of variance
/// `2 pi beta dt` starting from a uniform phase.
pub fn sample_wiener_path<R: Rng + ?Sized>(
    config: &ChannelConfig,
    n_steps: usize,
    dt: f64,
    rng: &mut R,
) -> Result<PhasePath> {
    sample_wiener_path_from(config.beta, InitialPhase::Uniform, n_steps, dt, rng)
}

pub fn sample_wiener_path_from<R: Rng + ?Sized>(
    beta: f64,
    start: InitialPhase,
    n_steps: usize,
    dt: f64,
    rng: &mut R,
) -> Result<PhasePath> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param(
            "dt",
            format!("must be finite and > 0, got {dt}"),
        ));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param(
            "beta",
            format!("must be finite and >= 0, got {beta}"),
        ));
    }
    if n_steps < 1 {
        return Err(Error::param("n_steps", "at least one step"));
    }
    let sd = (TAU * beta * dt).sqrt();
    let mut increments = Vec::with_capacity(n_steps);
    let mut cumulative = Vec::with_capacity(n_steps + 1);
    let mut theta = start.draw(rng);
    cumulative.push(theta);
    for _ in 0..n_steps {
        let w = if sd > 0.0 {
            sd * Distribution::<f64>::sample(&StandardNormal, rng)
        } else {
            0.0
        };
        theta += w;
        increments.push(w);
        cumulative.push(theta);
    }
    Ok(PhasePath {
        increments,
        cumulative,
        dt,
    })
}

/// `n` i.i.d. circularly-symmetric complex Gaussians with E|N|^2 = variance.
pub fn sample_awgn<R: Rng + ?Sized>(
    n: usize,
    variance: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::param(
            "variance",
            format!("must be > 0, got {variance}"),
        ));
    }
    let sd = (0.5 * variance).sqrt();
    Ok((0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sd * re, sd * im)
        })
        .collect())
}

/// Density of a zero-mean Gaussian of variance `sigma2` wrapped onto the
/// circle, with a fixed image count chosen once.
#[derive(Debug, Clone, Copy)]
pub struct WrappedGaussian {
    sigma2: f64,
    images: i64,
}

/// Above this variance the image sum is replaced by its Fourier series.
const FOURIER_REGIME: f64 = 100.0;

impl WrappedGaussian {
    pub fn new(sigma2: f64, tail_tol: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::param("sigma2", format!("must be > 0, got {sigma2}")));
        }
        // smallest z (in standard deviations) whose two-sided tail is below tail_tol
        let tol = tail_tol.clamp(1e-300, 1.0);
        let mut z = 6.0f64;
        while libm::erfc(z / std::f64::consts::SQRT_2) > tol && z < 40.0 {
            z += 0.5;
        }
        let images = ((z * sigma2.sqrt() + PI) / TAU).ceil() as i64 + 1;
        Ok(WrappedGaussian { sigma2, images })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn images(&self) -> i64 {
        self.images
    }

    pub fn pdf(&self, w: f64) -> f64 {
        let w = w - TAU * (w / TAU).round();
        if self.sigma2 > FOURIER_REGIME {
            let c1 = (-0.5 * self.sigma2).exp();
            let c2 = (-2.0 * self.sigma2).exp();
            return (1.0 + 2.0 * (c1 * w.cos() + c2 * (2.0 * w).cos())) / TAU;
        }
        let norm = 1.0 / (TAU * self.sigma2).sqrt();
        let g = |x: f64| (-0.5 * x * x / self.sigma2).exp();
        // paired images keep pdf(w) == pdf(-w) bit for bit
        let mut acc = 0.0;
        for i in (1..=self.images).rev() {
            let shift = TAU * i as f64;
            acc += g(w - shift) + g(w + shift);
        }
        norm * (acc + g(w))
    }
}

/// p_W(w; sigma2) = sum_i G(w - 2 pi i; 0, sigma2), truncated so the omitted
/// tail mass is below `tail_tol`.
pub fn wrapped_gaussian_pdf(w: f64, sigma2: f64, tail_tol: f64) -> Result<f64> {
    Ok(WrappedGaussian::new(sigma2, tail_tol)?.pdf(w))
}

/// Per-sample filtered phasor: the pulse-weighted average of
/// exp(j (theta(t) - theta_k)) over one receiver sample interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterFactor {
    pub value: Complex64,
}

/// Grid spacing a fine path must have: half a fine simulation step, so the
/// midpoint of every fine cell is a path node.
pub fn fine_path_dt(config: &ChannelConfig) -> f64 {
    0.5 * config.fine_step()
}

/// Number of path increments covering `n_samples` receiver samples.
pub fn fine_path_steps(config: &ChannelConfig, n_samples: usize) -> usize {
    2 * config.fine_per_sample() * n_samples
}

fn check_fine_path(path: &PhasePath, config: &ChannelConfig, n_samples: usize) -> Result<()> {
    config.validate()?;
    let want = fine_path_dt(config);
    if ((path.dt - want) / want).abs() > 1e-9 {
        return Err(Error::param(
            "path.dt",
            format!("expected half the fine step {want}, got {}", path.dt),
        ));
    }
    let need = fine_path_steps(config, n_samples);
    if path.len() < need {
        return Err(Error::Length(format!(
            "path has {} increments, {} receiver samples need {need}",
            path.len(),
            n_samples
        )));
    }
    Ok(())
}

/// Phase at the left edge of each receiver sample interval.
pub fn sample_phases(
    path: &PhasePath,
    config: &ChannelConfig,
    n_samples: usize,
) -> Result<Vec<f64>> {
    check_fine_path(path, config, n_samples)?;
    let stride = 2 * config.fine_per_sample();
    Ok((0..n_samples)
        .map(|k| path.cumulative[k * stride])
        .collect())
}

/// Filtered phasors F_k for the first `n_samples` receiver samples.
///
/// The path must be sampled every half fine step; `pulse_samples` holds the
/// pulse at the `l_sim` fine-cell midpoints of one symbol. Each F_k is a
/// midpoint Riemann average over the `l_sim / l` fine cells of its interval.
pub fn filter_factors_from_path(
    path: &PhasePath,
    config: &ChannelConfig,
    pulse_samples: &[f64],
    n_samples: usize,
) -> Result<Vec<FilterFactor>> {
    check_fine_path(path, config, n_samples)?;
    if pulse_samples.len() != config.l_sim {
        return Err(Error::Length(format!(
            "pulse has {} fine samples, expected l_sim = {}",
            pulse_samples.len(),
            config.l_sim
        )));
    }
    let m = config.fine_per_sample();
    let inv_m = 1.0 / m as f64;
    let mut out = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let base = 2 * m * k;
        let theta_k = path.cumulative[base];
        let pulse_offset = (k % config.l) * m;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            let phase = path.cumulative[base + 2 * i + 1] - theta_k;
            acc += Complex64::from_polar(pulse_samples[pulse_offset + i], phase);
        }
        out.push(FilterFactor { value: acc * inv_m });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive;
    use crate::rng;

    fn cfg(beta: f64, l: usize, l_sim: usize) -> ChannelConfig {
        ChannelConfig::new(beta, 1.0, l, l_sim, 1.0, 1.0).unwrap()
    }

    #[test]
    fn config_rejects_bad_oversampling() {
        assert!(ChannelConfig::new(0.1, 1.0, 3, 1024, 1.0, 1.0).is_err());
        assert!(ChannelConfig::new(0.1, 1.0, 0, 1024, 1.0, 1.0).is_err());
        assert!(ChannelConfig::new(-0.1, 1.0, 4, 1024, 1.0, 1.0).is_err());
        let c = cfg(0.25, 16, 1024);
        assert_eq!(c.delta() * c.l as f64, c.ts);
        assert!((c.snr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_linewidth_path_is_constant() {
        let mut r = rng::stream(1, 0);
        let path = sample_wiener_path(&cfg(0.0, 1, 1), 1000, 0.01, &mut r).unwrap();
        assert!(path.increments.iter().all(|&w| w == 0.0));
        assert!(path.cumulative.iter().all(|&c| c == path.cumulative[0]));
        assert!((-PI..PI).contains(&path.cumulative[0]));
    }

    #[test]
    fn path_rejects_bad_step() {
        let mut r = rng::stream(1, 0);
        assert!(sample_wiener_path(&cfg(0.1, 1, 1), 10, f64::NAN, &mut r).is_err());
        assert!(sample_wiener_path_from(-1.0, InitialPhase::Uniform, 10, 0.1, &mut r).is_err());
    }

    #[test]
    fn path_increments_match_cumulative() {
        let mut r = rng::stream(2, 0);
        let path = sample_wiener_path(&cfg(0.3, 1, 1), 10_000, 0.01, &mut r).unwrap();
        for k in 1..path.cumulative.len() {
            let d = path.cumulative[k] - path.cumulative[k - 1];
            assert!((d - path.increments[k - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn increment_variance_and_independence() {
        // 2 pi beta dt = 1
        let dt = 0.01;
        let beta = 1.0 / (TAU * dt);
        let n = 1_000_000;
        let mut r = rng::stream(3, 0);
        let path = sample_wiener_path(&cfg(beta, 1, 1), n, dt, &mut r).unwrap();
        let w = &path.increments;
        let var = w.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((0.99..=1.01).contains(&var), "variance {var}");
        let half = n / 2;
        let (a, b) = (&w[..half], &w[half..]);
        let r_ab = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
            / (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|x| x * x).sum::<f64>()).sqrt();
        assert!(r_ab.abs() < 0.01, "correlation {r_ab}");
    }

    #[test]
    fn awgn_moments() {
        let mut r = rng::stream(4, 0);
        assert!(sample_awgn(0, 1.0, &mut r).unwrap().is_empty());
        assert!(sample_awgn(5, 0.0, &mut r).is_err());
        let n = 1_000_000;
        let z = sample_awgn(n, 1.0, &mut r).unwrap();
        let mean: Complex64 = z.iter().sum::<Complex64>() / n as f64;
        let power = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        let pseudo: Complex64 = z.iter().map(|v| v * v).sum::<Complex64>() / n as f64;
        assert!(mean.norm() < 0.01);
        assert!((0.99..=1.01).contains(&power));
        assert!(pseudo.norm() < 0.01);
    }

    #[test]
    fn wrapped_gaussian_limits_and_symmetry() {
        assert!(wrapped_gaussian_pdf(0.3, 0.0, 1e-12).is_err());
        for w in [-3.0, -1.0, 0.0, 0.5, 2.9] {
            let v = wrapped_gaussian_pdf(w, 1e4, 1e-12).unwrap();
            assert!((v - 1.0 / TAU).abs() < 1e-6);
        }
        for s2 in [1e-4, 1e-2, 1.0, 10.0, 150.0] {
            let wg = WrappedGaussian::new(s2, 1e-12).unwrap();
            for w in [0.0, 0.1, 1.3, 3.0, 3.1, 7.0] {
                assert_eq!(wg.pdf(w), wg.pdf(-w));
                let p = wg.pdf(w);
                assert!(p >= 0.0);
                assert!((wg.pdf(w + TAU) - p).abs() <= 1e-12 * p.max(1e-300));
            }
        }
    }

    #[test]
    fn wrapped_gaussian_normalizes() {
        for s2 in [1e-4, 1e-2, 1.0, 10.0] {
            let wg = WrappedGaussian::new(s2, 1e-12).unwrap();
            let mass = integrate_adaptive(|w| wg.pdf(w), -PI, PI, 1e-13);
            assert!((mass - 1.0).abs() < 1e-9, "sigma2={s2} mass={mass}");
        }
    }

    #[test]
    fn filter_factor_is_one_without_phase_noise() {
        let c = cfg(0.0, 4, 64);
        let mut r = rng::stream(5, 0);
        let n = 12;
        let path =
            sample_wiener_path(&c, fine_path_steps(&c, n), fine_path_dt(&c), &mut r).unwrap();
        let g = vec![1.0; c.l_sim];
        let f = filter_factors_from_path(&path, &c, &g, n).unwrap();
        assert!(f.iter().all(|x| x.value == Complex64::new(1.0, 0.0)));
        assert!(filter_factors_from_path(&path, &c, &g, n + 1).is_err());
    }

    #[test]
    fn filter_factor_magnitude_bounded() {
        let c = cfg(2.0, 4, 256);
        let mut r = rng::stream(6, 0);
        let n = 400;
        let path =
            sample_wiener_path(&c, fine_path_steps(&c, n), fine_path_dt(&c), &mut r).unwrap();
        let f = filter_factors_from_path(&path, &c, &vec![1.0; c.l_sim], n).unwrap();
        assert!(f.iter().all(|x| x.value.norm() <= 1.0 + 1e-12));
    }
}
