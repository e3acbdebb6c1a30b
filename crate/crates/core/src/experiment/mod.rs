//! Sweep orchestration and CSV emission.
//!
//! Every CSV starts with `# config_hash=<16 hex digits> seed=<seed>`, then the
//! canonical config as `# key=value` lines, then one column header line.
//!
//! Sweep columns: `snr_db,l,s,replica,rate,std_error,unit,seed` plus
//! `wall_s` when timing is requested. Bounds columns:
//! `snr_db,l,amplitude_lb,amplitude_excess,phase_lb,phase_excess,unit`, where
//! the excess columns subtract 1/2 ln SNR and 1/4 ln SNR in the chosen unit.
//! A phase bound outside its domain is an empty field.

pub mod config;

use std::f64::consts::LN_2;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{
    amplitude_asymptote, amplitude_lb_finite, amplitude_lb_finite_centered, cubicroot_asymptote,
    phase_asymptote, phase_lb_finite, phase_optimal_asymptote, AlphaChoice, Schedule,
};
use crate::dump::{config_hash, Dump};
use crate::error::{Error, Result};
use crate::estimator::{
    aux_for_model, build_quantizer, build_transitions, estimate_replica, estimate_replica_mtr,
    rate_from_data, Propagator, RateOptions, ReplicaEstimate, Workspace,
};
use crate::lemmas::{run_all, LemmaCheck};
use crate::moments::{closed_form_moments, moment_limits};
use crate::rng;

pub use config::{parse_pairs, Receiver, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Unit {
    #[default]
    Bits,
    Nats,
}

impl Unit {
    pub fn name(&self) -> &'static str {
        match self {
            Unit::Bits => "bits",
            Unit::Nats => "nats",
        }
    }

    pub fn from_bits(&self, v: f64) -> f64 {
        match self {
            Unit::Bits => v,
            Unit::Nats => v * LN_2,
        }
    }

    pub fn from_nats(&self, v: f64) -> f64 {
        match self {
            Unit::Bits => v / LN_2,
            Unit::Nats => v,
        }
    }
}

pub fn write_header<W: Write>(out: &mut W, spec: &SweepSpec, columns: &str) -> Result<()> {
    let text = spec.to_text();
    writeln!(
        out,
        "# config_hash={:016x} seed={}",
        config_hash(&text),
        spec.seed
    )?;
    for line in text.lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{columns}")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub l: usize,
    pub s: usize,
    pub estimate: ReplicaEstimate,
    pub wall_s: f64,
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Resource(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Refuses grids whose largest cell exceeds `spec.max_work`.
pub fn check_resources(spec: &SweepSpec) -> Result<()> {
    let s = *spec.states.iter().max().unwrap_or(&1) as f64;
    let l = spec
        .l
        .iter()
        .map(|&l| spec.model.samples_per_symbol(l))
        .max()
        .unwrap_or(1) as f64;
    let work = s * spec.nsymb as f64 * l;
    if work > spec.max_work {
        return Err(Error::Resource(format!(
            "S * nsymb * L = {work:.3e} exceeds max_work = {:.3e}",
            spec.max_work
        )));
    }
    Ok(())
}

/// Rate estimates for every (snr_db, L, S, replica) cell, in grid order.
pub fn sweep_rows(spec: &SweepSpec, workers: Option<usize>) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    check_resources(spec)?;
    let constellation = spec.build_constellation()?;
    let pulse = spec.build_pulse()?;
    let mut cells = Vec::new();
    for &snr in &spec.snr_db {
        for &l in &spec.l {
            for &s in &spec.states {
                for r in 0..spec.replicas {
                    cells.push((snr, l, s, r));
                }
            }
        }
    }
    let rows = with_workers(workers, || {
        cells
            .par_iter()
            .map(|&(snr_db, l, s, r)| {
                let start = Instant::now();
                let config = spec.channel(snr_db, l)?;
                let opts = RateOptions {
                    states: s,
                    nsymb: spec.nsymb,
                    replicas: 1,
                    seed: spec.seed,
                    batches: spec.batches,
                    ..Default::default()
                };
                let estimate = match spec.model {
                    Receiver::Model(m) => {
                        estimate_replica(m, &constellation, &pulse, &config, &opts, r)?
                    }
                    Receiver::Mtr => estimate_replica_mtr(
                        &constellation,
                        &pulse,
                        &config,
                        spec.n_train,
                        &opts,
                        r,
                    )?,
                };
                Ok(SweepRow {
                    snr_db,
                    l,
                    s,
                    estimate,
                    wall_s: start.elapsed().as_secs_f64(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    rows
}

pub fn run_sweep<W: Write>(
    spec: &SweepSpec,
    unit: Unit,
    workers: Option<usize>,
    timing: bool,
    out: &mut W,
) -> Result<()> {
    let rows = sweep_rows(spec, workers)?;
    let mut columns = "snr_db,l,s,replica,rate,std_error,unit,seed".to_string();
    if timing {
        columns.push_str(",wall_s");
    }
    write_header(out, spec, &columns)?;
    for row in rows {
        write!(
            out,
            "{},{},{},{},{:.6},{:.6},{},{}",
            row.snr_db,
            row.l,
            row.s,
            row.estimate.replica,
            unit.from_bits(row.estimate.rate_bits),
            unit.from_bits(row.estimate.std_error),
            unit.name(),
            spec.seed
        )?;
        if timing {
            write!(out, ",{:.3}", row.wall_s)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub snr_db: f64,
    pub l: usize,
    /// All in nats.
    pub amplitude_lb: f64,
    pub phase_lb: Option<f64>,
}

/// Analytic bounds over the SNR grid; L follows the schedule, or each L of
/// the grid when there is none.
pub fn bound_rows(spec: &SweepSpec) -> Result<Vec<BoundRow>> {
    spec.validate()?;
    let beta = spec.beta();
    let mut rows = Vec::new();
    for &snr_db in &spec.snr_db {
        let snr = 10f64.powf(snr_db / 10.0);
        let ls = match spec.schedule {
            Some(s) => vec![s.samples(snr, beta)],
            None => spec.l.clone(),
        };
        for l in ls {
            let delta = 1.0 / l as f64;
            let amp = match spec.schedule {
                Some(Schedule::Cbrt) => amplitude_lb_finite_centered(snr, delta, beta)?,
                _ => amplitude_lb_finite(snr, delta, beta)?,
            };
            let phase = match phase_lb_finite(snr, delta, beta, spec.alpha) {
                Ok(r) => Some(r.value_nats),
                Err(Error::Domain(_)) => None,
                Err(e) => return Err(e),
            };
            rows.push(BoundRow {
                snr_db,
                l,
                amplitude_lb: amp.value_nats,
                phase_lb: phase,
            });
        }
    }
    Ok(rows)
}

pub fn run_bounds<W: Write>(spec: &SweepSpec, unit: Unit, out: &mut W) -> Result<()> {
    let rows = bound_rows(spec)?;
    let beta = spec.beta();
    write_header(
        out,
        spec,
        "snr_db,l,amplitude_lb,amplitude_excess,phase_lb,phase_excess,unit",
    )?;
    if beta > 0.0 {
        let (amp, phase) = match spec.schedule {
            Some(Schedule::Sqrt) => (
                Some(amplitude_asymptote(beta)?),
                Some(match spec.alpha {
                    AlphaChoice::SnrDelta => phase_asymptote(beta)?,
                    AlphaChoice::Optimal => phase_optimal_asymptote(beta)?,
                }),
            ),
            Some(Schedule::Cbrt) => (Some(cubicroot_asymptote(beta)?), None),
            _ => (None, None),
        };
        if let Some(a) = amp {
            writeln!(out, "# amplitude_asymptote={:.9}", unit.from_nats(a))?;
        }
        if let Some(p) = phase {
            writeln!(out, "# phase_asymptote={:.9}", unit.from_nats(p))?;
        }
    }
    for row in rows {
        let ln_snr = row.snr_db / 10.0 * std::f64::consts::LN_10;
        let (phase, phase_excess) = match row.phase_lb {
            Some(p) => (
                format!("{:.9}", unit.from_nats(p)),
                format!("{:.9}", unit.from_nats(p - 0.25 * ln_snr)),
            ),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{:.9},{:.9},{},{},{}",
            row.snr_db,
            row.l,
            unit.from_nats(row.amplitude_lb),
            unit.from_nats(row.amplitude_lb - 0.5 * ln_snr),
            phase,
            phase_excess,
            unit.name()
        )?;
    }
    Ok(())
}

/// Closed-form filter-factor moments at Delta = 1/L for each L of the grid.
pub fn run_moments<W: Write>(spec: &SweepSpec, out: &mut W) -> Result<()> {
    write_header(
        out,
        spec,
        "l,delta,ef1,ef1_sq,ef1_4,var_f1sq,eg,var_g,ms_g_minus_1",
    )?;
    for &l in &spec.l {
        let delta = 1.0 / l as f64;
        let m = closed_form_moments(spec.beta(), delta)?;
        writeln!(
            out,
            "{l},{delta},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            m.ef1, m.ef1_sq, m.ef1_4, m.var_f1sq, m.eg, m.var_g, m.ms_g_minus_1
        )?;
    }
    Ok(())
}

/// One simulated data set at the first grid point, ready for replay.
pub fn simulate_dump(spec: &SweepSpec) -> Result<Dump> {
    let Receiver::Model(model) = spec.model else {
        return Err(Error::Config(
            "simulate needs a channel model, not mtr".into(),
        ));
    };
    let config = spec.channel(spec.snr_db[0], spec.l[0])?;
    let constellation = spec.build_constellation()?;
    let pulse = spec.build_pulse()?;
    let mut rng = rng::stream(spec.seed, rng::stream_index(0, 0));
    let symbols = crate::signal::draw_iud_symbols(&constellation, spec.nsymb, config.p, &mut rng)?;
    let obs = crate::channel::simulate(model, &symbols, &pulse, &config, &mut rng)?;
    let x: Vec<Complex64> = symbols
        .iter()
        .flat_map(|&s| std::iter::repeat_n(s, obs.l))
        .collect();
    Dump::new(spec.to_text(), x, obs.y)
}

/// Rate estimate of recorded data decoded with the auxiliary channel of
/// `spec` at its first grid point, one value per S in the grid.
pub fn replay_rates(dump: &Dump, spec: &SweepSpec) -> Result<Vec<(usize, ReplicaEstimate)>> {
    let Receiver::Model(model) = spec.model else {
        return Err(Error::Config(
            "replay needs a channel model, not mtr".into(),
        ));
    };
    let config = spec.channel(spec.snr_db[0], spec.l[0])?;
    let constellation = spec.build_constellation()?;
    let pulse = spec.build_pulse()?;
    let l = spec.model.samples_per_symbol(config.l);
    if dump.x.is_empty() || !dump.x.len().is_multiple_of(l) {
        return Err(Error::Length(format!(
            "{} records do not split into symbols of {l} samples",
            dump.x.len()
        )));
    }
    let symbols: Vec<Complex64> = dump.x.iter().step_by(l).copied().collect();
    spec.states
        .par_iter()
        .map(|&s| {
            let aux = aux_for_model(model, &constellation, &pulse, &config, s)?;
            Ok((s, rate_from_data(&symbols, &dump.y, &aux, spec.batches)?))
        })
        .collect()
}

fn fft_direct_check() -> LemmaCheck {
    let mut r = rng::stream(0x5eed, 0);
    let mut worst: f64 = 0.0;
    for s in [16, 64] {
        let t = build_transitions(&build_quantizer(s).unwrap(), 0.1).unwrap();
        let (d, f) = (Propagator::direct(&t), Propagator::fft(&t));
        let mut ws = Workspace::new();
        let (mut a, mut b) = (vec![0.0; s], vec![0.0; s]);
        for _ in 0..100 {
            let rho: Vec<f64> = (0..s).map(|_| r.random::<f64>()).collect();
            d.apply(&rho, &mut a, &mut ws);
            f.apply(&rho, &mut b, &mut ws);
            worst = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(worst, f64::max);
        }
    }
    LemmaCheck {
        name: "fft-direct-duality",
        passed: worst < 1e-9,
        worst_margin: 1e-9 - worst,
    }
}

fn moment_limit_check() -> LemmaCheck {
    let beta = 0.25;
    let lim = moment_limits(beta).unwrap();
    let delta = 2f64.powi(-12);
    let m = closed_form_moments(beta, delta).unwrap();
    let rel = [
        m.var_g / delta.powi(3) / lim.var_g_over_delta3 - 1.0,
        (m.eg - 1.0).powi(2) / delta.powi(2) / lim.bias_sq_over_delta2 - 1.0,
    ];
    let worst = rel.iter().map(|v| v.abs()).fold(0.0, f64::max);
    LemmaCheck {
        name: "moment-limits",
        passed: worst < 0.01,
        worst_margin: 0.01 - worst,
    }
}

fn transition_rows_check() -> LemmaCheck {
    let mut worst: f64 = 0.0;
    for s in [3, 16, 128] {
        for var in [1e-4, 0.1, 10.0] {
            let t = build_transitions(&build_quantizer(s).unwrap(), var).unwrap();
            worst = worst.max((t.offsets().iter().sum::<f64>() - 1.0).abs());
        }
    }
    LemmaCheck {
        name: "transition-rows",
        passed: worst < 1e-12,
        worst_margin: 1e-12 - worst,
    }
}

/// Scalar-inequality checks plus quick numerical self-checks.
pub fn validate() -> Vec<LemmaCheck> {
    let mut checks = run_all();
    checks.push(fft_direct_check());
    checks.push(moment_limit_check());
    checks.push(transition_rows_check());
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepSpec {
        SweepSpec::from_sources(
            Some("snr_db=10\nl=2\nstates=8\nnsymb=60\nreplicas=3\nl_sim=8\nbatches=4\n"),
            &[],
        )
        .unwrap()
    }

    #[test]
    fn singleton_grid_gives_replica_rows() {
        let rows = sweep_rows(&small(), Some(2)).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(
            rows.iter().map(|r| r.estimate.replica).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn csv_is_deterministic() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_sweep(&small(), Unit::Bits, Some(1), false, &mut a).unwrap();
        run_sweep(&small(), Unit::Bits, Some(3), false, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("# config_hash="));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    }

    #[test]
    fn resource_guard() {
        let mut spec = small();
        spec.max_work = 100.0;
        assert!(matches!(sweep_rows(&spec, None), Err(Error::Resource(_))));
    }

    #[test]
    fn units_flip_bounds() {
        let spec = small();
        let mut bits = Vec::new();
        let mut nats = Vec::new();
        run_bounds(&spec, Unit::Bits, &mut bits).unwrap();
        run_bounds(&spec, Unit::Nats, &mut nats).unwrap();
        let last = |v: &[u8]| {
            let t = String::from_utf8(v.to_vec()).unwrap();
            let l = t.lines().last().unwrap().to_string();
            l.split(',').nth(2).unwrap().parse::<f64>().unwrap()
        };
        assert!((last(&bits) * LN_2 - last(&nats)).abs() < 1e-8);
    }

    #[test]
    fn replay_matches_direct_estimate() {
        let spec = small();
        let dump = simulate_dump(&spec).unwrap();
        let mut buf = Vec::new();
        dump.write(&mut buf).unwrap();
        let back = Dump::read(buf.as_slice()).unwrap();
        let a = replay_rates(&back, &spec).unwrap();
        let b = replay_rates(&dump, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a[0].1.rate_bits.is_finite());
    }

    #[test]
    fn self_checks_pass() {
        for c in validate() {
            assert!(c.passed, "{c:?}");
        }
    }
}
