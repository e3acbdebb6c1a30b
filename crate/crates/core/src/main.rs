use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phasenoise::dump::Dump;
use phasenoise::estimator::{estimate_rate_lb, estimate_rate_lb_mtr, RateOptions};
use phasenoise::experiment::{
    replay_rates, run_bounds, run_moments, run_sweep, simulate_dump, validate, Receiver, SweepSpec,
    Unit,
};

#[derive(Parser)]
#[command(
    name = "phasenoise",
    version,
    about = "Wiener phase-noise channel experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, conflicts_with = "nats")]
    bits: bool,
    #[arg(long)]
    nats: bool,
    /// fixed, sqrt or cbrt
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one data set and write a binary dump
    Simulate(Common),
    /// Rate lower bound at the first grid point
    RateLb {
        #[command(flatten)]
        common: Common,
        /// Decode a recorded dump instead of simulating
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Closed-form filter-factor moments
    Moments(Common),
    /// Analytic high-SNR bounds
    Bounds(Common),
    /// Rate estimates over the full grid
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Append per-row wall time (output is no longer reproducible)
        #[arg(long)]
        timing: bool,
    },
    /// Run the numerical self-checks
    Validate,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

impl Common {
    fn unit(&self) -> Unit {
        if self.nats {
            Unit::Nats
        } else {
            Unit::Bits
        }
    }

    fn spec(&self) -> AnyResult<SweepSpec> {
        let file = self.config.as_ref().map(fs::read_to_string).transpose()?;
        let mut overrides = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(seed) = self.seed {
            overrides.push(("seed".into(), seed.to_string()));
        }
        if let Some(s) = &self.schedule {
            let v = if s == "fixed" { "none" } else { s.as_str() };
            overrides.push(("schedule".into(), v.into()));
        }
        let spec = SweepSpec::from_sources(file.as_deref(), &overrides)?;
        let correction = spec.build_pulse()?.energy_correction();
        if (correction - 1.0).abs() > 0.01 {
            eprintln!("warning: custom pulse rescaled by {correction:.4} to unit energy");
        }
        Ok(spec)
    }

    fn sink(&self) -> AnyResult<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn rate_lb(common: &Common, replay: Option<&PathBuf>) -> AnyResult<()> {
    let spec = common.spec()?;
    let unit = common.unit();
    let mut out = common.sink()?;
    if let Some(path) = replay {
        let dump = Dump::read(io::BufReader::new(File::open(path)?))?;
        writeln!(out, "s,rate,std_error,unit")?;
        for (s, est) in replay_rates(&dump, &spec)? {
            writeln!(
                out,
                "{s},{:.6},{:.6},{}",
                unit.from_bits(est.rate_bits),
                unit.from_bits(est.std_error),
                unit.name()
            )?;
        }
        return Ok(());
    }
    let config = spec.channel(spec.snr_db[0], spec.l[0])?;
    let opts = RateOptions {
        states: spec.states[0],
        nsymb: spec.nsymb,
        replicas: spec.replicas,
        seed: spec.seed,
        batches: spec.batches,
        ..Default::default()
    };
    let c = spec.build_constellation()?;
    let p = spec.build_pulse()?;
    let run = || match spec.model {
        Receiver::Model(m) => estimate_rate_lb(m, &c, &p, &config, &opts),
        Receiver::Mtr => estimate_rate_lb_mtr(&c, &p, &config, spec.n_train, &opts),
    };
    let est = match common.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()?
            .install(run)?,
        None => run()?,
    };
    writeln!(
        out,
        "{} {} snr_db={} L={} S={}: {:.4} +- {:.4} {}",
        spec.model,
        spec.constellation,
        spec.snr_db[0],
        spec.l[0],
        spec.states[0],
        unit.from_bits(est.rate_bits),
        unit.from_bits(est.std_error),
        unit.name()
    )?;
    Ok(())
}

fn run(cli: Cli) -> AnyResult<bool> {
    match cli.command {
        Command::Simulate(common) => {
            let spec = common.spec()?;
            let dump = simulate_dump(&spec)?;
            match &common.out {
                Some(p) => dump.write(BufWriter::new(File::create(p)?))?,
                None => dump.write(BufWriter::new(io::stdout().lock()))?,
            }
            eprintln!(
                "{} records, config_hash={:016x}",
                dump.x.len(),
                dump.config_hash
            );
        }
        Command::RateLb { common, replay } => rate_lb(&common, replay.as_ref())?,
        Command::Moments(common) => run_moments(&common.spec()?, &mut common.sink()?)?,
        Command::Bounds(common) => run_bounds(&common.spec()?, common.unit(), &mut common.sink()?)?,
        Command::Sweep { common, timing } => run_sweep(
            &common.spec()?,
            common.unit(),
            common.workers,
            timing,
            &mut common.sink()?,
        )?,
        Command::Validate => {
            let mut ok = true;
            for c in validate() {
                println!(
                    "{} {} (worst margin {:.3e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst_margin
                );
                ok &= c.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
