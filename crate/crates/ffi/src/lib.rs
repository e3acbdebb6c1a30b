//! C ABI over the phasenoise crate.
//!
//! Objects are opaque handles created by `pn_*_new` and released by the
//! matching `pn_*_free`. Every fallible call returns a [`PnStatus`]; on
//! failure the message is kept per thread and read with
//! [`pn_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use phasenoise::bounds::{amplitude_lb_finite, phase_lb_finite, AlphaChoice};
use phasenoise::estimator::{estimate_rate_lb, estimate_rate_lb_mtr, RateOptions};
use phasenoise::signal::draw_iud_symbols;
use phasenoise::{
    closed_form_moments, simulate, ChannelConfig, Constellation, Error, ModelKind, Pulse,
};

pub const PN_MODEL_MULTISAMPLE_TRUE: u32 = 0;
pub const PN_MODEL_MULTISAMPLE_APPROX: u32 = 1;
pub const PN_MODEL_MATCHED_FILTER: u32 = 2;
pub const PN_MODEL_BAUD_RATE: u32 = 3;
/// Symbol-rate receiver with a trained phase law (rate estimation only).
pub const PN_MODEL_MTR: u32 = 4;

pub const PN_ALPHA_SNR_DELTA: u32 = 0;
pub const PN_ALPHA_OPTIMAL: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Length = 3,
    Domain = 4,
    Numerical = 5,
    Resource = 6,
    Config = 7,
    Io = 8,
    Format = 9,
    Panic = 10,
}

/// Channel parameters, transmit pulse and constellation.
pub struct PnChannel {
    config: ChannelConfig,
    pulse: Pulse,
    constellation: Constellation,
}

/// One simulated sequence.
pub struct PnObservation {
    samples_per_symbol: usize,
    x: Vec<[f64; 2]>,
    y: Vec<[f64; 2]>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PnMoments {
    pub ef1: f64,
    pub ef1_sq: f64,
    pub ef1_4: f64,
    pub var_f1sq: f64,
    pub eg: f64,
    pub var_g: f64,
    pub ms_g_minus_1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PnRate {
    pub rate_bits: f64,
    pub std_error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PnStatus {
    match e {
        Error::Parameter { .. } => PnStatus::InvalidArgument,
        Error::Length(_) => PnStatus::Length,
        Error::Domain(_) => PnStatus::Domain,
        Error::Numerical(_) => PnStatus::Numerical,
        Error::Resource(_) => PnStatus::Resource,
        Error::Config(_) => PnStatus::Config,
        Error::Io(_) => PnStatus::Io,
        Error::Format(_) => PnStatus::Format,
    }
}

struct Fail(PnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PnStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PnStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(PnStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> Fail {
    Fail(PnStatus::InvalidArgument, msg)
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn model_of(code: u32) -> Result<Option<ModelKind>, Fail> {
    Ok(Some(match code {
        PN_MODEL_MULTISAMPLE_TRUE => ModelKind::MultisampleTrue,
        PN_MODEL_MULTISAMPLE_APPROX => ModelKind::MultisampleApprox,
        PN_MODEL_MATCHED_FILTER => ModelKind::MatchedFilter,
        PN_MODEL_BAUD_RATE => ModelKind::BaudRate,
        PN_MODEL_MTR => return Ok(None),
        _ => return Err(invalid(format!("unknown model code {code}"))),
    }))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `cap`). Returns the full message length, 0 if
/// there is none.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pn_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a channel with unit symbol time and unit power.
///
/// `fhwhm_ts` is the half-width linewidth times Ts. `pulse` is "square" or
/// "cos2"; `constellation` is "qpsk", "16qam" or "<M>psk".
///
/// # Safety
/// `pulse` and `constellation` must be NUL-terminated strings; `out` must be
/// a valid pointer. On success `*out` owns a handle for [`pn_channel_free`].
#[no_mangle]
pub unsafe extern "C" fn pn_channel_new(
    fhwhm_ts: f64,
    snr_db: f64,
    l: usize,
    l_sim: usize,
    pulse: *const c_char,
    constellation: *const c_char,
    out: *mut *mut PnChannel,
) -> PnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let config = ChannelConfig::normalized(fhwhm_ts, snr_db, l, l_sim)?;
        let pulse = Pulse::by_name(c_str(pulse, "pulse")?, config.ts)?;
        let constellation = Constellation::by_name(c_str(constellation, "constellation")?)?;
        *out = Box::into_raw(Box::new(PnChannel {
            config,
            pulse,
            constellation,
        }));
        Ok(())
    })
}

/// # Safety
/// `ch` must be null or a handle from [`pn_channel_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pn_channel_free(ch: *mut PnChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Rate lower bound in bits per symbol, averaged over `replicas`.
///
/// # Safety
/// `ch` must be a live channel handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pn_estimate_rate(
    ch: *const PnChannel,
    model: u32,
    states: usize,
    nsymb: usize,
    replicas: usize,
    seed: u64,
    out: *mut PnRate,
) -> PnStatus {
    guard(|| {
        let ch = ch.as_ref().ok_or_else(|| null("channel"))?;
        let out = out_ref(out, "out")?;
        let opts = RateOptions {
            states,
            nsymb,
            replicas,
            seed,
            ..Default::default()
        };
        let est = match model_of(model)? {
            Some(m) => estimate_rate_lb(m, &ch.constellation, &ch.pulse, &ch.config, &opts)?,
            None => estimate_rate_lb_mtr(
                &ch.constellation,
                &ch.pulse,
                &ch.config,
                phasenoise::estimator::mtr::MIN_TRAINING,
                &opts,
            )?,
        };
        *out = PnRate {
            rate_bits: est.rate_bits,
            std_error: est.std_error,
        };
        Ok(())
    })
}

/// Simulates `nsymb` i.u.d. symbols through `model`.
///
/// # Safety
/// `ch` must be a live channel handle and `out` a valid pointer. On success
/// `*out` owns a handle for [`pn_observation_free`].
#[no_mangle]
pub unsafe extern "C" fn pn_simulate(
    ch: *const PnChannel,
    model: u32,
    nsymb: usize,
    seed: u64,
    out: *mut *mut PnObservation,
) -> PnStatus {
    guard(|| {
        let ch = ch.as_ref().ok_or_else(|| null("channel"))?;
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let model = model_of(model)?
            .ok_or_else(|| invalid("the MTR receiver has no channel of its own".into()))?;
        let mut rng = phasenoise::rng::stream(seed, 0);
        let symbols = draw_iud_symbols(&ch.constellation, nsymb, ch.config.p, &mut rng)?;
        let obs = simulate(model, &symbols, &ch.pulse, &ch.config, &mut rng)?;
        let x = symbols
            .iter()
            .flat_map(|s| std::iter::repeat_n([s.re, s.im], obs.l))
            .collect();
        let y = obs.y.iter().map(|v| [v.re, v.im]).collect();
        *out = Box::into_raw(Box::new(PnObservation {
            samples_per_symbol: obs.l,
            x,
            y,
        }));
        Ok(())
    })
}

/// Number of receiver samples, 0 for a null handle.
///
/// # Safety
/// `obs` must be null or a live observation handle.
#[no_mangle]
pub unsafe extern "C" fn pn_observation_len(obs: *const PnObservation) -> usize {
    obs.as_ref().map_or(0, |o| o.y.len())
}

/// Receiver samples per symbol, 0 for a null handle.
///
/// # Safety
/// `obs` must be null or a live observation handle.
#[no_mangle]
pub unsafe extern "C" fn pn_observation_samples_per_symbol(obs: *const PnObservation) -> usize {
    obs.as_ref().map_or(0, |o| o.samples_per_symbol)
}

/// Copies inputs and outputs as interleaved (re, im) pairs; each buffer must
/// hold `2 * len` doubles. Either buffer may be null to skip it.
///
/// # Safety
/// `obs` must be a live observation handle; non-null buffers must have room
/// for `2 * len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pn_observation_copy(
    obs: *const PnObservation,
    x: *mut f64,
    y: *mut f64,
    len: usize,
) -> PnStatus {
    guard(|| {
        let obs = obs.as_ref().ok_or_else(|| null("observation"))?;
        if len != obs.y.len() {
            return Err(Fail(
                PnStatus::Length,
                format!(
                    "buffer holds {len} samples, observation has {}",
                    obs.y.len()
                ),
            ));
        }
        if !x.is_null() {
            ptr::copy_nonoverlapping(obs.x.as_ptr().cast::<f64>(), x, 2 * len);
        }
        if !y.is_null() {
            ptr::copy_nonoverlapping(obs.y.as_ptr().cast::<f64>(), y, 2 * len);
        }
        Ok(())
    })
}

/// # Safety
/// `obs` must be null or a handle from [`pn_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pn_observation_free(obs: *mut PnObservation) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// Closed-form filter-factor moments with L = 1 / delta.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pn_moments(beta: f64, delta: f64, out: *mut PnMoments) -> PnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let m = closed_form_moments(beta, delta)?;
        *out = PnMoments {
            ef1: m.ef1,
            ef1_sq: m.ef1_sq,
            ef1_4: m.ef1_4,
            var_f1sq: m.var_f1sq,
            eg: m.eg,
            var_g: m.var_g,
            ms_g_minus_1: m.ms_g_minus_1,
        };
        Ok(())
    })
}

/// Amplitude-modulation lower bound in nats.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pn_amplitude_lb(
    snr: f64,
    delta: f64,
    beta: f64,
    out: *mut f64,
) -> PnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = amplitude_lb_finite(snr, delta, beta)?.value_nats;
        Ok(())
    })
}

/// Phase-modulation lower bound in nats; `PnStatus::Domain` when
/// snr * delta <= 2.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pn_phase_lb(
    snr: f64,
    delta: f64,
    beta: f64,
    alpha: u32,
    out: *mut f64,
) -> PnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let alpha = match alpha {
            PN_ALPHA_SNR_DELTA => AlphaChoice::SnrDelta,
            PN_ALPHA_OPTIMAL => AlphaChoice::Optimal,
            _ => return Err(invalid(format!("unknown alpha code {alpha}"))),
        };
        *out = phase_lb_finite(snr, delta, beta, alpha)?.value_nats;
        Ok(())
    })
}
