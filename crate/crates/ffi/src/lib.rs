//! C interface to impulsekit.
//!
//! Every fallible entry point returns an [`ImpStatus`] and writes its result
//! through an out-pointer. On failure a message is available from
//! [`imp_last_error`] on the same thread until the next failing call.
//! Handles returned through `**out` are owned by the caller and must be
//! released with the matching `*_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use impulsekit::discounting::{self, ChoiceTrial, DiscountError, ModelVariant};
use impulsekit::io::{parse_session, serialize_session, ParseError, ParseOptions};
use impulsekit::metrics::{self, MetricsError, MetricsOptions, OmissionPolicy, QuantileRule, SsrtOptions, StopOutcome};
use impulsekit::session::{Choice, SessionLog, RESPONSE_CAP_MS};
use impulsekit::stats::{self, StatsError};
use impulsekit::trajectory::{AccelerationMode, FeatureError, Point, PointerSample, Trajectory, TrajectoryError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed or schema-violating session JSON.
    Parse = 3,
    /// Input is valid but the quantity is undefined for it.
    Degenerate = 4,
    IndexOutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpAcceleration {
    TimeNormalized = 0,
    PerStep = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpVariant {
    SoftmaxHyperbolic = 0,
    LiteralExponent = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpSample {
    pub t_ms: f64,
    pub x: f64,
    pub y: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImpFeatures {
    pub total_distance: f64,
    pub max_velocity: f64,
    pub max_acceleration: f64,
    /// NaN when `has_auc` is false.
    pub auc: f64,
    pub has_auc: bool,
    /// NaN when `has_stopping_distance` is false.
    pub stopping_distance: f64,
    pub has_stopping_distance: bool,
    pub chord_fallback: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpSsrtOptions {
    /// Omitted go trials enter the distribution at `cap_ms` instead of being dropped.
    pub assign_max: bool,
    /// Interpolated quantile instead of the n-th order statistic.
    pub interpolate: bool,
    pub cap_ms: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImpSsrt {
    pub ssrt: f64,
    pub quantile_rt: f64,
    pub mean_ssd: f64,
    pub p_respond: f64,
    pub n_go_used: usize,
    pub n_stop: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpChoice {
    pub amount_ss: f64,
    pub delay_ss: f64,
    pub amount_ll: f64,
    pub delay_ll: f64,
    pub chose_larger_later: bool,
    pub is_control: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImpDiscountFit {
    pub k: f64,
    pub beta: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub at_bound: bool,
    pub degenerate_choices: bool,
    pub n_trials: usize,
}

/// Opaque validated cursor path.
pub struct ImpTrajectory(Trajectory);

/// Opaque parsed session.
pub struct ImpSession {
    log: SessionLog,
    subject_id: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ImpStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(ImpStatus::NullPointer, format!("{what} is null"))
    }

    fn arg(msg: impl Into<String>) -> Self {
        Failure(ImpStatus::InvalidArgument, msg.into())
    }
}

impl From<TrajectoryError> for Failure {
    fn from(e: TrajectoryError) -> Self {
        Failure::arg(e.to_string())
    }
}

impl From<FeatureError> for Failure {
    fn from(e: FeatureError) -> Self {
        let status = match e {
            FeatureError::DegenerateChord => ImpStatus::Degenerate,
            _ => ImpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        let status = match e {
            MetricsError::DegenerateStopRate(_) => ImpStatus::Degenerate,
            _ => ImpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<DiscountError> for Failure {
    fn from(e: DiscountError) -> Self {
        Failure::arg(e.to_string())
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        Failure::arg(e.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure(ImpStatus::Parse, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ImpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ImpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            ImpStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn imp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn imp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn imp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a trajectory from `n` samples. A click target is used only when
/// `has_target` is true.
#[no_mangle]
pub unsafe extern "C" fn imp_trajectory_new(
    samples: *const ImpSample,
    n: usize,
    start_x: f64,
    start_y: f64,
    has_target: bool,
    target_x: f64,
    target_y: f64,
    out_traj: *mut *mut ImpTrajectory,
) -> ImpStatus {
    guard(|| {
        let slot = out(out_traj, "out_traj")?;
        *slot = ptr::null_mut();
        let samples = input(samples, n, "samples")?
            .iter()
            .map(|s| PointerSample { t: s.t_ms, x: s.x, y: s.y })
            .collect();
        let target = has_target.then(|| Point::new(target_x, target_y));
        let traj = Trajectory::with_endpoints(samples, Point::new(start_x, start_y), target)?;
        *slot = Box::into_raw(Box::new(ImpTrajectory(traj)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn imp_trajectory_free(traj: *mut ImpTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn imp_trajectory_len(traj: *const ImpTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// All five movement features. `stop_onset_ms` is used only when
/// `has_stop_onset` is true.
#[no_mangle]
pub unsafe extern "C" fn imp_trajectory_features(
    traj: *const ImpTrajectory,
    has_stop_onset: bool,
    stop_onset_ms: f64,
    mode: ImpAcceleration,
    out_features: *mut ImpFeatures,
) -> ImpStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| Failure::null("traj"))?;
        let slot = out(out_features, "out_features")?;
        let mode = match mode {
            ImpAcceleration::TimeNormalized => AccelerationMode::TimeNormalized,
            ImpAcceleration::PerStep => AccelerationMode::PerStep,
        };
        let f = traj.0.features(has_stop_onset.then_some(stop_onset_ms), mode)?;
        *slot = ImpFeatures {
            total_distance: f.total_distance,
            max_velocity: f.max_velocity,
            max_acceleration: f.max_acceleration,
            auc: f.auc.unwrap_or(f64::NAN),
            has_auc: f.auc.is_some(),
            stopping_distance: f.stopping_distance.unwrap_or(f64::NAN),
            has_stopping_distance: f.stopping_distance.is_some(),
            chord_fallback: f.chord_fallback,
        };
        Ok(())
    })
}

/// Exclude omissions, n-th order statistic, 3000 ms cap.
#[no_mangle]
pub extern "C" fn imp_ssrt_options_default() -> ImpSsrtOptions {
    ImpSsrtOptions { assign_max: false, interpolate: false, cap_ms: RESPONSE_CAP_MS }
}

/// SSRT by the integration method. `go_rts` holds one RT per go trial with
/// NaN marking an omission; `ssd_ms[i]` and `responded[i]` describe stop trial i.
#[no_mangle]
pub unsafe extern "C" fn imp_ssrt_integration(
    go_rts: *const f64,
    n_go: usize,
    ssd_ms: *const f64,
    responded: *const bool,
    n_stop: usize,
    opts: ImpSsrtOptions,
    out_ssrt: *mut ImpSsrt,
) -> ImpStatus {
    guard(|| {
        let slot = out(out_ssrt, "out_ssrt")?;
        let go: Vec<Option<f64>> =
            input(go_rts, n_go, "go_rts")?.iter().map(|&rt| (!rt.is_nan()).then_some(rt)).collect();
        let ssd = input(ssd_ms, n_stop, "ssd_ms")?;
        let resp = input(responded, n_stop, "responded")?;
        let stops: Vec<StopOutcome> =
            ssd.iter().zip(resp).map(|(&ssd_ms, &responded)| StopOutcome { ssd_ms, responded }).collect();
        let opts = SsrtOptions {
            omission: if opts.assign_max { OmissionPolicy::AssignMax } else { OmissionPolicy::Exclude },
            quantile: if opts.interpolate { QuantileRule::Interpolated } else { QuantileRule::Nth },
            cap_ms: opts.cap_ms,
        };
        let e = metrics::ssrt_integration(&go, &stops, opts)?;
        *slot = ImpSsrt {
            ssrt: e.ssrt,
            quantile_rt: e.quantile_rt,
            mean_ssd: e.mean_ssd,
            p_respond: e.p_respond,
            n_go_used: e.n_go_used,
            n_stop: e.n_stop,
        };
        Ok(())
    })
}

/// Rank-based inverse normal transform of `n` values into `out_values`
/// (which may alias `values`).
#[no_mangle]
pub unsafe extern "C" fn imp_rank_inverse_normal(values: *const f64, n: usize, out_values: *mut f64) -> ImpStatus {
    guard(|| {
        if n > 0 && out_values.is_null() {
            return Err(Failure::null("out_values"));
        }
        let z = stats::rank_inverse_normal(&input(values, n, "values")?.to_vec())?;
        if n > 0 {
            slice::from_raw_parts_mut(out_values, n).copy_from_slice(&z);
        }
        Ok(())
    })
}

fn variant(v: ImpVariant) -> ModelVariant {
    match v {
        ImpVariant::SoftmaxHyperbolic => ModelVariant::SoftmaxHyperbolic,
        ImpVariant::LiteralExponent => ModelVariant::LiteralExponent,
    }
}

fn choice_trial(c: &ImpChoice) -> ChoiceTrial {
    ChoiceTrial {
        amount_ss: c.amount_ss,
        delay_ss: c.delay_ss,
        amount_ll: c.amount_ll,
        delay_ll: c.delay_ll,
        chosen: if c.chose_larger_later { Choice::LargerLater } else { Choice::SoonerSmaller },
        is_control: c.is_control,
    }
}

/// Probability of choosing the larger-later option (the `chose_larger_later`
/// field is ignored).
#[no_mangle]
pub unsafe extern "C" fn imp_choice_probability(
    choice: *const ImpChoice,
    k: f64,
    beta: f64,
    model: ImpVariant,
    out_p: *mut f64,
) -> ImpStatus {
    guard(|| {
        let c = choice.as_ref().ok_or_else(|| Failure::null("choice"))?;
        let slot = out(out_p, "out_p")?;
        *slot = discounting::choice_probability(&choice_trial(c), k, beta, variant(model))?;
        Ok(())
    })
}

/// Maximum-likelihood fit of `k` and `beta`; control trials are skipped.
#[no_mangle]
pub unsafe extern "C" fn imp_fit_discounting(
    choices: *const ImpChoice,
    n: usize,
    model: ImpVariant,
    out_fit: *mut ImpDiscountFit,
) -> ImpStatus {
    guard(|| {
        let slot = out(out_fit, "out_fit")?;
        let trials: Vec<ChoiceTrial> = input(choices, n, "choices")?.iter().map(choice_trial).collect();
        let f = discounting::fit_discounting(&trials, variant(model))?;
        *slot = ImpDiscountFit {
            k: f.k,
            beta: f.beta,
            log_likelihood: f.log_likelihood,
            converged: f.converged,
            at_bound: f.at_bound,
            degenerate_choices: f.degenerate_choices,
            n_trials: f.n_trials,
        };
        Ok(())
    })
}

/// Parses one session JSON document (NUL-terminated UTF-8).
#[no_mangle]
pub unsafe extern "C" fn imp_session_parse(json: *const c_char, strict: bool, out_session: *mut *mut ImpSession) -> ImpStatus {
    guard(|| {
        let slot = out(out_session, "out_session")?;
        *slot = ptr::null_mut();
        if json.is_null() {
            return Err(Failure::null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Failure(ImpStatus::Parse, e.to_string()))?;
        let (log, _warnings) = parse_session(text, ParseOptions { strict })?;
        let subject_id = CString::new(log.subject_id.clone()).map_err(|e| Failure(ImpStatus::Parse, e.to_string()))?;
        *slot = Box::into_raw(Box::new(ImpSession { log, subject_id }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn imp_session_free(session: *mut ImpSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Borrowed subject id, valid while the session lives. NULL for NULL.
#[no_mangle]
pub unsafe extern "C" fn imp_session_subject_id(session: *const ImpSession) -> *const c_char {
    session.as_ref().map_or(ptr::null(), |s| s.subject_id.as_ptr())
}

/// Number of trials, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn imp_session_trial_count(session: *const ImpSession) -> usize {
    session.as_ref().map_or(0, |s| s.log.trials.len())
}

/// Copy of trial `index`'s cursor path as a new trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn imp_session_trajectory(
    session: *const ImpSession,
    index: usize,
    out_traj: *mut *mut ImpTrajectory,
) -> ImpStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| Failure::null("session"))?;
        let slot = out(out_traj, "out_traj")?;
        *slot = ptr::null_mut();
        let trial = s.log.trials.get(index).ok_or_else(|| {
            Failure(ImpStatus::IndexOutOfRange, format!("trial index {index} out of range (0..{})", s.log.trials.len()))
        })?;
        *slot = Box::into_raw(Box::new(ImpTrajectory(trial.trajectory.clone())));
        Ok(())
    })
}

/// Canonical compact JSON for the session. Free with [`imp_string_free`].
#[no_mangle]
pub unsafe extern "C" fn imp_session_to_json(session: *const ImpSession, out_json: *mut *mut c_char) -> ImpStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| Failure::null("session"))?;
        let slot = out(out_json, "out_json")?;
        *slot = into_c_string(serialize_session(&s.log))?;
        Ok(())
    })
}

/// Per-subject and per-condition summaries (default options) as a JSON
/// array. Free with [`imp_string_free`].
#[no_mangle]
pub unsafe extern "C" fn imp_session_summaries_json(session: *const ImpSession, out_json: *mut *mut c_char) -> ImpStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| Failure::null("session"))?;
        let slot = out(out_json, "out_json")?;
        let rows = metrics::summarize_session(&s.log, &MetricsOptions::default());
        let text = serde_json::to_string(&rows).map_err(|e| Failure::arg(e.to_string()))?;
        *slot = into_c_string(text)?;
        Ok(())
    })
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|e| Failure::arg(e.to_string()))
}
