//! C ABI over `ldpsq`.
//!
//! Every fallible function returns an [`LdpsqStatus`]; on failure the
//! message is available from [`ldpsq_last_error`] on the same thread.
//! Objects are opaque handles released with their `_free` function.
//! Strings returned through `char **` are released with [`ldpsq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ldpsq::domain::{classification_error, synthetic, Classifier, LabeledSource};
use ldpsq::experiment::ExperimentConfig;
use ldpsq::ldp::{ldp_batch_size, rr_randomizer, verify_randomizer_privacy, Backend};
use ldpsq::margin::{learn_halfspace, Hypothesis, LearnerConfig, Mode, OracleKind};
use ldpsq::sq::StatQuery;
use ldpsq::{seed, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdpsqStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, or an out-of-range enum value.
    InvalidArgument = 1,
    InvalidInput = 2,
    Evaluation = 3,
    Contract = 4,
    BudgetExceeded = 5,
    Protocol = 6,
    Sizing = 7,
    Precondition = 8,
    LearningFailure = 9,
    Solver = 10,
    Io = 11,
    Json = 12,
    Panic = 13,
}

impl From<&Error> for LdpsqStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => Self::InvalidInput,
            Error::Evaluation(_) => Self::Evaluation,
            Error::Contract(_) => Self::Contract,
            Error::BudgetExceeded { .. } | Error::QueryBudget { .. } => Self::BudgetExceeded,
            Error::Protocol(_) => Self::Protocol,
            Error::Sizing { .. } => Self::Sizing,
            Error::Precondition(_) => Self::Precondition,
            Error::LearningFailure(_) => Self::LearningFailure,
            Error::Solver(_) => Self::Solver,
            Error::Io(_) => Self::Io,
            Error::Json(_) | Error::Csv(_) => Self::Json,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(LdpsqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(LdpsqStatus::from(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Failure {
    Failure(LdpsqStatus::InvalidArgument, msg.to_string())
}

/// Runs `f`, converting errors and panics into a status plus the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LdpsqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LdpsqStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            LdpsqStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{name} is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid(&format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(&format!("{name} is null")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| invalid("string contains a nul byte"))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library and valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ldpsq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// A labeled finite source.
pub struct LdpsqSource(LabeledSource);

/// A learned halfspace hypothesis.
pub struct LdpsqHypothesis(Hypothesis);

/// Parses a source from its JSON form `{"dim", "support", "probs", "target"}`.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_source_from_json(json: *const c_char, out: *mut *mut LdpsqSource) -> LdpsqStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let src = LabeledSource::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(LdpsqSource(src)));
        Ok(())
    })
}

/// A random source in dimension `d` separated with margin `gamma`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_source_margin(
    d: usize,
    gamma: f64,
    support: usize,
    seed_root: u64,
    out: *mut *mut LdpsqSource,
) -> LdpsqStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if d < 2 || support == 0 {
            return Err(invalid("need d >= 2 and support >= 1"));
        }
        let src = synthetic::margin_source(d, gamma, support, &mut seed::rng(seed_root, "source", 0))?;
        *out = Box::into_raw(Box::new(LdpsqSource(src)));
        Ok(())
    })
}

/// # Safety
/// `src` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_source_dim(src: *const LdpsqSource) -> usize {
    src.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `src` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_source_support_len(src: *const LdpsqSource) -> usize {
    src.as_ref().map_or(0, |s| s.0.support().len())
}

/// # Safety
/// `src` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_source_free(src: *mut LdpsqSource) {
    if !src.is_null() {
        drop(Box::from_raw(src));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdpsqMode {
    DistributionFree = 0,
    KnownDistribution = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdpsqOracle {
    Exact = 0,
    Ldp = 1,
    Comm = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdpsqBackend {
    PerSample = 0,
    Aggregate = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdpsqLearnerConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    /// An `LdpsqMode` value.
    pub mode: i32,
    /// An `LdpsqOracle` value.
    pub oracle: i32,
    pub epsilon: f64,
    pub seed: u64,
    pub max_iters: u64,
    pub sim_tau: f64,
    /// An `LdpsqBackend` value.
    pub backend: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LdpsqLearnerSummary {
    pub d: usize,
    pub d_prime: usize,
    pub iterations: u64,
    pub rounds: usize,
    pub label_dependent_queries: usize,
    pub label_non_adaptive: bool,
    /// Zero under the exact oracle.
    pub samples: u64,
    pub error: f64,
}

/// Defaults for everything except the margin and accuracy targets.
#[no_mangle]
pub extern "C" fn ldpsq_learner_config_default(gamma: f64, alpha: f64, delta: f64) -> LdpsqLearnerConfig {
    let c = LearnerConfig::new(gamma, alpha, delta);
    LdpsqLearnerConfig {
        gamma,
        alpha,
        delta,
        mode: LdpsqMode::DistributionFree as i32,
        oracle: LdpsqOracle::Exact as i32,
        epsilon: c.epsilon,
        seed: c.seed,
        max_iters: c.max_iters,
        sim_tau: c.sim_tau,
        backend: match c.backend {
            Backend::PerSample => LdpsqBackend::PerSample,
            Backend::Aggregate => LdpsqBackend::Aggregate,
        } as i32,
    }
}

fn convert(c: &LdpsqLearnerConfig) -> Result<LearnerConfig, Failure> {
    let mode = match c.mode {
        0 => Mode::DistributionFree,
        1 => Mode::KnownDistribution,
        _ => return Err(invalid("mode out of range")),
    };
    let oracle = match c.oracle {
        0 => OracleKind::Exact,
        1 => OracleKind::Ldp,
        2 => OracleKind::Comm,
        _ => return Err(invalid("oracle out of range")),
    };
    let backend = match c.backend {
        0 => Backend::PerSample,
        1 => Backend::Aggregate,
        _ => return Err(invalid("backend out of range")),
    };
    let mut cfg = LearnerConfig::new(c.gamma, c.alpha, c.delta);
    cfg.mode = mode;
    cfg.oracle = oracle;
    cfg.epsilon = c.epsilon;
    cfg.seed = c.seed;
    cfg.max_iters = c.max_iters;
    cfg.sim_tau = c.sim_tau;
    cfg.backend = backend;
    Ok(cfg)
}

/// Learns a halfspace from `src`. `summary` may be null.
///
/// # Safety
/// `src` and `cfg` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_learn_halfspace(
    src: *const LdpsqSource,
    cfg: *const LdpsqLearnerConfig,
    out: *mut *mut LdpsqHypothesis,
    summary: *mut LdpsqLearnerSummary,
) -> LdpsqStatus {
    guard(|| {
        let src = handle(src, "src")?;
        let cfg = convert(handle(cfg, "cfg")?)?;
        let out = out_ptr(out, "out")?;
        let (h, r, _) = learn_halfspace(&src.0, &cfg)?;
        if let Some(s) = summary.as_mut() {
            *s = LdpsqLearnerSummary {
                d: r.d,
                d_prime: r.d_prime,
                iterations: r.iterations,
                rounds: r.rounds,
                label_dependent_queries: r.label_dependent_queries,
                label_non_adaptive: r.label_non_adaptive,
                samples: r.samples.unwrap_or(0),
                error: r.error,
            };
        }
        *out = Box::into_raw(Box::new(LdpsqHypothesis(h)));
        Ok(())
    })
}

/// Writes `+1` or `-1` to `label`.
///
/// # Safety
/// `x` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_hypothesis_classify(
    h: *const LdpsqHypothesis,
    x: *const f64,
    len: usize,
    label: *mut i8,
) -> LdpsqStatus {
    guard(|| {
        let h = handle(h, "h")?;
        if x.is_null() {
            return Err(invalid("x is null"));
        }
        let label = out_ptr(label, "label")?;
        let x = std::slice::from_raw_parts(x, len);
        if len != h.0.proj.source_dim() {
            return Err(invalid(&format!("x has length {len}, expected {}", h.0.proj.source_dim())));
        }
        *label = h.0.classify(x)?.as_i8();
        Ok(())
    })
}

/// Exact classification error of `h` on `src`.
///
/// # Safety
/// Handles must be live; `error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_hypothesis_error(
    h: *const LdpsqHypothesis,
    src: *const LdpsqSource,
    error: *mut f64,
) -> LdpsqStatus {
    guard(|| {
        let (h, src) = (handle(h, "h")?, handle(src, "src")?);
        *out_ptr(error, "error")? = classification_error(&h.0, &src.0)?;
        Ok(())
    })
}

/// JSON form of the hypothesis; release with `ldpsq_string_free`.
///
/// # Safety
/// `h` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_hypothesis_to_json(h: *const LdpsqHypothesis, out: *mut *mut c_char) -> LdpsqStatus {
    guard(|| {
        let h = handle(h, "h")?;
        let out = out_ptr(out, "out")?;
        *out = to_c_string(serde_json::to_string(&h.0).map_err(Error::from)?)?;
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_hypothesis_free(h: *mut LdpsqHypothesis) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Examples per query needed to answer `t` queries within `tau` with
/// failure probability `delta` under `epsilon`-LDP randomized response.
#[no_mangle]
pub extern "C" fn ldpsq_ldp_batch_size(epsilon: f64, tau: f64, t: u64, delta: f64) -> u64 {
    ldp_batch_size(epsilon, tau, t, delta)
}

/// Worst-case likelihood ratio of randomized response for a query using
/// the full `[-1, 1]` range, computed over its extremal inputs.
///
/// # Safety
/// `ratio` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_rr_privacy_ratio(epsilon: f64, ratio: *mut f64) -> LdpsqStatus {
    guard(|| {
        let ratio = out_ptr(ratio, "ratio")?;
        let q = StatQuery::new(0.1, true, |x, y| (x[0] * y.value()).clamp(-1.0, 1.0))?;
        let r = rr_randomizer(q, epsilon)?;
        let inputs: Vec<_> = [-1.0, 1.0]
            .iter()
            .flat_map(|&c| ldpsq::domain::Label::BOTH.map(|y| (vec![c], y)))
            .collect();
        *ratio = verify_randomizer_privacy(&r, &inputs)?;
        Ok(())
    })
}

/// Runs an experiment from its JSON config and writes its artifacts to
/// `out_dir`. `check_passed` (may be null) receives 1, 0, or -1 when the
/// command has no check.
///
/// # Safety
/// Strings must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn ldpsq_run_experiment(
    config_json: *const c_char,
    out_dir: *const c_char,
    check_passed: *mut i32,
) -> LdpsqStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_json(str_arg(config_json, "config_json")?)?;
        let dir = str_arg(out_dir, "out_dir")?;
        let art = cfg.run()?;
        art.write(Path::new(dir))?;
        if let Some(p) = check_passed.as_mut() {
            *p = art.check.map_or(-1, |c| i32::from(c.passed));
        }
        Ok(())
    })
}
