//! C ABI over the `sicaoi` core: opaque handles for configs, policies and
//! analytic models, plain structs for results, integer status codes.
//!
//! Every fallible call returns a [`SicaoiStatus`]; on failure a message is
//! kept per thread and can be read with [`sicaoi_last_error`]. Handles are
//! released with their `_free` function; passing NULL to `_free` is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sicaoi::analytic::AnalyticModel;
use sicaoi::sim::{simulate, SimOptions};
use sicaoi::{AccessPolicy, Error, GridSpec, PolicyBundle, PolicyForm, SystemConfig};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicaoiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    ModelInconsistency = 4,
    Config = 5,
    Io = 6,
    Artifact = 7,
    Panic = 8,
}

/// Scenario parameters (opaque).
pub struct SicaoiConfig(SystemConfig);

/// Optimized access policy together with the SIC profile it came from (opaque).
pub struct SicaoiPolicy {
    bundle: PolicyBundle,
    policy: AccessPolicy,
}

/// Analytic model prepared for one config and policy (opaque).
pub struct SicaoiModel(AnalyticModel);

/// Analytic metrics at one mean generation time. Times in s, energy in J.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SicaoiMetrics {
    pub s: f64,
    pub b: f64,
    pub p_s: f64,
    pub theta: f64,
    pub theta_norm: f64,
    pub cbr: f64,
    pub mean_delay: f64,
    pub mean_aoi: f64,
    /// AoI tail decay rate (1/s); +inf when every transmission succeeds.
    pub zeta: f64,
    pub energy: f64,
    pub mean_backlog: f64,
    pub std_backlog: f64,
    pub s_inf: f64,
}

/// Simulated estimate with its 95% half-width.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SicaoiEstimate {
    pub mean: f64,
    pub half_width: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SicaoiSimMetrics {
    pub pdr: SicaoiEstimate,
    pub theta_norm: SicaoiEstimate,
    pub cbr: SicaoiEstimate,
    pub mean_delay: SicaoiEstimate,
    pub mean_aoi: SicaoiEstimate,
    pub energy: SicaoiEstimate,
    pub mean_backlog: SicaoiEstimate,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SicaoiStatus {
    match e {
        Error::InvalidArgument(_)
        | Error::Unsorted
        | Error::EmptyGrid
        | Error::TooFewPoints(_)
        | Error::GridMismatch(_) => SicaoiStatus::InvalidArgument,
        Error::OutOfRange { .. } => SicaoiStatus::OutOfRange,
        Error::ModelInconsistency(_) => SicaoiStatus::ModelInconsistency,
        Error::ConfigParse { .. } | Error::ConfigInvalid(_) => SicaoiStatus::Config,
        Error::Io { .. } => SicaoiStatus::Io,
        Error::Artifact(_) => SicaoiStatus::Artifact,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), SicaoiStatus>>(f: F) -> SicaoiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SicaoiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            SicaoiStatus::Panic
        }
    }
}

fn fail(e: Error) -> SicaoiStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> SicaoiStatus {
    set_error(&format!("{what} is NULL"));
    SicaoiStatus::NullPointer
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, SicaoiStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_path<'a>(p: *const c_char, what: &str) -> Result<&'a Path, SicaoiStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map(Path::new).map_err(|_| {
        set_error(&format!("{what} is not UTF-8"));
        SicaoiStatus::InvalidArgument
    })
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sicaoi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Reference scenario defaults. Never NULL; release with `sicaoi_config_free`.
#[no_mangle]
pub extern "C" fn sicaoi_config_default() -> *mut SicaoiConfig {
    Box::into_raw(Box::new(SicaoiConfig(SystemConfig::default())))
}

/// Parses a `key = value` config file into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_config_load(path: *const c_char, out: *mut *mut SicaoiConfig) -> SicaoiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = SystemConfig::load(as_path(path, "path")?).map_err(fail)?;
        *out = Box::into_raw(Box::new(SicaoiConfig(cfg)));
        Ok(())
    })
}

/// Sets the mean generation time `S = 1/lambda` (s).
///
/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_config_set_generation_time(cfg: *mut SicaoiConfig, s: f64) -> SicaoiStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let next = c.0.with_generation_time(s);
        next.validate().map_err(fail)?;
        c.0 = next;
        Ok(())
    })
}

/// Sets the random seed used for profiles and simulations.
///
/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_config_set_seed(cfg: *mut SicaoiConfig, seed: u64) -> SicaoiStatus {
    guard(|| {
        cfg.as_mut().ok_or_else(|| null("cfg"))?.0.seed = seed;
        Ok(())
    })
}

/// Sets the Monte Carlo trials per profile cell.
///
/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_config_set_mc_trials(cfg: *mut SicaoiConfig, trials: usize) -> SicaoiStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        if trials == 0 {
            return Err(fail(Error::InvalidArgument("trials must be positive".into())));
        }
        c.0.mc_trials = trials;
        Ok(())
    })
}

/// Node count of the scenario, or 0 for a NULL handle.
///
/// # Safety
/// `cfg` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_config_nodes(cfg: *const SicaoiConfig) -> usize {
    cfg.as_ref().map_or(0, |c| c.0.n)
}

/// # Safety
/// `cfg` must be NULL or come from `sicaoi_config_*` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_config_free(cfg: *mut SicaoiConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Builds the policy for `cfg`. With a non-NULL `cache_dir` the bundle is
/// loaded from, or stored into, that directory. `fitted != 0` selects the
/// closed-form policy, otherwise the raw grid optimum.
///
/// # Safety
/// `cfg` must come from this library, `cache_dir` be NULL or NUL-terminated,
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_policy_build(
    cfg: *const SicaoiConfig,
    cache_dir: *const c_char,
    fitted: i32,
    out: *mut *mut SicaoiPolicy,
) -> SicaoiStatus {
    guard(|| {
        let cfg = &as_ref(cfg, "cfg")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = GridSpec::default();
        let bundle = if cache_dir.is_null() {
            PolicyBundle::build(cfg, &grid)
        } else {
            PolicyBundle::load_or_build(as_path(cache_dir, "cache_dir")?, cfg, &grid)
        }
        .map_err(fail)?;
        let form = if fitted != 0 {
            PolicyForm::Fitted
        } else {
            PolicyForm::Raw
        };
        let policy = bundle.policy(form, cfg).map_err(fail)?;
        *out = Box::into_raw(Box::new(SicaoiPolicy { bundle, policy }));
        Ok(())
    })
}

/// Fitted constants of the policy. Any output pointer may be NULL.
///
/// # Safety
/// `policy` must come from this library; non-NULL outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_policy_constants(
    policy: *const SicaoiPolicy,
    k_c: *mut usize,
    a_gamma: *mut f64,
    b_gamma: *mut f64,
    a_d: *mut f64,
) -> SicaoiStatus {
    guard(|| {
        let c = as_ref(policy, "policy")?.bundle.constants;
        if let Some(x) = k_c.as_mut() {
            *x = c.k_c;
        }
        if let Some(x) = a_gamma.as_mut() {
            *x = c.a_gamma;
        }
        if let Some(x) = b_gamma.as_mut() {
            *x = c.b_gamma;
        }
        if let Some(x) = a_d.as_mut() {
            *x = c.a_d;
        }
        Ok(())
    })
}

/// Policy entry for `k` backlogged nodes (`0 <= k <= n`): transmit
/// probability, target SNIR and slot length (s).
///
/// # Safety
/// `policy` must come from this library; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_policy_entry(
    policy: *const SicaoiPolicy,
    k: usize,
    p: *mut f64,
    gamma: *mut f64,
    slot: *mut f64,
) -> SicaoiStatus {
    guard(|| {
        let pol = &as_ref(policy, "policy")?.policy;
        if k > pol.n() {
            return Err(fail(Error::InvalidArgument(format!("k = {k} outside 0..={}", pol.n()))));
        }
        if p.is_null() || gamma.is_null() || slot.is_null() {
            return Err(null("output"));
        }
        *p = pol.p[k];
        *gamma = pol.gamma[k];
        *slot = pol.t[k];
        Ok(())
    })
}

/// # Safety
/// `policy` must be NULL or come from `sicaoi_policy_build`, freed once.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_policy_free(policy: *mut SicaoiPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Prepares the analytic model for `cfg` and `policy`.
///
/// # Safety
/// Handles must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_model_new(
    cfg: *const SicaoiConfig,
    policy: *const SicaoiPolicy,
    out: *mut *mut SicaoiModel,
) -> SicaoiStatus {
    guard(|| {
        let cfg = &as_ref(cfg, "cfg")?.0;
        let pol = as_ref(policy, "policy")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let model = AnalyticModel::new(cfg, &pol.policy, &pol.bundle.profile).map_err(fail)?;
        *out = Box::into_raw(Box::new(SicaoiModel(model)));
        Ok(())
    })
}

/// Evaluates all analytic metrics at mean generation time `s` (s).
///
/// # Safety
/// `model` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_model_evaluate(
    model: *const SicaoiModel,
    s: f64,
    out: *mut SicaoiMetrics,
) -> SicaoiStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(fail(Error::InvalidArgument(format!(
                "mean generation time {s} must be positive"
            ))));
        }
        let r = m.evaluate(s).map_err(fail)?;
        *out = SicaoiMetrics {
            s: r.s,
            b: r.b,
            p_s: r.p_s,
            theta: r.theta,
            theta_norm: r.theta_norm,
            cbr: r.cbr,
            mean_delay: r.mean_delay,
            mean_aoi: r.mean_aoi,
            zeta: r.zeta,
            energy: r.energy,
            mean_backlog: r.mean_backlog,
            std_backlog: r.std_backlog,
            s_inf: r.critical.s_inf,
        };
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or come from `sicaoi_model_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_model_free(model: *mut SicaoiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Simulates `replications` runs of `slots` slots (10% warmup) at the
/// generation time configured in `cfg`.
///
/// # Safety
/// Handles must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_simulate(
    cfg: *const SicaoiConfig,
    policy: *const SicaoiPolicy,
    replications: usize,
    slots: u64,
    out: *mut SicaoiSimMetrics,
) -> SicaoiStatus {
    guard(|| {
        let cfg = &as_ref(cfg, "cfg")?.0;
        let pol = &as_ref(policy, "policy")?.policy;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = simulate(cfg, pol, &SimOptions::with_horizon(slots, replications)).map_err(fail)?;
        let e = |x: sicaoi::sim::Estimate| SicaoiEstimate {
            mean: x.mean,
            half_width: x.half_width,
        };
        *out = SicaoiSimMetrics {
            pdr: e(r.pdr),
            theta_norm: e(r.theta_norm),
            cbr: e(r.cbr),
            mean_delay: e(r.mean_delay),
            mean_aoi: e(r.mean_aoi),
            energy: e(r.energy),
            mean_backlog: e(r.mean_backlog),
        };
        Ok(())
    })
}

/// Packets decoded by an ideal SIC receiver from `len` received SNRs in
/// descending order, at threshold `gamma`.
///
/// # Safety
/// `powers` must point to `len` doubles (may be NULL when `len == 0`);
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sicaoi_sic_decode_count(
    powers: *const f64,
    len: usize,
    gamma: f64,
    out: *mut usize,
) -> SicaoiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let slice = if len == 0 {
            &[][..]
        } else if powers.is_null() {
            return Err(null("powers"));
        } else {
            std::slice::from_raw_parts(powers, len)
        };
        *out = sicaoi::sic_decode_count(slice, gamma).map_err(fail)?;
        Ok(())
    })
}
