//! C ABI over `sqrteps`.
//!
//! Every function returns a [`SqrtepsStatus`]; results go through out
//! pointers. After a failure, `sqrteps_last_error` returns a message for the
//! calling thread. Handles are opaque and must be released with their
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use sqrteps::chain::{exact_ell_small_probability, sample_labels, FiniteChain, TransitionMatrix};
use sqrteps::districting::{
    grid_geography, planted_districting, run_flip_chain, CompactnessMode, Districting, FlipChain, Geography,
    LabelFunction, RunCounts, ValidityConstraints,
};
use sqrteps::{Error, LabeledTrajectory, OutlierReport, PowerParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqrtepsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Geography = 5,
    Config = 6,
    Resource = 7,
    Chain = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

impl From<&Error> for SqrtepsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => Self::InvalidArgument,
            Error::Parse { .. } | Error::Json { .. } => Self::Parse,
            Error::Io { .. } => Self::Io,
            Error::Geography(_) => Self::Geography,
            Error::Config(_) => Self::Config,
            Error::Resource(_) => Self::Resource,
            Error::Chain(_) => Self::Chain,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqrtepsCompactness {
    Perimeter = 0,
    L1 = 1,
    L2 = 2,
    Linf = 3,
}

impl From<SqrtepsCompactness> for CompactnessMode {
    fn from(c: SqrtepsCompactness) -> Self {
        match c {
            SqrtepsCompactness::Perimeter => Self::Perimeter,
            SqrtepsCompactness::L1 => Self::L1,
            SqrtepsCompactness::L2 => Self::L2,
            SqrtepsCompactness::Linf => Self::Linf,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqrtepsLabel {
    Var = 0,
    Mm = 1,
}

impl From<SqrtepsLabel> for LabelFunction {
    fn from(l: SqrtepsLabel) -> Self {
        match l {
            SqrtepsLabel::Var => Self::Var,
            SqrtepsLabel::Mm => Self::Mm,
        }
    }
}

/// Outcome of the test. `tv_slack` is meaningful only when `has_tv_slack`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtepsReport {
    pub k: u64,
    pub count_le: u64,
    pub epsilon: f64,
    pub ell: u64,
    pub p_value: f64,
    pub has_tv_slack: bool,
    pub tv_slack: f64,
}

impl From<OutlierReport> for SqrtepsReport {
    fn from(r: OutlierReport) -> Self {
        Self {
            k: r.k,
            count_le: r.count_le,
            epsilon: r.epsilon,
            ell: r.ell,
            p_value: r.p_value,
            has_tv_slack: r.tv_slack.is_some(),
            tv_slack: r.tv_slack.unwrap_or(0.0),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SqrtepsRunCounts {
    pub loops: u64,
    pub rejected: u64,
    pub moved: u64,
    pub audits: u64,
}

impl From<RunCounts> for SqrtepsRunCounts {
    fn from(c: RunCounts) -> Self {
        Self {
            loops: c.loops,
            rejected: c.rejected,
            moved: c.moved,
            audits: c.audits,
        }
    }
}

/// Flip chain constraints.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtepsConstraints {
    pub pop_tolerance: f64,
    pub compactness: SqrtepsCompactness,
    pub threshold: f64,
}

pub struct SqrtepsGeography(Geography);

pub struct SqrtepsFiniteChain(FiniteChain);

pub struct SqrtepsFlipRun {
    labels: LabeledTrajectory,
    counts: RunCounts,
    final_assignment: Vec<u32>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(SqrtepsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(SqrtepsStatus::from(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(SqrtepsStatus::NullPointer, format!("{name} is null"))
}

fn bad(message: impl Into<String>) -> Fail {
    Fail(SqrtepsStatus::InvalidArgument, message.into())
}

/// Runs `f`, recording its error message and turning panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SqrtepsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SqrtepsStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {message}"));
            SqrtepsStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(data: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn text<'a>(s: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s).to_str().map_err(|_| bad(format!("{name} is not UTF-8")))
}

unsafe fn copy_out(values: &[f64], out: *mut f64, capacity: usize) -> Result<(), Fail> {
    if capacity < values.len() {
        return Err(Fail(
            SqrtepsStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

/// Message for the calling thread's last failure; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sqrteps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Name of the pseudorandom generator behind every seeded function.
#[no_mangle]
pub extern "C" fn sqrteps_generator_id() -> *const c_char {
    static ID: OnceLock<CString> = OnceLock::new();
    ID.get_or_init(|| CString::new(sqrteps::rng::GENERATOR_ID).expect("no NUL")).as_ptr()
}

/// `min(1, √(2ε))`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_sqrt_eps_pvalue(epsilon: f64, out: *mut f64) -> SqrtepsStatus {
    guard(|| write(out, sqrteps::sqrt_eps_pvalue(epsilon)?, "out"))
}

/// `min(1, √(2ε) + ε₁)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_pvalue_with_tv(epsilon: f64, epsilon1: f64, out: *mut f64) -> SqrtepsStatus {
    guard(|| write(out, sqrteps::pvalue_with_tv(epsilon, epsilon1)?, "out"))
}

/// `min(1, √((2ℓ+1)/(k+1)))`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_theorem_bound(ell: u64, k: u64, out: *mut f64) -> SqrtepsStatus {
    guard(|| write(out, sqrteps::theorem_bound(ell, k), "out"))
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_power_lower_bound(
    epsilon: f64,
    k: u64,
    tau2: f64,
    pi_min: f64,
    out: *mut f64,
) -> SqrtepsStatus {
    guard(|| {
        let p = PowerParams::new(epsilon, k, tau2, pi_min)?;
        write(out, sqrteps::power_lower_bound(&p)?, "out")
    })
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_gillman_bound(gamma: f64, n: u64, tau2: f64, chi: f64, out: *mut f64) -> SqrtepsStatus {
    guard(|| write(out, sqrteps::gillman_bound(gamma, n, tau2, chi)?, "out"))
}

/// Exact `C(k, k/2) / 2^(k+1)` for even `k`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_cycle_first_dominance_probability(k: u64, out: *mut f64) -> SqrtepsStatus {
    guard(|| write(out, sqrteps::chain::cycle_first_dominance_probability(k)?, "out"))
}

/// Runs the test on `len` labels, the presented state's first.
///
/// # Safety
/// `labels` must point to `len` readable values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_run_test(
    labels: *const f64,
    len: usize,
    has_tv_slack: bool,
    tv_slack: f64,
    out: *mut SqrtepsReport,
) -> SqrtepsStatus {
    guard(|| {
        let traj = LabeledTrajectory::new(slice(labels, len, "labels")?.to_vec())?;
        let report = sqrteps::run_sqrt_eps_test(&traj, has_tv_slack.then_some(tv_slack))?;
        write(out, report.into(), "out")
    })
}

/// Parses a chain in the plain-text matrix format.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_finite_chain_parse(
    source: *const c_char,
    out: *mut *mut SqrtepsFiniteChain,
) -> SqrtepsStatus {
    guard(|| {
        let chain = FiniteChain::parse(text(source, "source")?)?;
        write(out, Box::into_raw(Box::new(SqrtepsFiniteChain(chain))), "out")
    })
}

/// Builds a chain from a row-major `n × n` matrix and `n` labels; the
/// stationary distribution is computed.
///
/// # Safety
/// `matrix` must hold `n * n` values and `labels` `n`; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_finite_chain_new(
    matrix: *const f64,
    n: usize,
    labels: *const f64,
    out: *mut *mut SqrtepsFiniteChain,
) -> SqrtepsStatus {
    guard(|| {
        let cells = n.checked_mul(n).ok_or_else(|| bad("state count overflows"))?;
        let m = slice(matrix, cells, "matrix")?;
        let rows = if n == 0 { Vec::new() } else { m.chunks(n).map(<[f64]>::to_vec).collect() };
        let chain = FiniteChain::new(TransitionMatrix::from_rows(rows)?, None, slice(labels, n, "labels")?.to_vec())?;
        write(out, Box::into_raw(Box::new(SqrtepsFiniteChain(chain))), "out")
    })
}

/// # Safety
/// `chain` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_finite_chain_free(chain: *mut SqrtepsFiniteChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// `chain` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_finite_chain_n_states(chain: *const SqrtepsFiniteChain, out: *mut usize) -> SqrtepsStatus {
    guard(|| {
        let c = chain.as_ref().ok_or_else(|| null("chain"))?;
        write(out, c.0.n_states(), "out")
    })
}

/// Copies the stationary distribution into `out`, which holds `capacity` values.
///
/// # Safety
/// `chain` must be a live handle; `out` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_finite_chain_pi(
    chain: *const SqrtepsFiniteChain,
    out: *mut f64,
    capacity: usize,
) -> SqrtepsStatus {
    guard(|| {
        let c = chain.as_ref().ok_or_else(|| null("chain"))?;
        copy_out(c.0.pi(), out, capacity)
    })
}

/// Whether detailed balance holds within `tol`.
///
/// # Safety
/// `chain` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_finite_chain_is_reversible(
    chain: *const SqrtepsFiniteChain,
    tol: f64,
    out: *mut bool,
) -> SqrtepsStatus {
    guard(|| {
        let c = chain.as_ref().ok_or_else(|| null("chain"))?;
        write(out, sqrteps::chain::verify_reversibility(&c.0, tol), "out")
    })
}

/// Exact probability that `X_j` is ℓ-small among `X_0..X_k` from a stationary start.
///
/// # Safety
/// `chain` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_exact_ell_small_probability(
    chain: *const SqrtepsFiniteChain,
    k: usize,
    ell: usize,
    j: usize,
    out: *mut f64,
) -> SqrtepsStatus {
    guard(|| {
        let c = chain.as_ref().ok_or_else(|| null("chain"))?;
        write(out, exact_ell_small_probability(&c.0, k, ell, j)?, "out")
    })
}

/// Samples `k` steps from `start` and writes the `k + 1` labels to `out`.
///
/// # Safety
/// `chain` must be a live handle; `out` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_finite_chain_sample_labels(
    chain: *const SqrtepsFiniteChain,
    start: usize,
    k: u64,
    seed: u64,
    out: *mut f64,
    capacity: usize,
) -> SqrtepsStatus {
    guard(|| {
        let c = chain.as_ref().ok_or_else(|| null("chain"))?;
        let needed = usize::try_from(k).ok().and_then(|k| k.checked_add(1));
        if needed.is_none_or(|n| n > capacity) {
            return Err(Fail(SqrtepsStatus::BufferTooSmall, format!("{k} steps need {k} + 1 slots")));
        }
        let labels = c.0.labels();
        let traj = sample_labels(&c.0, start, k, seed, |&s| labels[s])?;
        copy_out(traj.labels(), out, capacity)
    })
}

/// Loads a geography file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_geography_load(
    path: *const c_char,
    out: *mut *mut SqrtepsGeography,
) -> SqrtepsStatus {
    guard(|| {
        let geo = Geography::load(text(path, "path")?)?;
        write(out, Box::into_raw(Box::new(SqrtepsGeography(geo))), "out")
    })
}

/// Synthetic `width × height` grid with the default population and vote models.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_geography_grid(
    width: usize,
    height: usize,
    seed: u64,
    out: *mut *mut SqrtepsGeography,
) -> SqrtepsStatus {
    guard(|| {
        let geo = grid_geography(width, height, Default::default(), Default::default(), seed)?;
        write(out, Box::into_raw(Box::new(SqrtepsGeography(geo))), "out")
    })
}

/// # Safety
/// `geo` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_geography_free(geo: *mut SqrtepsGeography) {
    if !geo.is_null() {
        drop(Box::from_raw(geo));
    }
}

/// # Safety
/// `geo` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_geography_len(geo: *const SqrtepsGeography, out: *mut usize) -> SqrtepsStatus {
    guard(|| {
        let g = geo.as_ref().ok_or_else(|| null("geo"))?;
        write(out, g.0.len(), "out")
    })
}

/// Runs the flip chain for `steps` steps and records `label` along the way.
///
/// The start is `assignment` (one district index per precinct, in geography
/// order) when non-null, otherwise the planted districting of a grid.
/// Validity is audited every `audit_every` steps; 0 disables audits.
///
/// # Safety
/// `geo` must be a live handle; `assignment` must be null or hold
/// `assignment_len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_flip_run(
    geo: *const SqrtepsGeography,
    assignment: *const u32,
    assignment_len: usize,
    districts: usize,
    constraints: SqrtepsConstraints,
    steps: u64,
    seed: u64,
    label: SqrtepsLabel,
    audit_every: u64,
    out: *mut *mut SqrtepsFlipRun,
) -> SqrtepsStatus {
    guard(|| {
        let g = &geo.as_ref().ok_or_else(|| null("geo"))?.0;
        let c = ValidityConstraints::new(constraints.pop_tolerance, constraints.compactness.into(), constraints.threshold)?;
        let start = if assignment.is_null() {
            planted_districting(g, districts)?
        } else {
            Districting::new(g, slice(assignment, assignment_len, "assignment")?.to_vec(), districts)?
        };
        let chain = FlipChain::new(g, c)?;
        let audit = (audit_every > 0).then_some(audit_every);
        let run = run_flip_chain(&chain, start, steps, seed, &[label.into()], audit)?;
        let handle = SqrtepsFlipRun {
            labels: run.labels.into_iter().next().expect("one label requested"),
            counts: run.counts,
            final_assignment: run.final_plan.assignment().to_vec(),
        };
        write(out, Box::into_raw(Box::new(handle)), "out")
    })
}

/// # Safety
/// `run` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_flip_run_free(run: *mut SqrtepsFlipRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of recorded labels, `steps + 1`.
///
/// # Safety
/// `run` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_flip_run_len(run: *const SqrtepsFlipRun, out: *mut usize) -> SqrtepsStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        write(out, r.labels.labels().len(), "out")
    })
}

/// # Safety
/// `run` must be a live handle; `out` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_flip_run_labels(
    run: *const SqrtepsFlipRun,
    out: *mut f64,
    capacity: usize,
) -> SqrtepsStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        copy_out(r.labels.labels(), out, capacity)
    })
}

/// # Safety
/// `run` must be a live handle; `out` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_flip_run_final_assignment(
    run: *const SqrtepsFlipRun,
    out: *mut u32,
    capacity: usize,
) -> SqrtepsStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let a = &r.final_assignment;
        if capacity < a.len() {
            return Err(Fail(SqrtepsStatus::BufferTooSmall, format!("{} values needed", a.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(a.as_ptr(), out, a.len());
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_flip_run_counts(run: *const SqrtepsFlipRun, out: *mut SqrtepsRunCounts) -> SqrtepsStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        write(out, r.counts.into(), "out")
    })
}

/// Runs the test on the recorded labels.
///
/// # Safety
/// `run` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sqrteps_flip_run_test(
    run: *const SqrtepsFlipRun,
    has_tv_slack: bool,
    tv_slack: f64,
    out: *mut SqrtepsReport,
) -> SqrtepsStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let report = sqrteps::run_sqrt_eps_test(&r.labels, has_tv_slack.then_some(tv_slack))?;
        write(out, report.into(), "out")
    })
}
