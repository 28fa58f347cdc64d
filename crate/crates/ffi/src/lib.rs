//! C ABI for `mjp-stein`.
//!
//! Conventions:
//! * Every fallible function returns an [`MjpStatus`]; `MJP_STATUS_OK` is 0.
//!   On failure, [`mjp_last_error`] returns a message for the calling thread.
//! * Matrices are dense, row-major, `d * d` doubles.
//! * Handles ([`MjpProcess`], [`MjpChain`], [`MjpJumpSet`]) are opaque and
//!   owned by the caller once returned; release them with the matching
//!   `*_free` function. Passing NULL to a `*_free` function is a no-op.
//! * Output buffers are caller-allocated with their capacity passed in;
//!   a short buffer yields `MJP_STATUS_BUFFER_TOO_SMALL`.
//! * Panics never cross the boundary; they are reported as
//!   `MJP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use mjp_stein::engine::{
    solve_stein, stationary_distribution, tv_distance, DiscreteDistribution, TruncatedChain,
};
use mjp_stein::factor::{factorize, WeightedJumpSet};
use mjp_stein::model::config::parse_process;
use mjp_stein::model::operators::TruncatedModel;
use mjp_stein::model::{build_elementary, ProcessSpec};
use mjp_stein::spectral::{solve_lyapunov, CovarianceMatrix, DriftMatrix};
use mjp_stein::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MjpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Dimension = 4,
    Stability = 5,
    Definiteness = 6,
    Numerical = 7,
    Factorization = 8,
    Scale = 9,
    Model = 10,
    Reducible = 11,
    Convergence = 12,
    Precondition = 13,
    Config = 14,
    Io = 15,
    Panic = 16,
}

impl From<&Error> for MjpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => MjpStatus::Dimension,
            Error::Stability { .. } => MjpStatus::Stability,
            Error::Definiteness { .. } => MjpStatus::Definiteness,
            Error::Numerical { .. } => MjpStatus::Numerical,
            Error::Factorization { .. } => MjpStatus::Factorization,
            Error::Scale(_) => MjpStatus::Scale,
            Error::Model(_) => MjpStatus::Model,
            Error::Reducible { .. } => MjpStatus::Reducible,
            Error::Convergence(_) => MjpStatus::Convergence,
            Error::Precondition(_) => MjpStatus::Precondition,
            Error::Config(_) => MjpStatus::Config,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => MjpStatus::Io,
        }
    }
}

/// A process specification.
pub struct MjpProcess {
    spec: ProcessSpec,
}

/// A truncated chain together with its model.
pub struct MjpChain {
    model: TruncatedModel,
    chain: TruncatedChain,
}

/// Integer jump vectors with nonnegative weights.
pub struct MjpJumpSet {
    set: WeightedJumpSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(MjpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MjpStatus::from(&e), e.to_string())
    }
}

fn fail(status: MjpStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, records any error message and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MjpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MjpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MjpStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(fail(MjpStatus::NullPointer, format!("{name} is NULL")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(fail(MjpStatus::NullPointer, format!("{name} is NULL")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(MjpStatus::NullPointer, format!("{name} is NULL")))
}

fn need_capacity(have: usize, need: usize) -> Result<(), Failure> {
    if have < need {
        return Err(fail(
            MjpStatus::BufferTooSmall,
            format!("buffer holds {have}, need {need}"),
        ));
    }
    Ok(())
}

/// Message for the last failure on this thread; empty when none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mjp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mjp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Solves `AΣ + ΣAᵀ + σ² = 0`. Writes `Σ` (row-major, `d*d`) and
/// `α₁ = λ_min(Σ^{-1/2}σ²Σ^{-1/2})/2`.
///
/// # Safety
/// `a` and `sigma2` must point to `d*d` readable doubles, `out_sigma` to
/// `d*d` writable doubles and `out_alpha1` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn mjp_lyapunov(
    d: usize,
    a: *const f64,
    sigma2: *const f64,
    out_sigma: *mut f64,
    out_alpha1: *mut f64,
) -> MjpStatus {
    guard(|| {
        let a = DriftMatrix::from_row_slice(d, input(a, d * d, "a")?)?;
        let s2 = CovarianceMatrix::from_row_slice(d, input(sigma2, d * d, "sigma2")?)?;
        let out = output(out_sigma, d * d, "out_sigma")?;
        let alpha = output(out_alpha1, 1, "out_alpha1")?;
        let geom = solve_lyapunov(&a, &s2)?;
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = geom.sigma[(i, j)];
            }
        }
        alpha[0] = geom.alpha1;
        Ok(())
    })
}

/// Writes an integer jump set with weights `w` such that
/// `Σ_J w_J J Jᵀ = σ²` into `*out`.
///
/// # Safety
/// `sigma2` must point to `d*d` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mjp_factorize(
    d: usize,
    sigma2: *const f64,
    out: *mut *mut MjpJumpSet,
) -> MjpStatus {
    guard(|| {
        let s2 = CovarianceMatrix::from_row_slice(d, input(sigma2, d * d, "sigma2")?)?;
        let out = output(out, 1, "out")?;
        let set = factorize(&s2)?;
        out[0] = Box::into_raw(Box::new(MjpJumpSet { set }));
        Ok(())
    })
}

/// Number of jumps in the set, or 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle from [`mjp_factorize`].
#[no_mangle]
pub unsafe extern "C" fn mjp_jump_set_len(set: *const MjpJumpSet) -> usize {
    set.as_ref().map_or(0, |s| s.set.entries.len())
}

/// Jump `k`: writes its `d` coordinates and its weight.
///
/// # Safety
/// `set` must be a live handle; `out_coords` must hold `d` values.
#[no_mangle]
pub unsafe extern "C" fn mjp_jump_set_get(
    set: *const MjpJumpSet,
    k: usize,
    out_coords: *mut i64,
    out_weight: *mut f64,
) -> MjpStatus {
    guard(|| {
        let s = &handle(set, "set")?.set;
        let (j, w) = s.entries.get(k).ok_or_else(|| {
            fail(
                MjpStatus::InvalidArgument,
                format!("index {k} out of range"),
            )
        })?;
        output(out_coords, s.dim, "out_coords")?.copy_from_slice(j.coords());
        output(out_weight, 1, "out_weight")?[0] = *w;
        Ok(())
    })
}

/// # Safety
/// `set` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mjp_jump_set_free(set: *mut MjpJumpSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Parses a process document (TOML with `schema_version` and `[process]`).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mjp_process_from_toml(
    text: *const c_char,
    out: *mut *mut MjpProcess,
) -> MjpStatus {
    guard(|| {
        if text.is_null() {
            return Err(fail(MjpStatus::NullPointer, "text is NULL"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| fail(MjpStatus::InvalidArgument, e.to_string()))?;
        let out = output(out, 1, "out")?;
        let spec = parse_process(text)?.build()?;
        out[0] = Box::into_raw(Box::new(MjpProcess { spec }));
        Ok(())
    })
}

/// The elementary process realising `(c, A, σ²)` at scale `n`.
///
/// # Safety
/// `c` must hold `d` doubles, `a` and `sigma2` `d*d` each; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mjp_process_elementary(
    d: usize,
    c: *const f64,
    a: *const f64,
    sigma2: *const f64,
    n: u64,
    out: *mut *mut MjpProcess,
) -> MjpStatus {
    guard(|| {
        let c = input(c, d, "c")?;
        let a = DriftMatrix::from_row_slice(d, input(a, d * d, "a")?)?;
        let s2 = CovarianceMatrix::from_row_slice(d, input(sigma2, d * d, "sigma2")?)?;
        let out = output(out, 1, "out")?;
        if n == 0 {
            return Err(fail(MjpStatus::InvalidArgument, "n must be positive"));
        }
        let spec = build_elementary(c, &a, &s2)?.spec.with_n(n);
        out[0] = Box::into_raw(Box::new(MjpProcess { spec }));
        Ok(())
    })
}

/// Dimension of the process, or 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mjp_process_dim(p: *const MjpProcess) -> usize {
    p.as_ref().map_or(0, |p| p.spec.dim())
}

/// # Safety
/// `p` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mjp_process_free(p: *mut MjpProcess) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Enumerates the states with `‖X - nc‖_Σ ≤ nδ` and assembles the
/// generator. The process handle is not consumed.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mjp_chain_new(
    p: *const MjpProcess,
    delta: f64,
    out: *mut *mut MjpChain,
) -> MjpStatus {
    guard(|| {
        let spec = handle(p, "process")?.spec.clone();
        let out = output(out, 1, "out")?;
        let geom = spec.geometry()?;
        let model = TruncatedModel::new(spec, geom, delta)?;
        let chain = model.chain()?;
        out[0] = Box::into_raw(Box::new(MjpChain { model, chain }));
        Ok(())
    })
}

/// Number of states, or 0 for NULL.
///
/// # Safety
/// `c` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mjp_chain_len(c: *const MjpChain) -> usize {
    c.as_ref().map_or(0, |c| c.chain.len())
}

/// Writes the `d` coordinates of state `i`.
///
/// # Safety
/// `c` must be a live handle; `out_coords` must hold `d` values.
#[no_mangle]
pub unsafe extern "C" fn mjp_chain_state(
    c: *const MjpChain,
    i: usize,
    out_coords: *mut i64,
) -> MjpStatus {
    guard(|| {
        let c = handle(c, "chain")?;
        if i >= c.chain.len() {
            return Err(fail(
                MjpStatus::InvalidArgument,
                format!("state {i} out of range"),
            ));
        }
        output(out_coords, c.model.dim(), "out_coords")?.copy_from_slice(c.chain.state(i));
        Ok(())
    })
}

/// Index of the state with coordinates `x`, or `MJP_STATUS_INVALID_ARGUMENT`
/// when it lies outside the truncation.
///
/// # Safety
/// `c` must be a live handle; `x` must hold `d` values.
#[no_mangle]
pub unsafe extern "C" fn mjp_chain_index_of(
    c: *const MjpChain,
    x: *const i64,
    out_index: *mut usize,
) -> MjpStatus {
    guard(|| {
        let c = handle(c, "chain")?;
        let x = input(x, c.model.dim(), "x")?;
        let i = c
            .chain
            .index_of(x)
            .ok_or_else(|| fail(MjpStatus::InvalidArgument, "state outside truncation"))?;
        output(out_index, 1, "out_index")?[0] = i;
        Ok(())
    })
}

/// # Safety
/// `c` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mjp_chain_free(c: *mut MjpChain) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Stationary distribution in state order.
///
/// # Safety
/// `c` must be a live handle; `out_probs` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn mjp_stationary(
    c: *const MjpChain,
    out_probs: *mut f64,
    capacity: usize,
) -> MjpStatus {
    guard(|| {
        let c = handle(c, "chain")?;
        need_capacity(capacity, c.chain.len())?;
        let out = output(out_probs, c.chain.len(), "out_probs")?;
        out.copy_from_slice(&stationary_distribution(&c.chain)?.probs);
        Ok(())
    })
}

/// Solves `Qh = 1_B - π(B)` with `πᵀh = 0`, where `B` is given by state
/// indices. Writes `h` in state order and `π(B)`.
///
/// # Safety
/// `c` must be a live handle; `target` must hold `target_len` indices;
/// `out_h` must hold `capacity` doubles; `out_pi_b` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mjp_stein(
    c: *const MjpChain,
    target: *const usize,
    target_len: usize,
    out_h: *mut f64,
    capacity: usize,
    out_pi_b: *mut f64,
) -> MjpStatus {
    guard(|| {
        let c = handle(c, "chain")?;
        let target = if target_len == 0 {
            &[][..]
        } else {
            input(target, target_len, "target")?
        };
        need_capacity(capacity, c.chain.len())?;
        let out = output(out_h, c.chain.len(), "out_h")?;
        let pi = stationary_distribution(&c.chain)?;
        let sol = solve_stein(&c.chain, &pi, target)?;
        out.copy_from_slice(&sol.values);
        if let Some(pb) = out_pi_b.as_mut() {
            *pb = sol.pi_b;
        }
        Ok(())
    })
}

/// Total variation distance between two weight vectors over the same `len`
/// states, each normalised to unit mass first.
///
/// # Safety
/// `p` and `q` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mjp_tv_distance(
    p: *const f64,
    q: *const f64,
    len: usize,
    out: *mut f64,
) -> MjpStatus {
    guard(|| {
        let states: Vec<Vec<i64>> = (0..len as i64).map(|i| vec![i]).collect();
        let p = DiscreteDistribution::new(states.clone(), input(p, len, "p")?.to_vec())?;
        let q = DiscreteDistribution::new(states, input(q, len, "q")?.to_vec())?;
        output(out, 1, "out")?[0] = tv_distance(&p, &q);
        Ok(())
    })
}
