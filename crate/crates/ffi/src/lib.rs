//! C ABI for the `ksync` solvers.
//!
//! Graphs and estimates are opaque heap handles owned by the caller and
//! released with their `_free` function. Every fallible call returns a
//! [`KsyncStatus`]; on failure `ksync_last_error` describes the problem for
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ksync::genmodel::{sample_angles, sample_er_mixture, MixtureParams};
use ksync::sync::{solve, SdpBmConfig, Solver};
use ksync::{Edge, EdgeLabel, MeasurementGraph, SyncError, SyncEstimate};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsyncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    Parse = 4,
    Io = 5,
    Panic = 6,
}

/// Solver selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsyncSolver {
    EigH = 0,
    EigR = 1,
    SdpBm = 2,
}

/// Opaque measurement graph.
pub struct KsyncGraph(MeasurementGraph);

/// Opaque synchronization result.
pub struct KsyncEstimate(SyncEstimate);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &SyncError) -> KsyncStatus {
    match e {
        SyncError::InvalidInput(_) | SyncError::LengthMismatch { .. } | SyncError::Config(_) => {
            KsyncStatus::InvalidInput
        }
        SyncError::NotHermitian { .. }
        | SyncError::NoConvergence { .. }
        | SyncError::IsolatedNode { .. }
        | SyncError::RankDeficient(_) => KsyncStatus::Numerical,
        SyncError::Parse { .. } => KsyncStatus::Parse,
        SyncError::Io(_) => KsyncStatus::Io,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), (KsyncStatus, String)>>(f: F) -> KsyncStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            KsyncStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KsyncStatus::Panic
        }
    }
}

fn lift<T>(r: ksync::Result<T>) -> Result<T, (KsyncStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (KsyncStatus, String) {
    (KsyncStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(
    p: *const T,
    len: usize,
    what: &str,
) -> Result<&'a [T], (KsyncStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(
    p: *mut T,
    len: usize,
    what: &str,
) -> Result<&'a mut [T], (KsyncStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn boxed<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ksync_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn ksync_status_name(status: KsyncStatus) -> *const c_char {
    let s: &'static CStr = match status {
        KsyncStatus::Ok => c"ok",
        KsyncStatus::NullPointer => c"null pointer",
        KsyncStatus::InvalidInput => c"invalid input",
        KsyncStatus::Numerical => c"numerical failure",
        KsyncStatus::Parse => c"parse error",
        KsyncStatus::Io => c"i/o error",
        KsyncStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Builds a graph on `n` nodes from `m` edges `(i[e], j[e], theta[e])`.
/// Offsets are `θ_i − θ_j` in radians; labels are unknown.
///
/// # Safety
/// `i`, `j` and `theta` must point to `m` readable elements; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ksync_graph_from_edges(
    n: usize,
    k: usize,
    i: *const usize,
    j: *const usize,
    theta: *const f64,
    m: usize,
    out: *mut *mut KsyncGraph,
) -> KsyncStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (i, j, theta) = (
            slice(i, m, "i")?,
            slice(j, m, "j")?,
            slice(theta, m, "theta")?,
        );
        let edges = (0..m)
            .map(|e| Edge {
                i: i[e],
                j: j[e],
                theta: theta[e],
                label: EdgeLabel::Unknown,
            })
            .collect();
        let g = lift(MeasurementGraph::new(n, k, edges))?;
        boxed(out, KsyncGraph(g));
        Ok(())
    })
}

/// Reads a graph file: an `n m k` header, then `m` lines `i j theta label`
/// with 1-based node ids.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ksync_graph_read(
    path: *const c_char,
    out: *mut *mut KsyncGraph,
) -> KsyncStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (KsyncStatus::InvalidInput, "path is not UTF-8".to_string()))?;
        let file =
            std::fs::File::open(path).map_err(|e| (KsyncStatus::Io, format!("{path}: {e}")))?;
        let g = lift(MeasurementGraph::read_from(std::io::BufReader::new(file)))?;
        boxed(out, KsyncGraph(g));
        Ok(())
    })
}

/// Samples an Erdős–Rényi mixture instance with group probabilities `p[0..k]`.
/// When `truth` is non-null it receives the planted angles, group-major
/// (`k * n` values).
///
/// # Safety
/// `p` must point to `k` values, `truth` (if non-null) to `k * n` writable
/// values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ksync_graph_sample_er(
    n: usize,
    lambda: f64,
    p: *const f64,
    k: usize,
    seed: u64,
    truth: *mut f64,
    out: *mut *mut KsyncGraph,
) -> KsyncStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = slice(p, k, "p")?;
        let params = lift(MixtureParams::new(n, lambda, p.to_vec(), seed))?;
        let angles = lift(sample_angles(n, k, seed))?;
        let g = lift(sample_er_mixture(&params, &angles))?;
        if !truth.is_null() {
            let dst = slice_mut(truth, k * n, "truth")?;
            for (l, row) in angles.rows().iter().enumerate() {
                dst[l * n..(l + 1) * n].copy_from_slice(row);
            }
        }
        boxed(out, KsyncGraph(g));
        Ok(())
    })
}

/// Node and edge counts of a graph.
///
/// # Safety
/// `g` must be a live handle; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ksync_graph_size(
    g: *const KsyncGraph,
    n: *mut usize,
    m: *mut usize,
) -> KsyncStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if n.is_null() || m.is_null() {
            return Err(null("output"));
        }
        *n = g.0.n();
        *m = g.0.edge_count();
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ksync_graph_free(g: *mut KsyncGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Recovers `k` angle groups. `seed` only affects `KSYNC_SOLVER_SDP_BM`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ksync_solve(
    g: *const KsyncGraph,
    k: usize,
    solver: KsyncSolver,
    seed: u64,
    out: *mut *mut KsyncEstimate,
) -> KsyncStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let solver = match solver {
            KsyncSolver::EigH => Solver::EigH,
            KsyncSolver::EigR => Solver::EigR,
            KsyncSolver::SdpBm => Solver::SdpBm,
        };
        let cfg = SdpBmConfig {
            seed,
            ..SdpBmConfig::default()
        };
        let est = lift(solve(&g.0, k, solver, &cfg))?;
        boxed(out, KsyncEstimate(est));
        Ok(())
    })
}

/// Number of nodes and of groups in an estimate.
///
/// # Safety
/// `est` must be a live handle; `n` and `k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ksync_estimate_size(
    est: *const KsyncEstimate,
    n: *mut usize,
    k: *mut usize,
) -> KsyncStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("estimate"))?;
        if n.is_null() || k.is_null() {
            return Err(null("output"));
        }
        *n = est.0.theta_hat.n();
        *k = est.0.theta_hat.k();
        Ok(())
    })
}

/// Copies the angles of group `l` (in `[0, 2π)`) into `out[0..len]`;
/// `len` must equal the node count.
///
/// # Safety
/// `est` must be a live handle; `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ksync_estimate_angles(
    est: *const KsyncEstimate,
    l: usize,
    out: *mut f64,
    len: usize,
) -> KsyncStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("estimate"))?;
        let th = &est.0.theta_hat;
        if l >= th.k() {
            return Err((
                KsyncStatus::InvalidInput,
                format!("group {l} of {}", th.k()),
            ));
        }
        if len != th.n() {
            return Err((
                KsyncStatus::InvalidInput,
                format!("buffer of {len} for {} nodes", th.n()),
            ));
        }
        slice_mut(out, len, "out")?.copy_from_slice(th.group(l));
        Ok(())
    })
}

/// Copies the leading eigenvalues (descending) into `out[0..len]`, with
/// `len` at most `k`.
///
/// # Safety
/// `est` must be a live handle; `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ksync_estimate_eigenvalues(
    est: *const KsyncEstimate,
    out: *mut f64,
    len: usize,
) -> KsyncStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("estimate"))?;
        let ev = &est.0.eigenvalues;
        if len > ev.len() {
            return Err((
                KsyncStatus::InvalidInput,
                format!("{len} eigenvalues requested, {} available", ev.len()),
            ));
        }
        slice_mut(out, len, "out")?.copy_from_slice(&ev[..len]);
        Ok(())
    })
}

/// # Safety
/// `est` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ksync_estimate_free(est: *mut KsyncEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// `|⟨z, ẑ⟩|` between two angle vectors of length `n`.
///
/// # Safety
/// `a` and `b` must point to `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ksync_correlation(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut f64,
) -> KsyncStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = lift(ksync::correlation(slice(a, n, "a")?, slice(b, n, "b")?))?;
        *out = c;
        Ok(())
    })
}
