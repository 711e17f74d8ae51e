//! C ABI over the kinkwire solver.
//!
//! Every entry point returns a [`KwStatus`]. On failure the message is kept
//! per thread and can be read with [`kw_last_error`]. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kinkwire::convergence::{solve_singular, sweep, Problem};
use kinkwire::geometry::{power_law_amplitude, CurvatureSpec, PhysicalParams};
use kinkwire::regularization::{geometric_potential, regularize};
use kinkwire::spectral::{
    assemble_regular, canonical_bc, eigen_lowest, BcPreset, BoundaryConditions, Mesh, Spectrum,
};
use kinkwire::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Grid = 4,
    Boundary = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// A bent-wire problem: geometry, boundary conditions and discretization.
pub struct KwProblem {
    base: CurvatureSpec,
    params: PhysicalParams,
    bc: BoundaryConditions,
    n_cells: usize,
    k: usize,
}

/// The lowest eigenpairs of one discretized operator.
pub struct KwSpectrum {
    inner: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> KwStatus {
    match err {
        Error::Domain { .. } | Error::OutOfRange { .. } => KwStatus::Domain,
        Error::SingularPoint(_) | Error::GridContainsSingularity { .. } | Error::GridMismatch(_) => KwStatus::Grid,
        Error::UnsupportedBoundary(_) => KwStatus::Boundary,
        Error::Quadrature { .. } | Error::NonConvergence { .. } => KwStatus::Numerical,
        Error::Invalid(_) => KwStatus::InvalidArgument,
        _ => KwStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (KwStatus, String)>) -> KwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside kinkwire".into());
            KwStatus::Internal
        }
    }
}

fn lift<T>(r: kinkwire::Result<T>) -> Result<T, (KwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (KwStatus, String) {
    (KwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (KwStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn kw_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// A wire on [a, b] nm whose curvature K|s|^(−alpha) turns the tangent by
/// π − theta. Dirichlet ends; `k` eigenpairs on `n_cells` cells.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn kw_problem_new(
    alpha: f64,
    theta: f64,
    a: f64,
    b: f64,
    mass_ratio: f64,
    n_cells: usize,
    k: usize,
    out: *mut *mut KwProblem,
) -> KwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let params = lift(PhysicalParams::new(a, b, mass_ratio))?;
        let amp = lift(power_law_amplitude(alpha, theta, a, b))?;
        let base = if amp == 0.0 {
            CurvatureSpec::Zero
        } else {
            lift(CurvatureSpec::power_law(amp, alpha))?
        };
        if n_cells < 2 || k == 0 {
            return Err((KwStatus::InvalidArgument, "need n_cells >= 2 and k >= 1".into()));
        }
        *out = Box::into_raw(Box::new(KwProblem {
            base,
            params,
            bc: BoundaryConditions::dirichlet(),
            n_cells,
            k,
        }));
        Ok(())
    })
}

/// Switch to Robin ends rho_a·ψ + ψ' = 0 at a and rho_b·ψ + ψ' = 0 at b.
///
/// # Safety
/// `problem` must be a live handle from [`kw_problem_new`].
#[no_mangle]
pub unsafe extern "C" fn kw_problem_set_robin(problem: *mut KwProblem, rho_a: f64, rho_b: f64) -> KwStatus {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| null("problem"))?;
        if !(rho_a.is_finite() && rho_b.is_finite()) {
            return Err((KwStatus::InvalidArgument, "robin coefficients must be finite".into()));
        }
        p.bc = canonical_bc(BcPreset::Robin { rho_a, rho_b });
        Ok(())
    })
}

/// Back to Dirichlet ends.
///
/// # Safety
/// `problem` must be a live handle from [`kw_problem_new`].
#[no_mangle]
pub unsafe extern "C" fn kw_problem_set_dirichlet(problem: *mut KwProblem) -> KwStatus {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| null("problem"))?;
        p.bc = BoundaryConditions::dirichlet();
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn kw_problem_free(problem: *mut KwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn put_spectrum(out: *mut *mut KwSpectrum, inner: Spectrum) {
    // SAFETY: callers checked `out`
    unsafe { *out = Box::into_raw(Box::new(KwSpectrum { inner })) };
}

/// Finite-difference spectrum of the wire with curvature smoothed at scale
/// `epsilon` nm.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn kw_solve_regularized(
    problem: *const KwProblem,
    epsilon: f64,
    out: *mut *mut KwSpectrum,
) -> KwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = deref(problem, "problem")?;
        let spec = if p.base.is_singular() {
            lift(regularize(&p.base, epsilon))?
        } else {
            p.base.clone()
        };
        let mesh = lift(Mesh::staggered(p.params.a, p.params.b, p.n_cells))?;
        let pot = lift(geometric_potential(&spec, &p.params, &mesh))?;
        let op = lift(assemble_regular(&pot, &p.params, &mesh, &p.bc))?;
        let mut s = lift(eigen_lowest(&op, p.k))?;
        s.epsilon = spec.epsilon();
        put_spectrum(out, s);
        Ok(())
    })
}

/// Spectrum of the unsmoothed wire in weak form. Dirichlet ends only, and
/// s = 0 must fall on a cell edge.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn kw_solve_singular(problem: *const KwProblem, out: *mut *mut KwSpectrum) -> KwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = deref(problem, "problem")?;
        let s = lift(solve_singular(&p.base, &p.params, &p.bc, p.n_cells, p.k))?;
        put_spectrum(out, s);
        Ok(())
    })
}

/// Sweep the smoothing scale over `epsilons` and extrapolate the ground level
/// to ε → 0.
///
/// # Safety
/// `problem` must be a live handle, `epsilons` must hold `n_epsilons` values
/// and `limit`, `uncertainty` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kw_ground_limit(
    problem: *const KwProblem,
    epsilons: *const f64,
    n_epsilons: usize,
    limit: *mut f64,
    uncertainty: *mut f64,
) -> KwStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        if epsilons.is_null() || limit.is_null() || uncertainty.is_null() {
            return Err(null("argument"));
        }
        let eps = std::slice::from_raw_parts(epsilons, n_epsilons);
        let problem = Problem::new(p.base.clone(), p.params, p.bc, 1, p.n_cells);
        let result = lift(sweep(&problem, eps))?;
        let track = result
            .tracks
            .first()
            .ok_or_else(|| (KwStatus::Numerical, "no eigenvalue track".to_string()))?;
        *limit = track.limit;
        *uncertainty = track.uncertainty;
        Ok(())
    })
}

/// Number of eigenpairs held.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kw_spectrum_len(spectrum: *const KwSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.inner.len())
}

/// Number of mesh nodes per eigenfunction.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kw_spectrum_nodes(spectrum: *const KwSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.inner.s.len())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (KwStatus, String)> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < src.len() {
        return Err((
            KwStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copy the eigenvalues (meV, ascending) into `buf`.
///
/// # Safety
/// `spectrum` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kw_spectrum_eigenvalues(spectrum: *const KwSpectrum, buf: *mut f64, len: usize) -> KwStatus {
    guard(|| copy_out(&deref(spectrum, "spectrum")?.inner.eigenvalues, buf, len))
}

/// Copy the mesh nodes (nm) into `buf`.
///
/// # Safety
/// `spectrum` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kw_spectrum_grid(spectrum: *const KwSpectrum, buf: *mut f64, len: usize) -> KwStatus {
    guard(|| copy_out(&deref(spectrum, "spectrum")?.inner.s, buf, len))
}

/// Copy eigenfunction `index` (normalized so h·Σψ² = 1) into `buf`.
///
/// # Safety
/// `spectrum` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kw_spectrum_eigenfunction(
    spectrum: *const KwSpectrum,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> KwStatus {
    guard(|| {
        let s = &deref(spectrum, "spectrum")?.inner;
        let psi = s.eigenfunctions.get(index).ok_or_else(|| {
            (
                KwStatus::InvalidArgument,
                format!("index {index} out of range for {} eigenpairs", s.len()),
            )
        })?;
        copy_out(psi, buf, len)
    })
}

/// # Safety
/// `spectrum` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn kw_spectrum_free(spectrum: *mut KwSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}
