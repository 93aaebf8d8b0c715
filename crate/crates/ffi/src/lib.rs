//! C ABI over `bayesrom`.
//!
//! Every function returns a [`BromStatus`]; on failure the message is
//! available from [`brom_last_error_message`] on the same thread. Objects are
//! opaque handles released with their `_free` function. Matrices cross the
//! boundary as row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use bayesrom::active::{next_sample, AcquisitionScore};
use bayesrom::experiment::io::{read_matrix, write_matrix};
use bayesrom::models::{
    build_burgers_fom, build_burgers_initial, build_heat_fom, build_heat_initial, integrate, InstabilityGuard,
    PolynomialAffineSystem, TimeGrid,
};
use bayesrom::opinf::{sample_operators, solve_posterior, OperatorPosterior, RegressionData};
use bayesrom::Error;
use nalgebra::DMatrix;
use rand::SeedableRng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BromStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    RankDeficient = 4,
    NumericalDegeneracy = 5,
    Io = 6,
    Format = 7,
    Panic = 8,
    Other = 9,
}

/// Full-order polynomial affine system.
pub struct BromSystem {
    system: PolynomialAffineSystem,
    initial: Vec<f64>,
}

/// Gaussian posterior over operator rows.
pub struct BromPosterior {
    posterior: OperatorPosterior,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(err: &Error) -> BromStatus {
    match err {
        Error::InvalidDiscretization(_) | Error::InvalidArgument(_) | Error::EmptyGrid | Error::EmptyScores | Error::Config(_) => {
            BromStatus::InvalidArgument
        }
        Error::DimensionMismatch { .. } => BromStatus::DimensionMismatch,
        Error::RankDeficient { .. } => BromStatus::RankDeficient,
        Error::NumericalDegeneracy(_) | Error::DegenerateData(_) | Error::InsufficientData(_) | Error::ZeroDenominator(_) => {
            BromStatus::NumericalDegeneracy
        }
        Error::Io(_) => BromStatus::Io,
        Error::Format(_) | Error::Csv(_) | Error::Json(_) => BromStatus::Format,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BromStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BromStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            BromStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            BromStatus::Panic
        }
    }
}

unsafe fn slice_in<'a>(ptr: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn slice_out<'a>(ptr: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out_ptr<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(what))
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), Failure> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found }.into())
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, Failure> {
    if path.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

fn row_major(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

fn write_row_major(m: &DMatrix<f64>, out: &mut [f64]) {
    let cols = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..cols {
            out[i * cols + j] = m[(i, j)];
        }
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn brom_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn brom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Diffusion-reaction model on `n` nodes of `[0, length]`; parameters `(κ, ρ)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn brom_system_heat_new(n: usize, length: f64, out: *mut *mut BromSystem) -> BromStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let system = build_heat_fom(n, length)?;
        let initial = build_heat_initial(n, length)?;
        *out = Box::into_raw(Box::new(BromSystem { system, initial }));
        Ok(())
    })
}

/// Two-dimensional Burgers model with `n_side` interior points per direction;
/// parameter `ν`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn brom_system_burgers_new(n_side: usize, out: *mut *mut BromSystem) -> BromStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let system = build_burgers_fom(n_side)?;
        let initial = build_burgers_initial(n_side)?;
        *out = Box::into_raw(Box::new(BromSystem { system, initial }));
        Ok(())
    })
}

/// # Safety
/// `system` must come from a `brom_system_*_new` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn brom_system_free(system: *mut BromSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// # Safety
/// `system` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn brom_system_dims(system: *const BromSystem, state_dim: *mut usize, param_dim: *mut usize) -> BromStatus {
    guard(|| {
        let sys = system.as_ref().ok_or(Failure::Null("system"))?;
        *out_ptr(state_dim, "state_dim")? = sys.system.state_dim();
        *out_ptr(param_dim, "param_dim")? = sys.system.param_dim();
        Ok(())
    })
}

/// Copies the initial state into `out` (length `state_dim`).
///
/// # Safety
/// `system` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn brom_system_initial_state(system: *const BromSystem, out: *mut f64, len: usize) -> BromStatus {
    guard(|| {
        let sys = system.as_ref().ok_or(Failure::Null("system"))?;
        check_len("initial state buffer", sys.initial.len(), len)?;
        slice_out(out, len, "out")?.copy_from_slice(&sys.initial);
        Ok(())
    })
}

/// Evaluates `f(q; ξ)` into `out`.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn brom_system_rhs(
    system: *const BromSystem,
    xi: *const f64,
    xi_len: usize,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> BromStatus {
    guard(|| {
        let sys = system.as_ref().ok_or(Failure::Null("system"))?;
        let xi = slice_in(xi, xi_len, "xi")?;
        check_len("parameter", sys.system.param_dim(), xi.len())?;
        let q = slice_in(q, n, "q")?;
        let out = slice_out(out, n, "out")?;
        sys.system.evaluate(xi, q, &[], out)?;
        Ok(())
    })
}

/// Integrates with RK4 from `q0` and writes the `n_t` sampled states
/// time-major into `out` (`n_t × n`). `*stable` is 0 when the norm exceeded
/// `guard_bound`; samples after the blowup are left untouched.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn brom_system_integrate(
    system: *const BromSystem,
    xi: *const f64,
    xi_len: usize,
    q0: *const f64,
    n: usize,
    t0: f64,
    tf: f64,
    n_t: usize,
    substeps: usize,
    guard_bound: f64,
    out: *mut f64,
    out_len: usize,
    stable: *mut i32,
) -> BromStatus {
    guard(|| {
        let sys = system.as_ref().ok_or(Failure::Null("system"))?;
        let xi = slice_in(xi, xi_len, "xi")?;
        check_len("parameter", sys.system.param_dim(), xi.len())?;
        let q0 = slice_in(q0, n, "q0")?;
        check_len("output buffer", n * n_t, out_len)?;
        let out = slice_out(out, out_len, "out")?;
        let stable = out_ptr(stable, "stable")?;
        let grid = TimeGrid::with_substeps(t0, tf, n_t, substeps)?;
        let field = sys.system.at(xi, None)?;
        let traj = integrate(&field, q0, &grid, &InstabilityGuard::new(guard_bound)?)?;
        for (j, state) in traj.states.iter().enumerate() {
            out[j * n..(j + 1) * n].copy_from_slice(state);
        }
        *stable = i32::from(traj.stable);
        Ok(())
    })
}

/// Solves the regularized regression for data `D` (`n × d`), targets `Z`
/// (`n × r`), and regularizer diagonal `gamma` (length `d`).
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn brom_posterior_solve(
    data: *const f64,
    n: usize,
    d: usize,
    targets: *const f64,
    r: usize,
    gamma: *const f64,
    out: *mut *mut BromPosterior,
) -> BromStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let data = row_major(n, d, slice_in(data, n * d, "data")?);
        let targets = row_major(n, r, slice_in(targets, n * r, "targets")?);
        let gamma = slice_in(gamma, d, "gamma")?;
        let regression = RegressionData::new(data, targets, (0..n).map(|j| (0, j)).collect())?;
        let posterior = solve_posterior(&regression, gamma)?;
        *out = Box::into_raw(Box::new(BromPosterior { posterior }));
        Ok(())
    })
}

/// # Safety
/// `posterior` must come from `brom_posterior_solve` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn brom_posterior_free(posterior: *mut BromPosterior) {
    if !posterior.is_null() {
        drop(Box::from_raw(posterior));
    }
}

/// # Safety
/// `posterior` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn brom_posterior_dims(posterior: *const BromPosterior, r: *mut usize, d: *mut usize) -> BromStatus {
    guard(|| {
        let p = posterior.as_ref().ok_or(Failure::Null("posterior"))?;
        *out_ptr(r, "r")? = p.posterior.reduced_dim();
        *out_ptr(d, "d")? = p.posterior.width();
        Ok(())
    })
}

/// Posterior mean operator matrix, row-major `r × d`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn brom_posterior_mean(posterior: *const BromPosterior, out: *mut f64, len: usize) -> BromStatus {
    guard(|| {
        let p = posterior.as_ref().ok_or(Failure::Null("posterior"))?;
        let means = p.posterior.means();
        check_len("mean buffer", means.len(), len)?;
        write_row_major(means, slice_out(out, len, "out")?);
        Ok(())
    })
}

/// Noise variances `σ_k²`, length `r`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn brom_posterior_noise_variance(posterior: *const BromPosterior, out: *mut f64, len: usize) -> BromStatus {
    guard(|| {
        let p = posterior.as_ref().ok_or(Failure::Null("posterior"))?;
        let v = p.posterior.noise_variances();
        check_len("variance buffer", v.len(), len)?;
        slice_out(out, len, "out")?.copy_from_slice(v);
        Ok(())
    })
}

/// Covariance `Σ_k`, row-major `d × d`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn brom_posterior_covariance(posterior: *const BromPosterior, k: usize, out: *mut f64, len: usize) -> BromStatus {
    guard(|| {
        let p = posterior.as_ref().ok_or(Failure::Null("posterior"))?;
        if k >= p.posterior.reduced_dim() {
            return Err(Error::InvalidArgument(format!("row {k} out of range")).into());
        }
        let cov = p.posterior.covariance(k);
        check_len("covariance buffer", cov.len(), len)?;
        write_row_major(&cov, slice_out(out, len, "out")?);
        Ok(())
    })
}

/// Draws `n_draws` operator matrices, each row-major `r × d`, stored
/// consecutively in `out`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn brom_posterior_sample(
    posterior: *const BromPosterior,
    n_draws: usize,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> BromStatus {
    guard(|| {
        let p = posterior.as_ref().ok_or(Failure::Null("posterior"))?;
        let size = p.posterior.reduced_dim() * p.posterior.width();
        check_len("sample buffer", n_draws * size, len)?;
        let out = slice_out(out, len, "out")?;
        for (l, op) in sample_operators(&p.posterior, n_draws, seed)?.iter().enumerate() {
            write_row_major(op, &mut out[l * size..(l + 1) * size]);
        }
        Ok(())
    })
}

/// Selects the next training candidate. `omega[i]` is NaN when absent.
/// `indices` holds the candidate index of each score.
///
/// # Safety
/// Arrays must hold `n` entries; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn brom_next_sample(
    indices: *const usize,
    alpha: *const f64,
    omega: *const f64,
    n: usize,
    seed: u64,
    out: *mut usize,
) -> BromStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if n > 0 && indices.is_null() {
            return Err(Failure::Null("indices"));
        }
        let indices: &[usize] = if n == 0 { &[] } else { slice::from_raw_parts(indices, n) };
        let alpha = slice_in(alpha, n, "alpha")?;
        let omega = slice_in(omega, n, "omega")?;
        let scores: Vec<(usize, AcquisitionScore)> = (0..n)
            .map(|i| {
                (
                    indices[i],
                    AcquisitionScore {
                        alpha: alpha[i],
                        omega: (!omega[i].is_nan()).then_some(omega[i]),
                    },
                )
            })
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        *out = next_sample(&scores, &mut rng)?;
        Ok(())
    })
}

/// Writes a row-major `rows × cols` matrix in the PROMDAT1 format.
///
/// # Safety
/// `path` must be a NUL-terminated string; `data` must hold `rows*cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn brom_matrix_write(path: *const c_char, data: *const f64, rows: usize, cols: usize) -> BromStatus {
    guard(|| {
        let path = path_arg(path)?;
        let m = row_major(rows, cols, slice_in(data, rows * cols, "data")?);
        write_matrix(path, &m)?;
        Ok(())
    })
}

/// Reads the shape of a PROMDAT1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn brom_matrix_read_dims(path: *const c_char, rows: *mut usize, cols: *mut usize) -> BromStatus {
    guard(|| {
        let m = read_matrix(path_arg(path)?)?;
        *out_ptr(rows, "rows")? = m.nrows();
        *out_ptr(cols, "cols")? = m.ncols();
        Ok(())
    })
}

/// Reads a PROMDAT1 file row-major into `out`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn brom_matrix_read(path: *const c_char, out: *mut f64, len: usize) -> BromStatus {
    guard(|| {
        let m = read_matrix(path_arg(path)?)?;
        check_len("matrix buffer", m.len(), len)?;
        write_row_major(&m, slice_out(out, len, "out")?);
        Ok(())
    })
}
