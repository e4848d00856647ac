//! C interface to `crowdcode`.
//!
//! Matrices cross the boundary as opaque [`CcCodeMatrix`] handles created by
//! the `cc_*matrix*` constructors and released with [`cc_code_matrix_free`].
//! Every fallible call returns a [`CcStatus`]; on failure
//! [`cc_last_error`] describes the problem. Output pointers are written only
//! on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use crowdcode::analytic::{
    chernoff_bound, pe_iid_coding, pe_iid_majority, pe_paired_coding, pe_paired_majority, Pairing,
};
use crowdcode::codebook::{majority_equivalent_matrix, random_balanced_matrix, AnswerVector, CodeMatrix};
use crowdcode::crowd::{group_assignment_prob, CrowdConfig, CrowdVariant, GroupAssignment, ReliabilityDist};
use crowdcode::fusion::{decode_hamming, Answer};
use crowdcode::seed::stream_rng;
use crowdcode::simkit::{run_mc, SimConfig};
use crowdcode::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The exact evaluator refused the size; use Monte Carlo.
    CapExceeded = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

/// Opaque code matrix handle.
pub struct CcCodeMatrix {
    inner: CodeMatrix,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcDistKind {
    /// Spammers at `1/M`, hammers at 1; uses `quality`.
    SpammerHammer = 0,
    /// Uses `alpha` and `beta`.
    Beta = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcVariant {
    Iid = 0,
    /// Uses `rho_corr`.
    Paired = 1,
    /// Uses `kappa` and `truncation`.
    LatentGroups = 2,
    /// Uses `rho_corr`, `kappa` and `truncation`.
    LatentGroupsPaired = 3,
}

/// Crowd description for [`cc_run_mc`]. Unused fields are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CcCrowd {
    pub dist: CcDistKind,
    pub quality: f64,
    pub alpha: f64,
    pub beta: f64,
    pub variant: CcVariant,
    pub rho_corr: f64,
    pub kappa: f64,
    /// 0 selects the default truncation.
    pub truncation: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CcMcResult {
    pub pe_coding: f64,
    pub stderr_coding: f64,
    /// False when majority voting was not applicable (M not a power of two).
    pub has_majority: bool,
    pub pe_majority: f64,
    pub stderr_majority: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(e: Error) -> CcStatus {
    let status = match e {
        Error::EnumerationCap { .. } => CcStatus::CapExceeded,
        Error::Io(_) => CcStatus::Io,
        _ => CcStatus::InvalidArgument,
    };
    set_error(e.to_string());
    status
}

fn null(what: &str) -> CcStatus {
    set_error(format!("{what} is null"));
    CcStatus::NullPointer
}

/// Runs `f`, turning panics into [`CcStatus::Internal`].
fn guard(f: impl FnOnce() -> Result<(), CcStatus>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            CcStatus::Internal
        }
    }
}

unsafe fn matrix<'a>(a: *const CcCodeMatrix) -> Result<&'a CodeMatrix, CcStatus> {
    a.as_ref().map(|h| &h.inner).ok_or_else(|| null("matrix"))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), CcStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn give(out: *mut *mut CcCodeMatrix, a: CodeMatrix) -> Result<(), CcStatus> {
    write(out, Box::into_raw(Box::new(CcCodeMatrix { inner: a })), "out")
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Builds an `m x n` matrix from column integers (bit `l` is row `l`).
///
/// # Safety
/// `columns` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_code_matrix_from_columns(
    columns: *const u64,
    n: usize,
    m: usize,
    out: *mut *mut CcCodeMatrix,
) -> CcStatus {
    guard(|| {
        if columns.is_null() {
            return Err(null("columns"));
        }
        let cols = std::slice::from_raw_parts(columns, n);
        give(out, CodeMatrix::from_column_ints(cols, m).map_err(fail)?)
    })
}

/// Parses the JSON matrix format `{"m": M, "columns": [...]}`.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_code_matrix_from_json(json: *const c_char, out: *mut *mut CcCodeMatrix) -> CcStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| fail(Error::InvalidParameter(e.to_string())))?;
        give(out, CodeMatrix::from_json(text).map_err(fail)?)
    })
}

/// Serializes a matrix to JSON. Free the string with [`cc_string_free`].
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_code_matrix_to_json(a: *const CcCodeMatrix, out: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let json = CString::new(matrix(a)?.to_json()).expect("JSON has no nul bytes");
        write(out, json.into_raw(), "out")
    })
}

/// # Safety
/// `s` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `a` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cc_code_matrix_free(a: *mut CcCodeMatrix) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Number of classes (rows), or 0 for a null handle.
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_code_matrix_num_classes(a: *const CcCodeMatrix) -> usize {
    a.as_ref().map_or(0, |h| h.inner.num_classes())
}

/// Number of workers (columns), or 0 for a null handle.
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_code_matrix_num_workers(a: *const CcCodeMatrix) -> usize {
    a.as_ref().map_or(0, |h| h.inner.num_workers())
}

/// Copies the column integers into `out`, which holds `len` values.
///
/// # Safety
/// `a` must be a live handle; `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn cc_code_matrix_columns(a: *const CcCodeMatrix, out: *mut u64, len: usize) -> CcStatus {
    guard(|| {
        let a = matrix(a)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != a.num_workers() {
            return Err(fail(Error::LengthMismatch {
                expected: a.num_workers(),
                found: len,
            }));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(a.columns());
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_majority_equivalent_matrix(m: usize, n: usize, out: *mut *mut CcCodeMatrix) -> CcStatus {
    guard(|| give(out, majority_equivalent_matrix(m, n).map_err(fail)?))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_random_balanced_matrix(
    m: usize,
    n: usize,
    seed: u64,
    out: *mut *mut CcCodeMatrix,
) -> CcStatus {
    guard(|| give(out, random_balanced_matrix(m, n, seed).map_err(fail)?))
}

/// Exact error probability of Hamming fusion, i.i.d. reliabilities.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_pe_iid_coding(a: *const CcCodeMatrix, mu: f64, out: *mut f64) -> CcStatus {
    guard(|| write(out, pe_iid_coding(matrix(a)?, mu).map_err(fail)?.value, "out"))
}

/// Exact error probability of Hamming fusion with partners `(2k, 2k+1)`
/// whose reliabilities have covariance `rho`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_pe_paired_coding(a: *const CcCodeMatrix, mu: f64, rho: f64, out: *mut f64) -> CcStatus {
    guard(|| {
        let a = matrix(a)?;
        let pairing = Pairing::adjacent(a.num_workers()).map_err(fail)?;
        write(out, pe_paired_coding(a, mu, rho, &pairing).map_err(fail)?.value, "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_pe_iid_majority(m: usize, n: usize, mu: f64, out: *mut f64) -> CcStatus {
    guard(|| write(out, pe_iid_majority(m, n, mu).map_err(fail)?.value, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_pe_paired_majority(m: usize, n: usize, mu: f64, rho: f64, out: *mut f64) -> CcStatus {
    guard(|| write(out, pe_paired_majority(m, n, mu, rho).map_err(fail)?.value, "out"))
}

/// Large-deviations bound for per-worker reliabilities `p`. When the margin
/// condition fails, `*holds` is false and `*out` is NaN.
///
/// # Safety
/// `a` must be a live handle, `p` must hold `len` values, and `out` and
/// `holds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chernoff_bound(
    a: *const CcCodeMatrix,
    p: *const f64,
    len: usize,
    out: *mut f64,
    holds: *mut bool,
) -> CcStatus {
    guard(|| {
        let a = matrix(a)?;
        if p.is_null() {
            return Err(null("p"));
        }
        if out.is_null() || holds.is_null() {
            return Err(null("out"));
        }
        let report = chernoff_bound(a, std::slice::from_raw_parts(p, len)).map_err(fail)?;
        write(out, report.value.unwrap_or(f64::NAN), "out")?;
        write(holds, report.condition_holds, "holds")
    })
}

/// Minimum Hamming distance decoding of `answers` (0, 1, or -1 for
/// missing); ties are broken with a generator seeded by `seed`.
///
/// # Safety
/// `a` must be a live handle, `answers` must hold `len` values, and
/// `class_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_decode_hamming(
    a: *const CcCodeMatrix,
    answers: *const i8,
    len: usize,
    seed: u64,
    class_out: *mut usize,
) -> CcStatus {
    guard(|| {
        let a = matrix(a)?;
        if answers.is_null() {
            return Err(null("answers"));
        }
        let parsed = std::slice::from_raw_parts(answers, len)
            .iter()
            .map(|&v| match v {
                0 => Ok(Answer::Zero),
                1 => Ok(Answer::One),
                -1 => Ok(Answer::Missing),
                other => Err(fail(Error::InvalidParameter(format!("answer {other} is not 0, 1 or -1")))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let u = AnswerVector::from_answers(&parsed);
        let d = decode_hamming(a, &u, &mut stream_rng(seed, 0)).map_err(fail)?;
        write(class_out, d.class, "class_out")
    })
}

/// Probability of the group labelling `labels` (each `< truncation`) under
/// stick-breaking with concentration `kappa`.
///
/// # Safety
/// `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_group_assignment_prob(
    labels: *const usize,
    n: usize,
    truncation: usize,
    kappa: f64,
    out: *mut f64,
) -> CcStatus {
    guard(|| {
        if labels.is_null() {
            return Err(null("labels"));
        }
        let s = GroupAssignment::new(std::slice::from_raw_parts(labels, n).to_vec(), truncation).map_err(fail)?;
        write(out, group_assignment_prob(&s, kappa).map_err(fail)?, "out")
    })
}

/// Monte Carlo estimate of both fusion rules with a fresh crowd per trial.
///
/// # Safety
/// `a` must be a live handle; `crowd` must be readable; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cc_run_mc(
    a: *const CcCodeMatrix,
    crowd: *const CcCrowd,
    trials: u64,
    seed: u64,
    out: *mut CcMcResult,
) -> CcStatus {
    guard(|| {
        let a = matrix(a)?;
        let c = crowd.as_ref().ok_or_else(|| null("crowd"))?;
        let m = a.num_classes();
        let config = CrowdConfig {
            variant: match c.variant {
                CcVariant::Iid => CrowdVariant::Iid,
                CcVariant::Paired => CrowdVariant::Paired,
                CcVariant::LatentGroups => CrowdVariant::LatentGroups,
                CcVariant::LatentGroupsPaired => CrowdVariant::LatentGroupsPaired,
            },
            dist: match c.dist {
                CcDistKind::SpammerHammer => ReliabilityDist::spammer_hammer(c.quality, m),
                CcDistKind::Beta => ReliabilityDist::Beta {
                    alpha: c.alpha,
                    beta: c.beta,
                },
            },
            rho_corr: Some(c.rho_corr),
            kappa: Some(c.kappa),
            truncation: (c.truncation > 0).then_some(c.truncation),
        };
        let spec = config.to_spec().map_err(fail)?;
        let result = run_mc(&SimConfig::new(a.clone(), spec, trials, seed)).map_err(fail)?;
        let coding = result.coding.expect("matrix supplied");
        let mut r = CcMcResult {
            pe_coding: coding.pe,
            stderr_coding: coding.stderr,
            ..CcMcResult::default()
        };
        if let Some(maj) = result.majority {
            r.has_majority = true;
            r.pe_majority = maj.pe;
            r.stderr_majority = maj.stderr;
        }
        write(out, r, "out")
    })
}
