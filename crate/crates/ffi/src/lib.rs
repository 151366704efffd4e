//! C ABI over `pfsprior`.
//!
//! Objects are opaque handles created by `*_new`/`*_parse`/`*_generate`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`PfsStatus`]; on failure the message is available from
//! [`pfs_last_error_message`] on the same thread until the next failing call.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::{DMatrix, DVector};
use pfsprior::marginal::{self, Dataset};
use pfsprior::sampler::{self, ChainConfig, Metrics, PosteriorSummary};
use pfsprior::{pfs, simdata, Error, Model, PriorFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Descriptor = 3,
    Inversion = 4,
    Degenerate = 5,
    Guard = 6,
    Io = 7,
    Parse = 8,
    BufferTooSmall = 9,
    InvalidUtf8 = 10,
    Panic = 11,
}

/// Opaque prior family.
pub struct PfsPrior(PriorFamily);

/// Opaque dataset.
pub struct PfsDataset(Dataset);

/// Opaque chain result with metrics against the dataset's true model.
pub struct PfsSummary {
    summary: PosteriorSummary,
    metrics: Metrics,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PfsStatus {
    match err {
        Error::Domain(_) => PfsStatus::Domain,
        Error::Descriptor(_) => PfsStatus::Descriptor,
        Error::Inversion(_) => PfsStatus::Inversion,
        Error::Degenerate(_) => PfsStatus::Degenerate,
        Error::Guard(_) => PfsStatus::Guard,
        Error::Parse { .. } => PfsStatus::Parse,
        Error::Io { .. } | Error::Csv { .. } | Error::Json { .. } => PfsStatus::Io,
    }
}

struct Fail(PfsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(PfsStatus::NullPointer, format!("{name} is NULL"))
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PfsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PfsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PfsStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn indices<'a>(ptr: *const usize, len: usize) -> Result<&'a [usize], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null("indices"));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn model_from(ptr: *const usize, len: usize, p: usize) -> Result<Model, Fail> {
    Ok(Model::new(indices(ptr, len)?.to_vec(), p)?)
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pfs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pfs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a descriptor such as `shp:phi=1,theta=1`.
#[no_mangle]
pub unsafe extern "C" fn pfs_prior_parse(descriptor: *const c_char, out: *mut *mut PfsPrior) -> PfsStatus {
    guard(|| {
        if descriptor.is_null() {
            return Err(null("descriptor"));
        }
        let text = CStr::from_ptr(descriptor)
            .to_str()
            .map_err(|e| Fail(PfsStatus::InvalidUtf8, e.to_string()))?;
        let family: PriorFamily = text.parse()?;
        write_out(out, Box::into_raw(Box::new(PfsPrior(family))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfs_prior_free(prior: *mut PfsPrior) {
    if !prior.is_null() {
        drop(Box::from_raw(prior));
    }
}

/// Canonical descriptor; free with [`pfs_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pfs_prior_describe(prior: *const PfsPrior, out: *mut *mut c_char) -> PfsStatus {
    guard(|| {
        let prior = as_ref(prior, "prior")?;
        let text = CString::new(prior.0.to_string()).expect("descriptors have no NUL");
        write_out(out, text.into_raw(), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfs_log_size_prior(prior: *const PfsPrior, k: usize, p: usize, out: *mut f64) -> PfsStatus {
    guard(|| {
        let prior = as_ref(prior, "prior")?;
        write_out(out, prior.0.log_size_prior(k, p)?, "out")
    })
}

/// `ln P(A|p)` for the model with the given 1-based indices.
#[no_mangle]
pub unsafe extern "C" fn pfs_log_model_prior(
    prior: *const PfsPrior,
    model: *const usize,
    model_len: usize,
    p: usize,
    out: *mut f64,
) -> PfsStatus {
    guard(|| {
        let prior = as_ref(prior, "prior")?;
        let model = model_from(model, model_len, p)?;
        write_out(out, prior.0.log_model_prior(&model)?, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfs_children_ratio(prior: *const PfsPrior, k: usize, p: usize, out: *mut f64) -> PfsStatus {
    guard(|| {
        let prior = as_ref(prior, "prior")?;
        write_out(out, prior.0.children_ratio(k, p)?, "out")
    })
}

/// Writes the `p + 1` stopping probabilities `Q_0..Q_p` into `out`.
#[no_mangle]
pub unsafe extern "C" fn pfs_stopping_schedule(
    prior: *const PfsPrior,
    p: usize,
    out: *mut f64,
    out_len: usize,
) -> PfsStatus {
    guard(|| {
        let prior = as_ref(prior, "prior")?;
        let schedule = pfs::stopping_schedule(&prior.0, p)?;
        let q = schedule.q_stop();
        if out_len < q.len() {
            return Err(Fail(PfsStatus::BufferTooSmall, format!("need {} slots", q.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(q.as_ptr(), out, q.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfs_log_bf_zellner_siow(n: usize, k_eff: usize, r_squared: f64, out: *mut f64) -> PfsStatus {
    guard(|| write_out(out, marginal::log_bf_zellner_siow(n, k_eff, r_squared)?, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn pfs_snr_to_r2(snr: f64, out: *mut f64) -> PfsStatus {
    guard(|| write_out(out, simdata::snr_to_r2(snr)?, "out"))
}

/// Simulates a dataset with equal true coefficients.
#[no_mangle]
pub unsafe extern "C" fn pfs_dataset_generate(
    n: usize,
    p: usize,
    p_true: usize,
    snr: f64,
    seed: u64,
    out: *mut *mut PfsDataset,
) -> PfsStatus {
    guard(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = simdata::generate_dataset(n, p, p_true, snr, simdata::CoefficientScheme::Equal, &mut rng)?;
        write_out(out, Box::into_raw(Box::new(PfsDataset(data))), "out")
    })
}

/// Wraps caller data: `y` has `n` entries, `x` is `n × p` in row-major
/// order. The true model is recorded as empty.
#[no_mangle]
pub unsafe extern "C" fn pfs_dataset_from_arrays(
    y: *const f64,
    x: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut PfsDataset,
) -> PfsStatus {
    guard(|| {
        if y.is_null() || (x.is_null() && n * p > 0) {
            return Err(null("y/x"));
        }
        let y = DVector::from_column_slice(slice::from_raw_parts(y, n));
        let x = if n * p == 0 {
            DMatrix::zeros(n, p)
        } else {
            DMatrix::from_row_slice(n, p, slice::from_raw_parts(x, n * p))
        };
        let data = Dataset::new(y, x, Model::empty(p), vec![0.0; p], 1.0)?;
        write_out(out, Box::into_raw(Box::new(PfsDataset(data))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfs_dataset_free(data: *mut PfsDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pfs_dataset_dims(data: *const PfsDataset, n: *mut usize, p: *mut usize) -> PfsStatus {
    guard(|| {
        let data = as_ref(data, "data")?;
        write_out(n, data.0.n(), "n")?;
        write_out(p, data.0.p(), "p")
    })
}

/// Copies the true model's 1-based indices; `len` receives the model size
/// even when `cap` is too small.
#[no_mangle]
pub unsafe extern "C" fn pfs_dataset_true_model(
    data: *const PfsDataset,
    out: *mut usize,
    cap: usize,
    len: *mut usize,
) -> PfsStatus {
    guard(|| {
        let data = as_ref(data, "data")?;
        let idx = data.0.true_model().indices();
        write_out(len, idx.len(), "len")?;
        if cap < idx.len() {
            return Err(Fail(PfsStatus::BufferTooSmall, format!("need {} slots", idx.len())));
        }
        if !idx.is_empty() {
            if out.is_null() {
                return Err(null("out"));
            }
            ptr::copy_nonoverlapping(idx.as_ptr(), out, idx.len());
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfs_fit_stats(
    data: *const PfsDataset,
    model: *const usize,
    model_len: usize,
    r_squared: *mut f64,
    effective_rank: *mut usize,
) -> PfsStatus {
    guard(|| {
        let data = as_ref(data, "data")?;
        let model = model_from(model, model_len, data.0.p())?;
        let fit = marginal::fit_stats(&data.0, &model)?;
        write_out(r_squared, fit.r_squared, "r_squared")?;
        write_out(effective_rank, fit.effective_rank, "effective_rank")
    })
}

/// Runs one chain with equal kernel weights from the empty model.
#[no_mangle]
pub unsafe extern "C" fn pfs_run_chain(
    prior: *const PfsPrior,
    data: *const PfsDataset,
    draws: usize,
    burn_in: usize,
    seed: u64,
    out: *mut *mut PfsSummary,
) -> PfsStatus {
    guard(|| {
        let prior = as_ref(prior, "prior")?;
        let data = as_ref(data, "data")?;
        let mut config = ChainConfig::new(draws, seed);
        config.burn_in = burn_in;
        let summary = sampler::run_chain(&config, &prior.0, &data.0)?;
        let metrics = sampler::summarize(&summary, data.0.true_model());
        write_out(out, Box::into_raw(Box::new(PfsSummary { summary, metrics })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfs_summary_free(summary: *mut PfsSummary) {
    if !summary.is_null() {
        drop(Box::from_raw(summary));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pfs_summary_total(summary: *const PfsSummary, out: *mut u64) -> PfsStatus {
    guard(|| write_out(out, as_ref(summary, "summary")?.summary.total(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn pfs_summary_true_model_probability(summary: *const PfsSummary, out: *mut f64) -> PfsStatus {
    guard(|| write_out(out, as_ref(summary, "summary")?.metrics.true_model_probability, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn pfs_summary_models_for_95(summary: *const PfsSummary, out: *mut usize) -> PfsStatus {
    guard(|| write_out(out, as_ref(summary, "summary")?.metrics.models_for_95, "out"))
}

/// Visit frequency of one model.
#[no_mangle]
pub unsafe extern "C" fn pfs_summary_model_probability(
    summary: *const PfsSummary,
    model: *const usize,
    model_len: usize,
    out: *mut f64,
) -> PfsStatus {
    guard(|| {
        let s = as_ref(summary, "summary")?;
        let model = model_from(model, model_len, s.summary.p())?;
        write_out(out, s.summary.probability(&model), "out")
    })
}

/// Writes the `p` inclusion frequencies into `out`.
#[no_mangle]
pub unsafe extern "C" fn pfs_summary_inclusion(summary: *const PfsSummary, out: *mut f64, cap: usize) -> PfsStatus {
    guard(|| {
        let s = as_ref(summary, "summary")?;
        let inc = &s.metrics.inclusion_probabilities;
        if cap < inc.len() {
            return Err(Fail(PfsStatus::BufferTooSmall, format!("need {} slots", inc.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(inc.as_ptr(), out, inc.len());
        Ok(())
    })
}
