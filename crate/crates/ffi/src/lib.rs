//! C ABI over `egpd-lasso`.
//!
//! Every function returns an [`EgpdStatus`] and writes results through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`egpd_last_error`]. Handles are opaque and must be released with their
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use egpd_lasso::cli::{cmd_fit, FitArtifacts, RunConfig};
use egpd_lasso::diagnostics::{density_grid, CoefficientSummary};
use egpd_lasso::egpd::{Carrier, EgpdParams, GpdParams};
use egpd_lasso::model::Layout;
use egpd_lasso::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgpdStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    Data = 4,
    Numerical = 5,
    Panic = 6,
}

impl From<&Error> for EgpdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::InvalidRegion(_) => EgpdStatus::Domain,
            Error::Config(_) => EgpdStatus::Config,
            Error::Data { .. } | Error::Io { .. } => EgpdStatus::Data,
            Error::Numerical(_) => EgpdStatus::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: EgpdStatus, message: &str) -> EgpdStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> Result<(), (EgpdStatus, String)>) -> EgpdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EgpdStatus::Ok,
        Ok(Err((status, message))) => fail(status, &message),
        Err(_) => fail(EgpdStatus::Panic, "internal panic"),
    }
}

fn lift(e: Error) -> (EgpdStatus, String) {
    (EgpdStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (EgpdStatus, String) {
    (EgpdStatus::NullPointer, format!("{what} is NULL"))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn egpd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn egpd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// An EGPD with fixed parameters.
pub struct EgpdDist {
    params: EgpdParams,
}

fn new_dist(carrier: Result<Carrier, Error>, sigma: f64, xi: f64, out: *mut *mut EgpdDist) -> EgpdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = carrier.and_then(|c| EgpdParams::new(c, GpdParams::new(sigma, xi)?)).map_err(lift)?;
        let handle = Box::into_raw(Box::new(EgpdDist { params }));
        // SAFETY: `out` is non-null and the caller provides writable storage.
        unsafe { *out = handle };
        Ok(())
    })
}

/// Canonical EGPD, `G(v) = v^kappa`.
///
/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_new_power(kappa: f64, sigma: f64, xi: f64, out: *mut *mut EgpdDist) -> EgpdStatus {
    new_dist(Carrier::power(kappa), sigma, xi, out)
}

/// Beta-carrier EGPD.
///
/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_new_beta(kappa: f64, sigma: f64, xi: f64, out: *mut *mut EgpdDist) -> EgpdStatus {
    new_dist(Carrier::beta(kappa), sigma, xi, out)
}

/// Mixture carrier `pi v^kappa1 + (1 - pi) v^kappa2`.
///
/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_new_mixture(
    pi: f64,
    kappa1: f64,
    kappa2: f64,
    sigma: f64,
    xi: f64,
    out: *mut *mut EgpdDist,
) -> EgpdStatus {
    new_dist(Carrier::mixture(pi, kappa1, kappa2), sigma, xi, out)
}

/// # Safety
/// `dist` must be NULL or a handle from an `egpd_dist_new_*` call that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_free(dist: *mut EgpdDist) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

unsafe fn eval(dist: *const EgpdDist, out: *mut f64, f: impl FnOnce(&EgpdParams) -> Result<f64, Error>) -> EgpdStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = f(&d.params).map_err(lift)?;
        Ok(())
    })
}

/// # Safety
/// `dist` must be a live handle and `out` writable, or either may be NULL.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_cdf(dist: *const EgpdDist, y: f64, out: *mut f64) -> EgpdStatus {
    eval(dist, out, |p| p.cdf(y))
}

/// Survival function, accurate in the upper tail.
///
/// # Safety
/// `dist` must be a live handle and `out` writable, or either may be NULL.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_sf(dist: *const EgpdDist, y: f64, out: *mut f64) -> EgpdStatus {
    eval(dist, out, |p| p.sf(y))
}

/// Log density; `-inf` outside the support.
///
/// # Safety
/// `dist` must be a live handle and `out` writable, or either may be NULL.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_logpdf(dist: *const EgpdDist, y: f64, out: *mut f64) -> EgpdStatus {
    eval(dist, out, |p| {
        if y.is_nan() {
            return Err(Error::Domain("y is NaN".into()));
        }
        Ok(p.log_pdf(y))
    })
}

/// # Safety
/// `dist` must be a live handle and `out` writable, or either may be NULL.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_quantile(dist: *const EgpdDist, prob: f64, out: *mut f64) -> EgpdStatus {
    eval(dist, out, |p| p.quantile(prob))
}

/// `n` draws into `out`, fully determined by `seed`.
///
/// # Safety
/// `dist` must be a live handle and `out` must hold `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn egpd_dist_sample(dist: *const EgpdDist, seed: u64, n: usize, out: *mut f64) -> EgpdStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        if n == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let buf = std::slice::from_raw_parts_mut(out, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in buf.iter_mut() {
            *v = d.params.sample_one(&mut rng);
        }
        Ok(())
    })
}

/// Posterior summary of one coordinate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgpdSummary {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    /// NaN when too few draws were available.
    pub ess: f64,
    pub geweke_z: f64,
    pub selected: bool,
}

impl From<&CoefficientSummary> for EgpdSummary {
    fn from(s: &CoefficientSummary) -> Self {
        Self {
            mean: s.mean,
            sd: s.sd,
            lower: s.lower,
            upper: s.upper,
            ess: s.ess.unwrap_or(f64::NAN),
            geweke_z: s.geweke_z.unwrap_or(f64::NAN),
            selected: s.selected,
        }
    }
}

/// A posterior fit: summaries and chains loaded from a fit directory.
pub struct EgpdFit {
    artifacts: FitArtifacts,
    layout: Layout,
    names: Vec<CString>,
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, (EgpdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (EgpdStatus::Config, format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn open_fit(dir: &std::path::Path) -> Result<EgpdFit, Error> {
    let artifacts = FitArtifacts::load(dir)?;
    let layout = artifacts.report.model.layout(&artifacts.report.column_names)?;
    let names = artifacts
        .samples
        .coordinate_names
        .iter()
        .map(|n| CString::new(n.as_str()).unwrap_or_default())
        .collect();
    Ok(EgpdFit { artifacts, layout, names })
}

unsafe fn store_fit(fit: EgpdFit, out: *mut *mut EgpdFit) {
    *out = Box::into_raw(Box::new(fit));
}

/// Run a fit from a TOML configuration file, writing artifacts to `out_dir`
/// (the configured output directory when NULL), and open the result.
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn egpd_fit_run(config_path: *const c_char, out_dir: *const c_char, out: *mut *mut EgpdFit) -> EgpdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = RunConfig::load(&path_arg(config_path, "config_path")?).map_err(lift)?;
        let dir = if out_dir.is_null() { cfg.output.directory.clone() } else { path_arg(out_dir, "out_dir")? };
        cmd_fit(&cfg, &dir).map_err(lift)?;
        store_fit(open_fit(&dir).map_err(lift)?, out);
        Ok(())
    })
}

/// Open the artifacts of an earlier fit.
///
/// # Safety
/// `dir` must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn egpd_fit_open(dir: *const c_char, out: *mut *mut EgpdFit) -> EgpdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        store_fit(open_fit(&path_arg(dir, "dir")?).map_err(lift)?, out);
        Ok(())
    })
}

/// # Safety
/// `fit` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn egpd_fit_free(fit: *mut EgpdFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Number of sampled coordinates, including λ.
///
/// # Safety
/// `fit` must be a live handle and `out` writable, or either may be NULL.
#[no_mangle]
pub unsafe extern "C" fn egpd_fit_n_coordinates(fit: *const EgpdFit, out: *mut usize) -> EgpdStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = f.names.len();
        Ok(())
    })
}

/// Name of coordinate `j`, owned by the handle.
///
/// # Safety
/// `fit` must be a live handle and `out` writable, or either may be NULL.
#[no_mangle]
pub unsafe extern "C" fn egpd_fit_coordinate_name(fit: *const EgpdFit, j: usize, out: *mut *const c_char) -> EgpdStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        let name = f.names.get(j).ok_or_else(|| (EgpdStatus::Domain, format!("coordinate {j} out of range")))?;
        *out.as_mut().ok_or_else(|| null("out"))? = name.as_ptr();
        Ok(())
    })
}

/// # Safety
/// `fit` must be a live handle and `out` writable, or either may be NULL.
#[no_mangle]
pub unsafe extern "C" fn egpd_fit_summary(fit: *const EgpdFit, j: usize, out: *mut EgpdSummary) -> EgpdStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        let s = f
            .artifacts
            .report
            .summary
            .get(j)
            .ok_or_else(|| (EgpdStatus::Domain, format!("coordinate {j} out of range")))?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.into();
        Ok(())
    })
}

/// Posterior mean conditional density at `y` for one covariate row `x` of
/// length `p` on the raw scale (intercept entry included when the model has
/// one), averaged over at most `max_draws` thinned draws (0 for all).
///
/// # Safety
/// `fit` must be a live handle, `x` must hold `p` doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn egpd_fit_density(
    fit: *const EgpdFit,
    x: *const f64,
    p: usize,
    y: f64,
    max_draws: usize,
    out: *mut f64,
) -> EgpdStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if x.is_null() {
            return Err(null("x"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let report = &f.artifacts.report;
        if p != report.model.p {
            return Err((EgpdStatus::Domain, format!("x has length {p}, model expects {}", report.model.p)));
        }
        let raw = std::slice::from_raw_parts(x, p);
        let row = match &report.standardization {
            Some(st) => st.apply(raw),
            None => raw.to_vec(),
        };
        let cap = (max_draws > 0).then_some(max_draws);
        let g = density_grid(&report.model, &f.layout, &f.artifacts.samples, &row, &[y], cap, report.config.output.level)
            .map_err(lift)?;
        *out = g.mean[0];
        Ok(())
    })
}
