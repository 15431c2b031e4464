//! C ABI over `sirmeta`.
//!
//! Every function returns an [`SmStatus`]; results go through out-pointers.
//! On failure [`sm_last_error_message`] describes the error of the calling
//! thread. Networks and simulation results are opaque handles released with
//! their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use sirmeta::analytic::{beta_approx, gil_pelaez, hyp_f, mb_hcn_hat, mb_ppp, HcnSpec};
use sirmeta::gains::{effective_gain, estimate_g0};
use sirmeta::metasim::{critical_theta, simulate_meta, EmpiricalMeta, SimConfig};
use sirmeta::pp::{GaussPoissonParams, MaternParams, ProcessKind, Window};
use sirmeta::sir::{db_to_linear, TierSpec};
use sirmeta::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    EmptyRealization = 3,
    Quadrature = 4,
    Divergent = 5,
    UnequalPathLoss = 6,
    OutOfRange = 7,
    Truncation = 8,
    Config = 9,
    Io = 10,
    Panic = 11,
}

/// A list of network tiers.
pub struct SmNetwork {
    tiers: Vec<TierSpec>,
}

/// Result of a Monte Carlo meta distribution run.
pub struct SmMeta {
    inner: EmpiricalMeta,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SmGain {
    pub value_db: f64,
    pub std_error_db: f64,
    pub n_realizations: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SmStatus {
    match e {
        Error::InvalidParameter { .. } => SmStatus::InvalidParameter,
        Error::EmptyRealization => SmStatus::EmptyRealization,
        Error::Quadrature { .. } => SmStatus::Quadrature,
        Error::Divergent(_) => SmStatus::Divergent,
        Error::Tier { source, .. } => status_of(source),
        Error::UnequalPathLoss { .. } => SmStatus::UnequalPathLoss,
        Error::OutOfRange { .. } => SmStatus::OutOfRange,
        Error::Truncation { .. } => SmStatus::Truncation,
        Error::Config { .. } => SmStatus::Config,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => SmStatus::Io,
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

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed as `{name}`"));
            SmStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SmStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn network<'a>(p: *const SmNetwork) -> Result<&'a SmNetwork, Failure> {
    p.as_ref().ok_or(Failure::Null("network"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn gain_opt(gain_db: f64) -> Option<f64> {
    (!gain_db.is_nan()).then_some(gain_db)
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn sm_status_name(status: SmStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        SmStatus::Ok => b"ok\0",
        SmStatus::NullPointer => b"null pointer\0",
        SmStatus::InvalidParameter => b"invalid parameter\0",
        SmStatus::EmptyRealization => b"empty realization\0",
        SmStatus::Quadrature => b"quadrature failure\0",
        SmStatus::Divergent => b"divergent\0",
        SmStatus::UnequalPathLoss => b"unequal path-loss exponents\0",
        SmStatus::OutOfRange => b"out of range\0",
        SmStatus::Truncation => b"truncation\0",
        SmStatus::Config => b"config\0",
        SmStatus::Io => b"io\0",
        SmStatus::Panic => b"panic\0",
    };
    s.as_ptr().cast()
}

/// Creates an empty network. Never returns NULL.
#[no_mangle]
pub extern "C" fn sm_network_new() -> *mut SmNetwork {
    Box::into_raw(Box::new(SmNetwork { tiers: Vec::new() }))
}

/// # Safety
/// `net` must come from [`sm_network_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sm_network_free(net: *mut SmNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live network handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sm_network_tier_count(net: *const SmNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.tiers.len())
}

unsafe fn push_tier(net: *mut SmNetwork, tier: sirmeta::Result<TierSpec>, gain_db: f64) -> SmStatus {
    guard(|| {
        let net = net.as_mut().ok_or(Failure::Null("network"))?;
        let mut t = tier?;
        t.kind.check_density(t.lambda)?;
        t.gain_db = gain_opt(gain_db);
        net.tiers.push(t);
        Ok(())
    })
}

/// Adds a Poisson tier. Pass NaN as `gain_db` to leave the gain unset.
///
/// # Safety
/// `net` must be a live network handle.
#[no_mangle]
pub unsafe extern "C" fn sm_network_add_ppp(net: *mut SmNetwork, lambda: f64, power: f64, alpha: f64, gain_db: f64) -> SmStatus {
    push_tier(net, TierSpec::new(ProcessKind::Poisson, lambda, power, alpha), gain_db)
}

/// Adds a triangular lattice tier with spacing `eta`.
///
/// # Safety
/// `net` must be a live network handle.
#[no_mangle]
pub unsafe extern "C" fn sm_network_add_lattice(net: *mut SmNetwork, eta: f64, power: f64, alpha: f64, gain_db: f64) -> SmStatus {
    push_tier(
        net,
        TierSpec::at_intrinsic_density(ProcessKind::TriangularLattice { eta }, power, alpha),
        gain_db,
    )
}

/// Adds a lattice tier whose points are displaced uniformly within `r_pert`.
///
/// # Safety
/// `net` must be a live network handle.
#[no_mangle]
pub unsafe extern "C" fn sm_network_add_perturbed_lattice(
    net: *mut SmNetwork,
    eta: f64,
    r_pert: f64,
    power: f64,
    alpha: f64,
    gain_db: f64,
) -> SmStatus {
    push_tier(
        net,
        TierSpec::at_intrinsic_density(ProcessKind::PerturbedTriangularLattice { eta, r_pert }, power, alpha),
        gain_db,
    )
}

/// # Safety
/// `net` must be a live network handle.
#[no_mangle]
pub unsafe extern "C" fn sm_network_add_gauss_poisson(
    net: *mut SmNetwork,
    lambda_p: f64,
    p: f64,
    u: f64,
    power: f64,
    alpha: f64,
    gain_db: f64,
) -> SmStatus {
    let kind = ProcessKind::GaussPoisson(GaussPoissonParams { lambda_p, p, u });
    push_tier(net, TierSpec::at_intrinsic_density(kind, power, alpha), gain_db)
}

/// # Safety
/// `net` must be a live network handle.
#[no_mangle]
pub unsafe extern "C" fn sm_network_add_matern(
    net: *mut SmNetwork,
    lambda_p: f64,
    c_bar: f64,
    r_c: f64,
    power: f64,
    alpha: f64,
    gain_db: f64,
) -> SmStatus {
    let kind = ProcessKind::MaternCluster(MaternParams { lambda_p, c_bar, r_c });
    push_tier(net, TierSpec::at_intrinsic_density(kind, power, alpha), gain_db)
}

/// `F(b, delta, theta)` for complex `b`; `theta` is linear.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_hyp_f(b_re: f64, b_im: f64, delta: f64, theta: f64, out_re: *mut f64, out_im: *mut f64) -> SmStatus {
    guard(|| {
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let v = hyp_f(Complex64::new(b_re, b_im), delta, theta)?;
        (*re, *im) = (v.re, v.im);
        Ok(())
    })
}

/// Moment `M_b` of the Poisson network; `theta` is linear.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_mb_ppp(b_re: f64, b_im: f64, delta: f64, theta: f64, out_re: *mut f64, out_im: *mut f64) -> SmStatus {
    guard(|| {
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let v = mb_ppp(Complex64::new(b_re, b_im), delta, theta)?;
        (*re, *im) = (v.re, v.im);
        Ok(())
    })
}

/// Approximate moment of a network whose tiers all carry gains.
///
/// # Safety
/// `net` must be a live handle; `out_re`, `out_im` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_mb_hcn(
    net: *const SmNetwork,
    b_re: f64,
    b_im: f64,
    theta_db: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SmStatus {
    guard(|| {
        let spec = HcnSpec::new(network(net)?.tiers.clone())?;
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let v = mb_hcn_hat(&spec, Complex64::new(b_re, b_im), db_to_linear(theta_db))?;
        (*re, *im) = (v.re, v.im);
        Ok(())
    })
}

/// Effective gain of a network with a common path-loss exponent.
///
/// # Safety
/// `net` must be a live handle; `out_db` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_effective_gain_db(net: *const SmNetwork, out_db: *mut f64) -> SmStatus {
    guard(|| {
        let o = out(out_db, "out_db")?;
        *o = effective_gain(&network(net)?.tiers)?.value_db;
        Ok(())
    })
}

/// Meta distribution by Gil-Pelaez inversion of the approximate moments.
///
/// # Safety
/// `net` must be a live handle; `out_ccdf` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_meta_gp(net: *const SmNetwork, theta_db: f64, x: f64, out_ccdf: *mut f64) -> SmStatus {
    guard(|| {
        let spec = HcnSpec::new(network(net)?.tiers.clone())?;
        let o = out(out_ccdf, "out_ccdf")?;
        let theta = db_to_linear(theta_db);
        *o = gil_pelaez(|b| mb_hcn_hat(&spec, b, theta), x)?.value;
        Ok(())
    })
}

/// Meta distribution by beta moment matching of the approximate moments.
///
/// # Safety
/// `net` must be a live handle; `out_ccdf` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_meta_beta(net: *const SmNetwork, theta_db: f64, x: f64, out_ccdf: *mut f64) -> SmStatus {
    guard(|| {
        let spec = HcnSpec::new(network(net)?.tiers.clone())?;
        let o = out(out_ccdf, "out_ccdf")?;
        let theta = db_to_linear(theta_db);
        let m1 = mb_hcn_hat(&spec, Complex64::new(1.0, 0.0), theta)?.re;
        let m2 = mb_hcn_hat(&spec, Complex64::new(2.0, 0.0), theta)?.re;
        *o = beta_approx(m1, m2.clamp(m1 * m1, m1), x)?;
        Ok(())
    })
}

/// Estimates the asymptotic gain of tier `tier` on its own, simulated in the
/// square window of half side `half_extent`.
///
/// # Safety
/// `net` must be a live handle; `out_gain` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_estimate_g0(
    net: *const SmNetwork,
    tier: usize,
    half_extent: f64,
    n: usize,
    seed: u64,
    out_gain: *mut SmGain,
) -> SmStatus {
    guard(|| {
        let net = network(net)?;
        let o = out(out_gain, "out_gain")?;
        let t = net
            .tiers
            .get(tier)
            .ok_or_else(|| Error::InvalidParameter {
                name: "tier",
                reason: format!("index {tier} out of range for {} tiers", net.tiers.len()),
            })?;
        let g = estimate_g0(t, Window::new(half_extent)?, n, seed)?;
        *o = SmGain {
            value_db: g.value_db,
            std_error_db: g.std_error_db,
            n_realizations: g.n_realizations as u64,
        };
        Ok(())
    })
}

/// Largest threshold (dB) at which every user of a triangular lattice
/// network with spacing `eta` succeeds with probability at least `x`.
///
/// # Safety
/// `out_theta_db` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_critical_theta_db(eta: f64, alpha: f64, x: f64, out_theta_db: *mut f64) -> SmStatus {
    guard(|| {
        let o = out(out_theta_db, "out_theta_db")?;
        *o = critical_theta(&ProcessKind::TriangularLattice { eta }, alpha, x)?.theta_c_db;
        Ok(())
    })
}

/// Monte Carlo meta distribution on the grid `theta_db[n_theta]` x `x[n_x]`.
/// On success `*out_meta` receives a handle to release with [`sm_meta_free`].
///
/// # Safety
/// `net` must be a live handle, the arrays valid for their lengths, and
/// `out_meta` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sm_simulate_meta(
    net: *const SmNetwork,
    half_extent: f64,
    theta_db: *const f64,
    n_theta: usize,
    x: *const f64,
    n_x: usize,
    n: usize,
    seed: u64,
    out_meta: *mut *mut SmMeta,
) -> SmStatus {
    guard(|| {
        let o = out(out_meta, "out_meta")?;
        *o = std::ptr::null_mut();
        let cfg = SimConfig {
            tiers: network(net)?.tiers.clone(),
            window: Window::new(half_extent)?,
            theta_db: slice(theta_db, n_theta, "theta_db")?.to_vec(),
            x: slice(x, n_x, "x")?.to_vec(),
            b: Vec::new(),
            n,
            seed,
        };
        let inner = simulate_meta(&cfg)?;
        *o = Box::into_raw(Box::new(SmMeta { inner }));
        Ok(())
    })
}

/// Empirical ccdf and its standard error at grid cell (`theta_index`, `x_index`).
///
/// # Safety
/// `meta` must be a live handle; out-pointers valid for writes (`out_std_error` may be NULL).
#[no_mangle]
pub unsafe extern "C" fn sm_meta_ccdf(
    meta: *const SmMeta,
    theta_index: usize,
    x_index: usize,
    out_ccdf: *mut f64,
    out_std_error: *mut f64,
) -> SmStatus {
    guard(|| {
        let m = &meta.as_ref().ok_or(Failure::Null("meta"))?.inner;
        let o = out(out_ccdf, "out_ccdf")?;
        if theta_index >= m.theta_db.len() || x_index >= m.x.len() {
            return Err(Error::InvalidParameter {
                name: "index",
                reason: format!(
                    "({theta_index}, {x_index}) outside the {} x {} grid",
                    m.theta_db.len(),
                    m.x.len()
                ),
            }
            .into());
        }
        *o = m.ccdf(theta_index, x_index);
        if let Some(se) = out_std_error.as_mut() {
            *se = m.ccdf_std_error(theta_index, x_index);
        }
        Ok(())
    })
}

/// # Safety
/// `meta` must come from [`sm_simulate_meta`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sm_meta_free(meta: *mut SmMeta) {
    if !meta.is_null() {
        drop(Box::from_raw(meta));
    }
}
