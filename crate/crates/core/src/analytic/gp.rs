//! Gil-Pelaez inversion of the moment function of `P_s`.
//!
//! `F(x) = 1/2 + 1/pi int_0^inf Im(e^{-jt ln x} M_{jt}) / t dt`.
//!
//! The integrand is even in `t` and finite at 0, so `[0, t0]` is handled by a
//! Richardson estimate of its limit. `[t0, T1]` goes to adaptive Kronrod
//! panels, and the oscillatory tail beyond `T1` is split into half periods of
//! `e^{-jt ln x}` whose partial sums are accelerated with Wynn's epsilon
//! algorithm.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate_panels, wynn_epsilon, Tolerance};

#[derive(Debug, Clone, Copy)]
pub struct GpOptions {
    /// Absolute tolerance on the integral (before the 1/pi factor).
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Width of the small-`t` piece.
    pub small_t: f64,
    /// Minimum end of the directly integrated range.
    pub min_direct: f64,
    pub max_tail_terms: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        GpOptions {
            abs_tol: 1e-7,
            rel_tol: 1e-6,
            small_t: 1e-3,
            min_direct: 40.0,
            max_tail_terms: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpValue {
    /// Inverted ccdf, clamped to `[0, 1]`.
    pub value: f64,
    /// Achieved absolute error estimate of `value`.
    pub abs_error: f64,
}

/// Evaluates the ccdf at `x` from `moment(b) = M_b`, called only at purely
/// imaginary `b = jt`.
pub fn gil_pelaez<M>(moment: M, x: f64) -> Result<GpValue>
where
    M: Fn(Complex64) -> Result<Complex64>,
{
    gil_pelaez_with(moment, x, &GpOptions::default())
}

pub fn gil_pelaez_with<M>(moment: M, x: f64, opts: &GpOptions) -> Result<GpValue>
where
    M: Fn(Complex64) -> Result<Complex64>,
{
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid("x", format!("must lie in [0, 1], got {x}")));
    }
    if x == 0.0 {
        return Ok(GpValue {
            value: 1.0,
            abs_error: 0.0,
        });
    }
    if x == 1.0 {
        return Ok(GpValue {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let ln_x = x.ln();
    let omega = -ln_x;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |t: f64| -> f64 {
        match moment(Complex64::new(0.0, t)) {
            Ok(m) => (Complex64::new(0.0, -t * ln_x).exp() * m).im / t,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let check = |res: Result<crate::quad::Estimate<f64>>| -> Result<crate::quad::Estimate<f64>> {
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        res
    };

    // g(t) = g0 + c t^2 + O(t^4) near 0.
    let t0 = opts.small_t;
    let g_full = g(t0);
    let g_half = g(0.5 * t0);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let g0 = (4.0 * g_half - g_full) / 3.0;
    let small = t0 * (g0 + (g_full - g0) / 3.0);

    let half_period = PI / omega;
    let periods = (opts.min_direct / half_period).ceil().max(1.0);
    let t1 = periods * half_period;
    let mut breaks = vec![t0];
    let mut b = 2.0 * t0;
    while b < t1.min(half_period) {
        breaks.push(b);
        b *= 2.0;
    }
    let mut k = 1.0;
    while k * half_period < t1 {
        if k * half_period > *breaks.last().unwrap() {
            breaks.push(k * half_period);
        }
        k += 1.0;
    }
    if t1 > *breaks.last().unwrap() {
        breaks.push(t1);
    }
    let tol = Tolerance::new(0.25 * opts.abs_tol, opts.rel_tol).with_max_intervals(20_000);
    let mut gm = &g;
    let direct = check(integrate_panels(&mut gm, &breaks, tol))?;

    let mut sums = Vec::with_capacity(opts.max_tail_terms);
    let mut partial = small + direct.value;
    let mut tail_err = f64::INFINITY;
    let mut estimate = partial;
    let mut quad_err = direct.abs_error;
    let term_tol = Tolerance::new(0.05 * opts.abs_tol, opts.rel_tol).with_max_intervals(2000);
    let mut last_ext: Option<f64> = None;
    let mut settled = 0;
    for n in 0..opts.max_tail_terms {
        let a = t1 + n as f64 * half_period;
        let c = check(integrate_panels(&mut gm, &[a, a + 0.5 * half_period, a + half_period], term_tol))?;
        quad_err += c.abs_error;
        partial += c.value;
        sums.push(partial);
        if sums.len() < 3 {
            continue;
        }
        let (ext, _) = wynn_epsilon(&sums);
        if let Some(prev) = last_ext {
            let diff = (ext - prev).abs();
            if diff < opts.abs_tol {
                settled += 1;
            } else {
                settled = 0;
            }
            if settled >= 2 {
                estimate = ext;
                tail_err = diff;
                break;
            }
        }
        last_ext = Some(ext);
        estimate = ext;
    }
    if !tail_err.is_finite() {
        return Err(Error::Quadrature {
            achieved: (sums.last().copied().unwrap_or(partial) - estimate).abs().max(opts.abs_tol),
            requested: opts.abs_tol,
        });
    }

    let raw = 0.5 + (small + (estimate - small)) / PI;
    let abs_error = (tail_err + quad_err) / PI;
    let value = if raw < 0.0 {
        if raw < -1e-6 {
            log::warn!("Gil-Pelaez value {raw:.3e} at x = {x} clamped to 0");
        } else {
            log::debug!("clamped {raw:.3e} to 0");
        }
        0.0
    } else if raw > 1.0 {
        if raw > 1.0 + 1e-6 {
            log::warn!("Gil-Pelaez value {raw} at x = {x} clamped to 1");
        } else {
            log::debug!("clamped {raw} to 1");
        }
        1.0
    } else {
        raw
    };
    Ok(GpValue { value, abs_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::hypf::mb_ppp;

    #[test]
    fn degenerate_at_one_gives_unit_ccdf() {
        for x in [0.05, 0.5, 0.95] {
            let v = gil_pelaez(|_| Ok(Complex64::new(1.0, 0.0)), x).unwrap();
            assert!((v.value - 1.0).abs() < 1e-6, "x {x}: {}", v.value);
        }
    }

    #[test]
    fn uniform_variable_inverts_exactly() {
        // P_s ~ U(0,1): M_b = 1/(1+b).
        for x in [0.1, 0.3, 0.7, 0.9] {
            let v = gil_pelaez(|b| Ok((1.0 + b).inv()), x).unwrap();
            assert!((v.value - (1.0 - x)).abs() < 1e-5, "x {x}: {}", v.value);
        }
    }

    #[test]
    fn ppp_curve_is_monotone_in_x() {
        let mut prev = 1.0;
        for i in 1..10 {
            let x = i as f64 / 10.0;
            let v = gil_pelaez(|b| mb_ppp(b, 0.5, 1.0), x).unwrap().value;
            assert!(v <= prev + 1e-6 && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn boundary_and_invalid_x() {
        let m = |_b: Complex64| Ok(Complex64::new(1.0, 0.0));
        assert_eq!(gil_pelaez(m, 0.0).unwrap().value, 1.0);
        assert_eq!(gil_pelaez(m, 1.0).unwrap().value, 0.0);
        assert!(gil_pelaez(m, 1.5).is_err());
    }

    #[test]
    fn moment_errors_propagate() {
        let err = gil_pelaez(|_| Err(Error::Divergent("boom".into())), 0.5).unwrap_err();
        assert!(matches!(err, Error::Divergent(_)));
    }
}
