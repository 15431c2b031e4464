//! `F(b, delta, theta) = 2F1(b, -delta; 1 - delta; -theta)` for complex `b`.
//!
//! The function is evaluated through the integral identity
//!
//! ```text
//! F - 1 = int_1^inf (1 - (1 + theta t^(-1/delta))^(-b)) dt
//! ```
//!
//! With `t = z^(-delta)` and `z = s^(1/(1-delta))` this becomes
//! `delta/(1-delta) * int_0^1 h(s^(1/(1-delta))) ds` where
//! `h(z) = (1 - (1 + theta z)^(-b)) / z` is smooth on `[0, 1]` with
//! `h(0) = b theta`. Powers use the principal branch, which is continuous in
//! `theta >= 0` from the value 1 at `theta = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate_panels, Tolerance};

const ABS_TOL: f64 = 1e-15;
const REL_TOL: f64 = 1e-13;

/// `e^w - 1` without cancellation for small `|w|`.
pub(crate) fn expm1_c(w: Complex64) -> Complex64 {
    let em1 = w.re.exp_m1();
    let (s, c) = w.im.sin_cos();
    let half = (0.5 * w.im).sin();
    Complex64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// `1 - (1 + theta z)^(-b)`.
#[inline]
fn one_minus_power(b: Complex64, theta_z: f64) -> Complex64 {
    -expm1_c(-b * theta_z.ln_1p())
}

fn check_args(delta: f64, theta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::invalid("theta", format!("must be finite and >= 0, got {theta}")));
    }
    Ok(())
}

/// `F(b, delta, theta)` by adaptive quadrature of the integral identity.
pub fn hyp_f(b: Complex64, delta: f64, theta: f64) -> Result<Complex64> {
    check_args(delta, theta)?;
    if !(b.re.is_finite() && b.im.is_finite()) {
        return Err(Error::invalid("b", "must be finite"));
    }
    if theta == 0.0 || b == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let p = 1.0 / (1.0 - delta);
    let mut h = |s: f64| -> Complex64 {
        let z = s.powf(p);
        if z == 0.0 {
            return b * theta;
        }
        one_minus_power(b, theta * z) / z
    };

    // Break points equally spaced in the phase of (1 + theta z)^(-b), so
    // every initial panel carries at most half an oscillation.
    let span = theta.ln_1p();
    let half_cycles = (b.norm() * span / std::f64::consts::PI).ceil().clamp(1.0, 1e6) as usize;
    let mut breaks = Vec::with_capacity(half_cycles + 2);
    breaks.push(0.0);
    for k in 1..half_cycles {
        let w = span * k as f64 / half_cycles as f64;
        let z = w.exp_m1() / theta;
        breaks.push(z.powf(1.0 - delta));
    }
    breaks.push(1.0);
    let tol = Tolerance::new(ABS_TOL, REL_TOL).with_max_intervals(4000 + 8 * half_cycles);
    let est = integrate_panels(&mut h, &breaks, tol)?;
    Ok(1.0 + est.value * (delta * p))
}

/// Real-order convenience wrapper.
pub fn hyp_f_real(b: f64, delta: f64, theta: f64) -> Result<f64> {
    Ok(hyp_f(Complex64::new(b, 0.0), delta, theta)?.re)
}

/// Power series of `2F1(b, -delta; 1 - delta; -theta)`, valid for
/// `0 <= theta < 1`. Independent of the quadrature route.
pub fn hyp_f_series(b: Complex64, delta: f64, theta: f64) -> Result<Complex64> {
    check_args(delta, theta)?;
    if theta >= 1.0 {
        return Err(Error::invalid("theta", format!("series needs theta < 1, got {theta}")));
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..200_000u32 {
        let nf = n as f64;
        term *= (b + nf) * (-delta + nf) / ((1.0 - delta + nf) * (nf + 1.0)) * (-theta);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && n > 4 {
            return Ok(sum);
        }
    }
    Err(Error::Quadrature {
        achieved: term.norm(),
        requested: 1e-17 * sum.norm(),
    })
}

/// `M_b^PPP(theta) = 1 / F(b, delta, theta)`.
pub fn mb_ppp(b: Complex64, delta: f64, theta: f64) -> Result<Complex64> {
    Ok(hyp_f(b, delta, theta)?.inv())
}

pub fn mb_ppp_real(b: f64, delta: f64, theta: f64) -> Result<f64> {
    Ok(1.0 / hyp_f_real(b, delta, theta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// 2F1(1, -1/2; 1/2; -theta) = 1 + sqrt(theta) atan(sqrt(theta)).
    fn closed_form_alpha4(theta: f64) -> f64 {
        1.0 + theta.sqrt() * theta.sqrt().atan()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(hyp_f(Complex64::new(0.3, 2.0), 0.4, 0.0).unwrap(), c(1.0));
        assert_eq!(hyp_f(c(0.0), 0.4, 3.0).unwrap(), c(1.0));
        assert!(hyp_f(c(1.0), 1.0, 1.0).is_err());
        assert!(hyp_f(c(1.0), 0.5, -1.0).is_err());
    }

    #[test]
    fn matches_arctan_closed_form() {
        let f = hyp_f_real(1.0, 0.5, 1.0).unwrap();
        assert!((f - (1.0 + std::f64::consts::FRAC_PI_4)).abs() < 1e-12);
        for theta in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let m = mb_ppp_real(1.0, 0.5, theta).unwrap();
            let want = 1.0 / closed_form_alpha4(theta);
            assert!((m / want - 1.0).abs() < 1e-10, "theta {theta}");
        }
        assert!((mb_ppp_real(1.0, 0.5, 1.0).unwrap() - 0.560_099).abs() < 1e-6);
    }

    #[test]
    fn negative_order_is_polynomial() {
        // 2F1(-1, -d; 1-d; -theta) = 1 - d theta / (1 - d)
        for d in [0.4, 0.5, 2.0 / 3.0] {
            let f = hyp_f_real(-1.0, d, 0.7).unwrap();
            assert!((f - (1.0 - d * 0.7 / (1.0 - d))).abs() < 1e-12);
        }
    }

    #[test]
    fn large_imaginary_order_converges() {
        let f = hyp_f(Complex64::new(0.0, 2000.0), 0.5, 10.0).unwrap();
        assert!(f.re >= 1.0 && f.is_finite());
        let g = hyp_f(Complex64::new(0.0, 0.5), 0.5, 0.5).unwrap();
        let s = hyp_f_series(Complex64::new(0.0, 0.5), 0.5, 0.5).unwrap();
        assert!((g - s).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn series_and_integral_agree(b in 0.05..4.0f64, delta in 0.3..0.85f64, theta in 1e-4..0.9f64) {
            let q = hyp_f_real(b, delta, theta).unwrap();
            let s = hyp_f_series(c(b), delta, theta).unwrap().re;
            prop_assert!((q / s - 1.0).abs() < 1e-8, "q {} s {}", q, s);
        }

        #[test]
        fn ppp_moment_ordering(theta in 0.0..50.0f64, delta in 0.3..0.9f64) {
            let m1 = mb_ppp_real(1.0, delta, theta).unwrap();
            let m2 = mb_ppp_real(2.0, delta, theta).unwrap();
            prop_assert!(m2 <= m1 + 1e-14);
            prop_assert!(m1 > 0.0 && m1 <= 1.0);
            prop_assert!(m2 >= m1 * m1 - 1e-14);
        }
    }
}
