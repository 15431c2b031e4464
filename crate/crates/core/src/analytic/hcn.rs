//! Per-tier approximate moments of multi-tier networks.
//!
//! Each tier `k` contributes
//! `int_0^inf exp(-s F(b, d_k, theta/G_k) - sum_{i != k} rho_ik s^(a_k/a_i) F(b, d_i, theta)) ds`
//! with `rho_ik = lambda_i pi (P_i/P_k)^d_i / (lambda_k pi)^(a_k/a_i)`.

use num_complex::Complex64;

use super::hypf::hyp_f;
use crate::error::{Error, Result};
use crate::quad::{integrate_panels, Tolerance};
use crate::sir::TierSpec;

const S_INTEGRAL_TOL: Tolerance = Tolerance::new(1e-15, 1e-12);
/// Truncate the s-integral where the integrand modulus falls below this
/// fraction of its value at s = 0.
const TRUNCATION: f64 = 1e-12;

/// Tier list plus the derived interaction coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HcnSpec {
    tiers: Vec<TierSpec>,
}

impl HcnSpec {
    /// All tiers must carry a gain; PPP tiers use 0 dB.
    pub fn new(tiers: Vec<TierSpec>) -> Result<Self> {
        if tiers.is_empty() {
            return Err(Error::invalid("tiers", "at least one tier is required"));
        }
        for (k, t) in tiers.iter().enumerate() {
            t.validate().map_err(|e| e.in_tier(k))?;
            if t.gain_db.is_none() {
                return Err(Error::invalid("gain_db", "every tier needs a gain").in_tier(k));
            }
        }
        Ok(HcnSpec { tiers })
    }

    pub fn tiers(&self) -> &[TierSpec] {
        &self.tiers
    }

    /// `rho_ik` for interfering tier `i` and serving tier `k`.
    pub fn rho(&self, i: usize, k: usize) -> f64 {
        let (ti, tk) = (&self.tiers[i], &self.tiers[k]);
        let p_ik = ti.power / tk.power;
        std::f64::consts::PI * ti.lambda * p_ik.powf(ti.delta())
            / (std::f64::consts::PI * tk.lambda).powf(tk.alpha / ti.alpha)
    }

    pub fn common_alpha(&self) -> Result<f64> {
        let first = self.tiers[0].alpha;
        for t in &self.tiers[1..] {
            if t.alpha != first {
                return Err(Error::UnequalPathLoss {
                    first,
                    other: t.alpha,
                });
            }
        }
        Ok(first)
    }

    /// Association weights `w_k = lambda_k P_k^delta / sum_i lambda_i P_i^delta`.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let alpha = self.common_alpha()?;
        let delta = 2.0 / alpha;
        let raw: Vec<f64> = self.tiers.iter().map(|t| t.lambda * t.power.powf(delta)).collect();
        let total: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|r| r / total).collect())
    }

    fn gain(&self, k: usize) -> f64 {
        self.tiers[k].gain_linear().expect("checked at construction")
    }
}

/// `int_0^inf exp(-s a - sum_j c_j s^e_j) ds`.
fn exp_integral(a: Complex64, terms: &[(Complex64, f64)]) -> Result<Complex64> {
    let exponent = |s: f64| -> Complex64 {
        let mut e = -s * a;
        for &(c, p) in terms {
            e -= c * s.powf(p);
        }
        e
    };
    // The term with the largest power dominates as s -> inf.
    let (lead_coef, lead_pow) = terms
        .iter()
        .fold((a, 1.0), |(c0, p0), &(c, p)| if p > p0 { (c, p) } else if p == p0 { (c0 + c, p0) } else { (c0, p0) });
    if lead_coef.re <= 0.0 {
        return Err(Error::Divergent(format!(
            "leading coefficient {lead_coef} of s^{lead_pow} has non-positive real part"
        )));
    }
    let ln_cut = TRUNCATION.ln();
    let mut upper = (-ln_cut / lead_coef.re).powf(1.0 / lead_pow);
    let mut doublings = 0;
    while exponent(upper).re > ln_cut || exponent(2.0 * upper).re > ln_cut {
        upper *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Divergent("integrand does not decay".into()));
        }
    }
    // Panels short enough to follow the phase of the integrand.
    let phase = (a.im * upper).abs() + terms.iter().map(|&(c, p)| (c.im * upper.powf(p)).abs()).sum::<f64>();
    let n = ((phase / std::f64::consts::PI).ceil() as usize).clamp(4, 200_000);
    // Geometric refinement toward s = 0 where fractional powers are singular.
    let mut breaks = vec![0.0];
    let mut first = upper / n as f64;
    let mut stack = Vec::new();
    for _ in 0..6 {
        first /= 8.0;
        stack.push(first);
    }
    breaks.extend(stack.into_iter().rev());
    for k in 1..=n {
        breaks.push(upper * k as f64 / n as f64);
    }
    let mut f = |s: f64| exponent(s).exp();
    let tol = S_INTEGRAL_TOL.with_max_intervals(8000 + 4 * n);
    Ok(integrate_panels(&mut f, &breaks, tol)?.value)
}

/// Contribution of serving tier `k` to the approximate `b`-th moment.
pub fn mb_hcn_tier(spec: &HcnSpec, k: usize, b: Complex64, theta: f64) -> Result<Complex64> {
    let tk = &spec.tiers[k];
    let own = hyp_f(b, tk.delta(), theta / spec.gain(k)).map_err(|e| e.in_tier(k))?;
    let mut terms = Vec::with_capacity(spec.tiers.len() - 1);
    for (i, ti) in spec.tiers.iter().enumerate() {
        if i == k {
            continue;
        }
        let fi = hyp_f(b, ti.delta(), theta).map_err(|e| e.in_tier(i))?;
        terms.push((spec.rho(i, k) * fi, tk.alpha / ti.alpha));
    }
    exp_integral(own, &terms).map_err(|e| e.in_tier(k))
}

/// Approximate `M_b(theta)` of the general network, summed over serving tiers.
pub fn mb_hcn_hat(spec: &HcnSpec, b: Complex64, theta: f64) -> Result<Complex64> {
    (0..spec.tiers.len()).try_fold(Complex64::new(0.0, 0.0), |acc, k| Ok(acc + mb_hcn_tier(spec, k, b, theta)?))
}

/// Closed form of [`mb_hcn_hat`] when all path-loss exponents agree:
/// `sum_k 1 / (F(b, d, theta/G_k) + sum_{i != k} (lambda_i/lambda_k)(P_i/P_k)^d F(b, d, theta))`.
pub fn mb_hcn_same_alpha(spec: &HcnSpec, b: Complex64, theta: f64) -> Result<Complex64> {
    let alpha = spec.common_alpha()?;
    let delta = 2.0 / alpha;
    let f_plain = hyp_f(b, delta, theta)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (k, tk) in spec.tiers.iter().enumerate() {
        let mut denom = hyp_f(b, delta, theta / spec.gain(k))?;
        for (i, ti) in spec.tiers.iter().enumerate() {
            if i != k {
                denom += f_plain * ((ti.lambda / tk.lambda) * (ti.power / tk.power).powf(delta));
            }
        }
        total += denom.inv();
    }
    Ok(total)
}

/// Exact moment of the HIP model (every tier a PPP), for a common exponent.
pub fn mb_hip(alpha: f64, b: Complex64, theta: f64) -> Result<Complex64> {
    Ok(hyp_f(b, 2.0 / alpha, theta)?.inv())
}
