//! SIR gains relative to the Poisson model.

use serde::{Deserialize, Serialize};

use crate::analytic::{mb_ppp_real, HcnSpec};
use crate::error::{Error, Result};
use crate::metasim::{estimate_misr, fold_realizations, MeanEstimate};
use crate::pp::Window;
use crate::sir::{db_to_linear, linear_to_db, TierSpec};

const DB_PER_NEPER: f64 = 10.0 / std::f64::consts::LN_10;
/// Half-width and spacing of the local grid used for `G_b`.
const GB_SPAN_DB: f64 = 12.0;
const GB_STEP_DB: f64 = 0.25;
const GB_TOL_DB: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub value_db: f64,
    pub value_linear: f64,
    pub std_error_db: f64,
    pub n_realizations: usize,
}

impl GainEstimate {
    pub fn from_db(value_db: f64, std_error_db: f64, n_realizations: usize) -> Self {
        GainEstimate {
            value_db,
            value_linear: db_to_linear(value_db),
            std_error_db,
            n_realizations,
        }
    }

    pub fn from_linear(value_linear: f64, std_error_db: f64, n_realizations: usize) -> Self {
        GainEstimate {
            value_db: linear_to_db(value_linear),
            value_linear,
            std_error_db,
            n_realizations,
        }
    }
}

/// `G_0 = (2 / (alpha - 2)) / MISR` with the delta-method standard error.
pub fn g0_from_misr(alpha: f64, misr: MeanEstimate, n: usize) -> Result<GainEstimate> {
    if !(alpha > 2.0) {
        return Err(Error::invalid("alpha", format!("must exceed 2, got {alpha}")));
    }
    if !(misr.mean > 0.0) {
        return Err(Error::invalid("misr", "must be positive"));
    }
    let g = 2.0 / (alpha - 2.0) / misr.mean;
    Ok(GainEstimate::from_linear(g, DB_PER_NEPER * misr.std_error / misr.mean, n))
}

/// Asymptotic gain of a single tier from `n` realizations.
pub fn estimate_g0(tier: &TierSpec, window: Window, n: usize, seed: u64) -> Result<GainEstimate> {
    tier.validate()?;
    let est = estimate_misr(std::slice::from_ref(tier), window, n, seed)?;
    if est.resampled > 0 {
        log::info!("{} empty realizations resampled", est.resampled);
    }
    g0_from_misr(tier.alpha, est.misr, n)
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes, which
/// preserves monotonicity of the data.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("x", "need >= 2 strictly increasing nodes"));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if s[i - 1] * s[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
            }
        }
        let end = |h0: f64, h1: f64, s0: f64, s1: f64| {
            let e = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if e * s0 <= 0.0 {
                0.0
            } else if s0 * s1 <= 0.0 && e.abs() > 3.0 * s0.abs() {
                3.0 * s0
            } else {
                e
            }
        };
        if n == 2 {
            d[0] = s[0];
            d[1] = s[0];
        } else {
            d[0] = end(h[0], h[1], s[0], s[1]);
            d[n - 1] = end(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        }
        Ok(Pchip { x, y, d })
    }

    fn segment(&self, t: f64) -> usize {
        self.x.partition_point(|&v| v <= t).clamp(1, self.x.len() - 1) - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u),
            u * (1.0 - u) * (1.0 - u),
            u * u * (3.0 - 2.0 * u),
            u * u * (u - 1.0),
        );
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (d00, d10, d01, d11) = (
            6.0 * u * (u - 1.0) / h,
            (1.0 - u) * (1.0 - 3.0 * u),
            -6.0 * u * (u - 1.0) / h,
            u * (3.0 * u - 2.0),
        );
        d00 * self.y[i] + d10 * self.d[i] + d01 * self.y[i + 1] + d11 * self.d[i + 1]
    }
}

/// `G_b(theta)` for every `theta_db`, all from one set of `n` realizations.
pub fn estimate_gb_curve(
    theta_db: &[f64],
    b: f64,
    tier: &TierSpec,
    window: Window,
    n: usize,
    seed: u64,
) -> Result<Vec<GainEstimate>> {
    tier.validate()?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid("b", format!("must be positive, got {b}")));
    }
    if theta_db.is_empty() || theta_db.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("theta", "need at least one finite threshold"));
    }
    let lo = theta_db.iter().copied().fold(f64::INFINITY, f64::min) - GB_SPAN_DB;
    let hi = theta_db.iter().copied().fold(f64::NEG_INFINITY, f64::max) + GB_SPAN_DB;
    let steps = ((hi - lo) / GB_STEP_DB).round() as usize;
    let grid_db: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * GB_STEP_DB).collect();
    let grid: Vec<f64> = grid_db.iter().map(|&d| db_to_linear(d)).collect();
    let m = grid.len();
    let (blocks, _) = fold_realizations(
        std::slice::from_ref(tier),
        window,
        n,
        seed,
        *grid.last().unwrap(),
        || vec![(0.0, 0.0); m],
        |acc, _, p| {
            for (slot, &t) in acc.iter_mut().zip(&grid) {
                let v = (b * p.log_success(t)).exp();
                slot.0 += v;
                slot.1 += v * v;
            }
        },
    )?;
    let mut sums = vec![(0.0, 0.0); m];
    for blk in blocks {
        for (s, v) in sums.iter_mut().zip(blk) {
            s.0 += v.0;
            s.1 += v.1;
        }
    }
    let nf = n as f64;
    let means: Vec<f64> = sums.iter().map(|s| s.0 / nf).collect();
    let ses: Vec<f64> = sums
        .iter()
        .zip(&means)
        .map(|(s, &mu)| {
            let var = if n > 1 { ((s.1 - nf * mu * mu) / (nf - 1.0)).max(0.0) } else { 0.0 };
            (var / nf).sqrt()
        })
        .collect();
    // Decreasing in theta; the interpolant works on the reversed sign.
    let neg: Vec<f64> = means.iter().map(|v| -v).collect();
    let interp = Pchip::new(grid_db.clone(), neg)?;
    let delta = 2.0 / tier.alpha;
    theta_db
        .iter()
        .map(|&t| {
            let target = mb_ppp_real(b, delta, db_to_linear(t))?;
            let (m_lo, m_hi) = (means[m - 1], means[0]);
            if !(target >= m_lo && target <= m_hi) {
                return Err(Error::OutOfRange {
                    target,
                    lo: m_lo,
                    hi: m_hi,
                });
            }
            let (mut a, mut c) = (grid_db[0], grid_db[m - 1]);
            while c - a > GB_TOL_DB {
                let mid = 0.5 * (a + c);
                if -interp.eval(mid) > target {
                    a = mid;
                } else {
                    c = mid;
                }
            }
            let root = 0.5 * (a + c);
            let slope = interp.derivative(root).abs();
            let j = grid_db.partition_point(|&g| g <= root).clamp(1, m - 1);
            let w = (root - grid_db[j - 1]) / GB_STEP_DB;
            let se_m = ses[j - 1] * (1.0 - w) + ses[j] * w;
            let se_db = if slope > 0.0 { se_m / slope } else { f64::INFINITY };
            Ok(GainEstimate::from_db(root - t, se_db, n))
        })
        .collect()
}

/// `G_b(theta)`: the shift `theta'/theta` with `M_b(theta') = M_b^PPP(theta)`.
pub fn estimate_gb(theta: f64, b: f64, tier: &TierSpec, window: Window, n: usize, seed: u64) -> Result<GainEstimate> {
    if !(theta > 0.0) {
        return Err(Error::invalid("theta", format!("must be positive, got {theta}")));
    }
    Ok(estimate_gb_curve(&[linear_to_db(theta)], b, tier, window, n, seed)?[0])
}

/// `G_eff = 1 + sum_k w_k^2 (G_k - 1)` for tiers with a common path-loss
/// exponent and known per-tier gains.
pub fn effective_gain(tiers: &[TierSpec]) -> Result<GainEstimate> {
    let spec = HcnSpec::new(tiers.to_vec())?;
    let w = spec.weights()?;
    let g = tiers
        .iter()
        .zip(&w)
        .map(|(t, wk)| wk * wk * (t.gain_linear().expect("checked by HcnSpec") - 1.0))
        .sum::<f64>()
        + 1.0;
    Ok(GainEstimate::from_linear(g, 0.0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pp::ProcessKind;
    use proptest::prelude::*;

    fn ppp(lambda: f64, power: f64, gain_db: f64) -> TierSpec {
        TierSpec::new(ProcessKind::Poisson, lambda, power, 4.0).unwrap().with_gain_db(gain_db)
    }

    #[test]
    fn single_tier_effective_gain_is_its_own() {
        let g = effective_gain(&[ppp(0.3, 2.0, 3.6099)]).unwrap();
        assert!((g.value_db - 3.6099).abs() < 1e-12);
    }

    #[test]
    fn unit_gains_give_unit_effective_gain() {
        let g = effective_gain(&[ppp(0.1, 1.0, 0.0), ppp(0.5, 9.0, 0.0)]).unwrap();
        assert_eq!(g.value_linear, 1.0);
    }

    #[test]
    fn effective_gain_needs_common_exponent_and_gains() {
        let other = TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 3.0).unwrap().with_gain_db(0.0);
        assert!(matches!(effective_gain(&[ppp(0.1, 1.0, 1.0), other]), Err(Error::UnequalPathLoss { .. })));
        let bare = TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 4.0).unwrap();
        assert!(effective_gain(&[bare]).is_err());
    }

    proptest! {
        #[test]
        fn effective_gain_scale_invariance_and_bounds(
            lam in proptest::collection::vec(0.01..1.0f64, 1..5),
            pw in proptest::collection::vec(0.1..100.0f64, 5),
            gdb in proptest::collection::vec(-6.0..6.0f64, 5),
            sl in 0.01..100.0f64,
            sp in 0.01..100.0f64,
        ) {
            let tiers: Vec<TierSpec> = lam.iter().enumerate().map(|(k, &l)| ppp(l, pw[k], gdb[k])).collect();
            let base = effective_gain(&tiers).unwrap().value_linear;
            let scaled: Vec<TierSpec> = tiers.iter().map(|t| ppp(t.lambda * sl, t.power * sp, t.gain_db.unwrap())).collect();
            let other = effective_gain(&scaled).unwrap().value_linear;
            prop_assert!((base - other).abs() < 1e-12 * base);
            let w = HcnSpec::new(tiers.clone()).unwrap().weights().unwrap();
            let parts: Vec<f64> = tiers.iter().zip(&w).map(|(t, wk)| wk * t.gain_linear().unwrap() + 1.0 - wk).collect();
            let lo = parts.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = parts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(base >= lo - 1e-12 && base <= hi + 1e-12);
        }
    }

    #[test]
    fn pchip_is_monotone_and_interpolating() {
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let y = vec![1.0, 0.9, 0.89, 0.5, 0.49, 0.48, 0.1, 0.0];
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((p.eval(*a) - b).abs() < 1e-14);
        }
        let mut prev = f64::INFINITY;
        for i in 0..=700 {
            let v = p.eval(i as f64 * 0.01);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        let h = 1e-6;
        assert!((p.derivative(2.5) - (p.eval(2.5 + h) - p.eval(2.5 - h)) / (2.0 * h)).abs() < 1e-6);
    }

    #[test]
    fn ppp_gains_are_near_zero() {
        let tier = TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 4.0).unwrap();
        let w = Window::new(60.0).unwrap();
        let g0 = estimate_g0(&tier, w, 20_000, 1).unwrap();
        assert!(g0.value_db.abs() < 3.0 * g0.std_error_db + 0.02, "{g0:?}");
        let gb = estimate_gb(db_to_linear(-5.0), 1.0, &tier, w, 5_000, 2).unwrap();
        assert!(gb.value_db.abs() < 3.0 * gb.std_error_db + 0.02, "{gb:?}");
    }

    #[test]
    fn g0_standard_error_scales_with_root_n() {
        let tier = TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 4.0).unwrap();
        let w = Window::new(30.0).unwrap();
        let a = estimate_g0(&tier, w, 2_000, 4).unwrap();
        let b = estimate_g0(&tier, w, 8_000, 4).unwrap();
        let ratio = a.std_error_db / b.std_error_db;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
        assert_eq!(b.n_realizations, 8_000);
    }

    #[test]
    fn unreachable_targets_report_the_range() {
        let tier = TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 4.0).unwrap();
        // A window this small holds almost no interferers, so M_b stays
        // far above the Poisson target across the whole local grid.
        let w = Window::new(1.5).unwrap();
        let err = estimate_gb(1.0, 1.0, &tier, w, 200, 1).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }), "{err}");
        assert!(estimate_gb(0.0, 1.0, &tier, w, 3, 1).is_err());
        assert!(estimate_gb(1.0, -1.0, &tier, w, 3, 1).is_err());
    }
}
