//! Strongest-average-power association and fading-averaged link statistics
//! for the typical user at the origin.
//!
//! Rayleigh fading is integrated out in closed form: given the pattern, the
//! success probability is the product over interferers of
//! `1 / (1 + theta * q)` with `q` the interferer's mean received power
//! relative to the serving one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite_positive, Error, Result};
use crate::pp::{Point, PointSet, ProcessKind, Window};

/// One network tier.
///
/// In serialized form `lambda` may be omitted for lattice and cluster tiers,
/// whose density follows from their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TierRepr")]
pub struct TierSpec {
    #[serde(flatten)]
    pub kind: ProcessKind,
    /// BS density.
    pub lambda: f64,
    /// Transmit power, linear.
    #[serde(default = "unit_power")]
    pub power: f64,
    /// Path-loss exponent, > 2.
    pub alpha: f64,
    /// Asymptotic gain `G_k` of this tier in dB, for the analytic approximations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_db: Option<f64>,
}

fn unit_power() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct TierRepr {
    #[serde(flatten)]
    kind: ProcessKind,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default = "unit_power")]
    power: f64,
    alpha: f64,
    #[serde(default)]
    gain_db: Option<f64>,
}

impl TryFrom<TierRepr> for TierSpec {
    type Error = String;

    fn try_from(r: TierRepr) -> std::result::Result<Self, String> {
        let lambda = r
            .lambda
            .or_else(|| r.kind.intrinsic_density())
            .ok_or("a poisson tier needs `lambda`")?;
        Ok(TierSpec {
            kind: r.kind,
            lambda,
            power: r.power,
            alpha: r.alpha,
            gain_db: r.gain_db,
        })
    }
}

impl TierSpec {
    pub fn new(kind: ProcessKind, lambda: f64, power: f64, alpha: f64) -> Result<Self> {
        let t = TierSpec {
            kind,
            lambda,
            power,
            alpha,
            gain_db: None,
        };
        t.validate()?;
        Ok(t)
    }

    /// A tier at the intrinsic density of `kind`; PPP tiers need an explicit density.
    pub fn at_intrinsic_density(kind: ProcessKind, power: f64, alpha: f64) -> Result<Self> {
        let lambda = kind
            .intrinsic_density()
            .ok_or_else(|| Error::invalid("lambda", "a Poisson tier needs an explicit density"))?;
        TierSpec::new(kind, lambda, power, alpha)
    }

    pub fn with_gain_db(mut self, gain_db: f64) -> Self {
        self.gain_db = Some(gain_db);
        self
    }

    pub fn delta(&self) -> f64 {
        2.0 / self.alpha
    }

    pub fn gain_linear(&self) -> Option<f64> {
        self.gain_db.map(db_to_linear)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.check_density(self.lambda)?;
        ensure_finite_positive("power", self.power)?;
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::invalid("alpha", format!("must be > 2, got {}", self.alpha)));
        }
        if let Some(g) = self.gain_db {
            if !g.is_finite() {
                return Err(Error::invalid("gain_db", format!("must be finite, got {g}")));
            }
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `r2^(-alpha/2)`, evaluated with square roots when `2 alpha` is an integer.
#[derive(Debug, Clone, Copy)]
pub struct PathLoss {
    alpha: f64,
    quarters: Option<u32>,
}

impl PathLoss {
    pub fn new(alpha: f64) -> Self {
        let q = 2.0 * alpha;
        let quarters = (q.fract() == 0.0 && q > 0.0 && q < 64.0).then_some(q as u32);
        PathLoss { alpha, quarters }
    }

    #[inline]
    pub fn gain_sq(&self, r2: f64) -> f64 {
        match self.quarters {
            Some(8) => 1.0 / (r2 * r2),
            Some(q) => {
                let whole = r2.powi((q / 4) as i32);
                let frac = match q % 4 {
                    0 => 1.0,
                    1 => r2.sqrt().sqrt(),
                    2 => r2.sqrt(),
                    _ => {
                        let s = r2.sqrt();
                        s * s.sqrt()
                    }
                };
                1.0 / (whole * frac)
            }
            None => r2.powf(-0.5 * self.alpha),
        }
    }
}

/// A sampled multi-tier pattern with the typical user at the origin.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub window: Window,
    pub tiers: Vec<TierSpec>,
    pub point_sets: Vec<PointSet>,
}

impl NetworkRealization {
    pub fn new(window: Window, tiers: Vec<TierSpec>) -> Result<Self> {
        if tiers.is_empty() {
            return Err(Error::invalid("tiers", "at least one tier is required"));
        }
        for (k, t) in tiers.iter().enumerate() {
            t.validate().map_err(|e| e.in_tier(k))?;
        }
        let point_sets = (0..tiers.len())
            .map(|tier| PointSet {
                tier,
                points: Vec::new(),
            })
            .collect();
        Ok(NetworkRealization {
            window,
            tiers,
            point_sets,
        })
    }

    /// Builds a realization from explicit points, one list per tier.
    pub fn from_points(window: Window, tiers: Vec<TierSpec>, points: Vec<Vec<Point>>) -> Result<Self> {
        if points.len() != tiers.len() {
            return Err(Error::invalid("points", "one point list per tier is required"));
        }
        let mut r = NetworkRealization::new(window, tiers)?;
        for (set, pts) in r.point_sets.iter_mut().zip(points) {
            set.points = pts;
        }
        Ok(r)
    }

    /// Redraws every tier in place, reusing the point buffers.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for (tier, set) in self.tiers.iter().zip(self.point_sets.iter_mut()) {
            tier.kind.sample_into(tier.lambda, self.window, rng, &mut set.points);
        }
    }

    pub fn total_points(&self) -> usize {
        self.point_sets.iter().map(PointSet::len).sum()
    }
}

/// The serving base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    pub tier: usize,
    pub index: usize,
    pub point: Point,
    /// `P_k * |x0|^(-alpha_k)`.
    pub mean_power: f64,
}

#[inline]
fn beats(power: f64, tier: usize, p: Point, best: &Association) -> bool {
    if power != best.mean_power {
        return power > best.mean_power;
    }
    // Tie: lower tier index, then lexicographic coordinates.
    (tier, p.x, p.y) < (best.tier, best.point.x, best.point.y)
}

/// Strongest-average-power association.
///
/// Fails on an empty pattern or when a base station sits exactly at the origin.
pub fn associate(realization: &NetworkRealization) -> Result<Association> {
    let mut best: Option<Association> = None;
    for (k, (tier, set)) in realization.tiers.iter().zip(&realization.point_sets).enumerate() {
        // Within a tier the strongest is the nearest.
        let mut near: Option<(usize, Point, f64)> = None;
        for (i, &p) in set.points.iter().enumerate() {
            let r2 = p.norm_sq();
            let closer = match near {
                None => true,
                Some((_, q, d2)) => r2 < d2 || (r2 == d2 && (p.x, p.y) < (q.x, q.y)),
            };
            if closer {
                near = Some((i, p, r2));
            }
        }
        let Some((i, p, r2)) = near else { continue };
        if r2 == 0.0 {
            return Err(Error::Divergent("base station at the origin".into()));
        }
        let power = tier.power * PathLoss::new(tier.alpha).gain_sq(r2);
        let replace = match &best {
            None => true,
            Some(b) => beats(power, k, p, b),
        };
        if replace {
            best = Some(Association {
                tier: k,
                index: i,
                point: p,
                mean_power: power,
            });
        }
    }
    best.ok_or(Error::EmptyRealization)
}

/// Calls `f(q)` for every interferer with its mean received power relative
/// to the serving base station.
#[inline]
fn for_each_relative_power(realization: &NetworkRealization, assoc: &Association, mut f: impl FnMut(f64)) {
    let inv = 1.0 / assoc.mean_power;
    for (k, (tier, set)) in realization.tiers.iter().zip(&realization.point_sets).enumerate() {
        let pl = PathLoss::new(tier.alpha);
        let scale = tier.power * inv;
        for (i, &p) in set.points.iter().enumerate() {
            if k == assoc.tier && i == assoc.index {
                continue;
            }
            f(scale * pl.gain_sq(p.norm_sq()));
        }
    }
}

/// Fading-averaged success probability `P_s(theta)` given the pattern.
pub fn conditional_success_probability(realization: &NetworkRealization, assoc: &Association, theta: f64) -> f64 {
    if theta <= 0.0 {
        return 1.0;
    }
    let mut log_ps = 0.0;
    for_each_relative_power(realization, assoc, |q| log_ps -= (theta * q).ln_1p());
    log_ps.exp()
}

/// Interference-to-mean-signal ratio of one realization.
pub fn isr_sample(realization: &NetworkRealization, assoc: &Association) -> f64 {
    let mut isr = 0.0;
    for_each_relative_power(realization, assoc, |q| isr += q);
    isr
}

/// Relative interferer powers of one realization, compressed for fast
/// evaluation of `P_s(theta)` at many thresholds up to `theta_max`.
///
/// Interferers with `q > eps` are kept individually; the rest enter through
/// power sums `S_j = sum q^j`, `j = 1..4`, and the truncated series of
/// `ln(1 + theta q)`. With `theta * eps <= 1e-2` the omitted term is below
/// `1e-8 * theta * S_1 / 5` in `log P_s`.
#[derive(Debug, Clone, Default)]
pub struct InterferenceProfile {
    near: Vec<f64>,
    far_sums: [f64; 4],
    isr: f64,
}

impl InterferenceProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cutoff(theta_max: f64) -> f64 {
        if theta_max > 0.0 {
            (1e-2 / theta_max).min(1e-2)
        } else {
            1e-2
        }
    }

    /// Recomputes the profile in place for a new realization.
    pub fn fill(&mut self, realization: &NetworkRealization, assoc: &Association, theta_max: f64) {
        let eps = Self::cutoff(theta_max);
        self.near.clear();
        let mut s = [0.0f64; 4];
        let mut isr = 0.0;
        let near = &mut self.near;
        for_each_relative_power(realization, assoc, |q| {
            isr += q;
            if q > eps {
                near.push(q);
            } else {
                let q2 = q * q;
                s[0] += q;
                s[1] += q2;
                s[2] += q2 * q;
                s[3] += q2 * q2;
            }
        });
        self.far_sums = s;
        self.isr = isr;
    }

    pub fn isr(&self) -> f64 {
        self.isr
    }

    pub fn near_count(&self) -> usize {
        self.near.len()
    }

    /// `log P_s(theta)`.
    pub fn log_success(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 0.0;
        }
        let near: f64 = self.near.iter().map(|&q| (theta * q).ln_1p()).sum();
        let [s1, s2, s3, s4] = self.far_sums;
        let t2 = theta * theta;
        let far = theta * s1 - 0.5 * t2 * s2 + t2 * theta * s3 / 3.0 - 0.25 * t2 * t2 * s4;
        -(near + far)
    }

    pub fn success(&self, theta: f64) -> f64 {
        self.log_success(theta).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ppp_tier(alpha: f64, power: f64) -> TierSpec {
        TierSpec::new(ProcessKind::Poisson, 0.1, power, alpha).unwrap()
    }

    #[test]
    fn density_defaults_from_parameters() {
        let t: TierSpec = serde_json::from_str(r#"{"kind":"triangular_lattice","eta":1,"alpha":4}"#).unwrap();
        assert_eq!(t.lambda, 2.0 / 3f64.sqrt());
        assert_eq!(t.power, 1.0);
        assert!(serde_json::from_str::<TierSpec>(r#"{"kind":"poisson","alpha":4}"#).is_err());
        let back: TierSpec = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    fn single(points: Vec<Point>, alpha: f64) -> NetworkRealization {
        NetworkRealization::from_points(Window::new(100.0).unwrap(), vec![ppp_tier(alpha, 1.0)], vec![points]).unwrap()
    }

    #[test]
    fn nearest_point_serves_a_single_tier() {
        let r = single(vec![Point::new(0.0, 2.0), Point::new(1.0, 0.0)], 4.0);
        let a = associate(&r).unwrap();
        assert_eq!(a.index, 1);
        assert_eq!(a.mean_power, 1.0);
    }

    #[test]
    fn power_tie_goes_to_lower_tier() {
        // 16 * 2^-4 = 1 = 1 * 1^-4
        let r = NetworkRealization::from_points(
            Window::new(10.0).unwrap(),
            vec![ppp_tier(4.0, 16.0), ppp_tier(4.0, 1.0)],
            vec![vec![Point::new(2.0, 0.0)], vec![Point::new(0.0, 1.0)]],
        )
        .unwrap();
        let a = associate(&r).unwrap();
        assert_eq!(a.tier, 0);
        assert_eq!(a.mean_power, 1.0);
    }

    #[test]
    fn exact_tie_is_deterministic() {
        let pts = vec![Point::new(0.0, 1.0), Point::new(1.0, 0.0), Point::new(0.0, -1.0)];
        let first = associate(&single(pts.clone(), 4.0)).unwrap();
        for _ in 0..5 {
            assert_eq!(associate(&single(pts.clone(), 4.0)).unwrap(), first);
        }
        assert_eq!(first.point, Point::new(0.0, -1.0));
    }

    #[test]
    fn empty_and_singular_patterns_are_errors() {
        assert!(matches!(associate(&single(vec![], 4.0)), Err(Error::EmptyRealization)));
        assert!(associate(&single(vec![Point::new(0.0, 0.0)], 4.0)).is_err());
    }

    #[test]
    fn success_probability_examples() {
        let r = single(vec![Point::new(1.0, 0.0), Point::new(0.0, 2.0)], 4.0);
        let a = associate(&r).unwrap();
        assert_eq!(conditional_success_probability(&r, &a, 0.0), 1.0);
        assert!((conditional_success_probability(&r, &a, 1.0) - 16.0 / 17.0).abs() < 1e-15);
        let lone = single(vec![Point::new(3.0, 0.0)], 4.0);
        let a = associate(&lone).unwrap();
        assert_eq!(conditional_success_probability(&lone, &a, 100.0), 1.0);
        assert_eq!(isr_sample(&lone, &a), 0.0);
    }

    #[test]
    fn isr_example() {
        let r = single(vec![Point::new(1.0, 0.0), Point::new(0.0, 2.0), Point::new(-4.0, 0.0)], 4.0);
        let a = associate(&r).unwrap();
        assert!((isr_sample(&r, &a) - 0.066_406_25).abs() < 1e-15);
    }

    #[test]
    fn path_loss_kernels_match_powf() {
        for alpha in [2.5, 3.0, 3.5, 4.0, 4.5, 3.3] {
            let pl = PathLoss::new(alpha);
            for r2 in [1e-3, 0.7, 2.0, 1e5] {
                let want = f64::powf(r2, -alpha / 2.0);
                assert!((pl.gain_sq(r2) / want - 1.0).abs() < 1e-13, "alpha {alpha} r2 {r2}");
            }
        }
    }

    fn arb_points() -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64), 2..40)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn profile_matches_direct_product(points in arb_points(), alpha in 2.2..5.0f64, theta in 1e-3..20.0f64) {
            let r = single(points, alpha);
            let a = associate(&r).unwrap();
            let mut prof = InterferenceProfile::new();
            prof.fill(&r, &a, 20.0);
            let direct = conditional_success_probability(&r, &a, theta);
            prop_assert!((prof.success(theta) - direct).abs() <= 1e-9 * direct.max(1e-300) + 1e-300);
            prop_assert!((prof.isr() - isr_sample(&r, &a)).abs() <= 1e-12 * prof.isr().max(1.0));
        }

        #[test]
        fn success_is_monotone_and_multiplicative(points in arb_points(), t1 in 0.0..5.0f64, dt in 0.0..5.0f64) {
            let r = single(points.clone(), 4.0);
            let a = associate(&r).unwrap();
            let p1 = conditional_success_probability(&r, &a, t1);
            let p2 = conditional_success_probability(&r, &a, t1 + dt);
            prop_assert!(p2 <= p1);
            prop_assert!(p1 > 0.0 && p1 <= 1.0);

            // Adding an interferer strictly lowers P_s for theta > 0.
            let mut more = points.clone();
            more.push(Point::new(a.point.x * 3.0 + 1.0, a.point.y * 3.0 + 1.0));
            let r2 = single(more, 4.0);
            let a2 = associate(&r2).unwrap();
            prop_assume!(a2.point == a.point);
            let q = conditional_success_probability(&r2, &a2, t1 + dt + 0.1);
            prop_assert!(q < conditional_success_probability(&r, &a, t1 + dt + 0.1));

            // Product over a split of the interferers.
            let theta = t1 + 0.5;
            let inter: Vec<Point> = points.iter().copied().filter(|p| *p != a.point).collect();
            let (lhs, rhs) = inter.split_at(inter.len() / 2);
            let sub = |pts: &[Point]| {
                let mut v = vec![a.point];
                v.extend_from_slice(pts);
                let rr = single(v, 4.0);
                let aa = Association { tier: 0, index: 0, point: a.point, mean_power: a.mean_power };
                conditional_success_probability(&rr, &aa, theta)
            };
            let whole = conditional_success_probability(&r, &a, theta);
            prop_assert!((sub(lhs) * sub(rhs) - whole).abs() <= 1e-12);
        }

        #[test]
        fn isr_is_scale_invariant(points in arb_points(), scale in 0.1..10.0f64, alpha in 2.5..5.0f64) {
            let r = single(points.clone(), alpha);
            let a = associate(&r).unwrap();
            let scaled: Vec<Point> = points.iter().map(|p| Point::new(p.x * scale, p.y * scale)).collect();
            let rs = single(scaled, alpha);
            let s = associate(&rs).unwrap();
            let (i0, i1) = (isr_sample(&r, &a), isr_sample(&rs, &s));
            prop_assert!((i0 - i1).abs() <= 1e-9 * i0.max(1e-12));
        }
    }
}
