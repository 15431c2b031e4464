//! Monte Carlo meta distributions and the lattice worst case.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{MetaCurve, Provenance};
use crate::error::{Error, Result};
use crate::pp::{ProcessKind, Window};
use crate::rng::stream;
use crate::sir::{associate, isr_sample, db_to_linear, Association, InterferenceProfile, NetworkRealization, PathLoss, TierSpec};

/// Realizations per parallel work unit.
const BLOCK: usize = 256;
/// Redraws allowed for one realization before giving up.
const MAX_RESAMPLES: u64 = 10_000;

/// What a visitor sees of one realization.
pub(crate) struct Draw<'a> {
    pub realization: &'a NetworkRealization,
    pub assoc: &'a Association,
    pub profile: &'a InterferenceProfile,
}

/// Runs `visit(acc, index, profile)` over `n` realizations and returns the
/// per-block accumulators in index order together with the number of
/// resampled empty patterns.
pub(crate) fn fold_realizations<A, I, V>(
    tiers: &[TierSpec],
    window: Window,
    n: usize,
    seed: u64,
    theta_max: f64,
    init: I,
    visit: V,
) -> Result<(Vec<A>, u64)>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, usize, &InterferenceProfile) + Sync,
{
    fold_draws(tiers, window, n, seed, Some(theta_max), init, |acc, i, d| visit(acc, i, d.profile))
}

/// Like [`fold_realizations`]; the profile is only filled when `theta_max` is given.
pub(crate) fn fold_draws<A, I, V>(
    tiers: &[TierSpec],
    window: Window,
    n: usize,
    seed: u64,
    theta_max: Option<f64>,
    init: I,
    visit: V,
) -> Result<(Vec<A>, u64)>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, usize, Draw<'_>) + Sync,
{
    if n == 0 {
        return Err(Error::invalid("n", "at least one realization is required"));
    }
    let template = NetworkRealization::new(window, tiers.to_vec())?;
    let blocks: Vec<usize> = (0..n.div_ceil(BLOCK)).collect();
    let out = blocks
        .par_iter()
        .map(|&blk| -> Result<(A, u64)> {
            let mut acc = init();
            let mut real = template.clone();
            let mut profile = InterferenceProfile::new();
            let mut resampled = 0;
            for i in blk * BLOCK..((blk + 1) * BLOCK).min(n) {
                let mut rng = stream(seed, i as u64);
                let mut tries = 0;
                let assoc = loop {
                    real.resample(&mut rng);
                    match associate(&real) {
                        Ok(a) => break a,
                        Err(Error::EmptyRealization) | Err(Error::Divergent(_)) => {
                            tries += 1;
                            if tries > MAX_RESAMPLES {
                                return Err(Error::EmptyRealization);
                            }
                        }
                        Err(e) => return Err(e),
                    }
                };
                resampled += tries;
                if let Some(t) = theta_max {
                    profile.fill(&real, &assoc, t);
                }
                visit(
                    &mut acc,
                    i,
                    Draw {
                        realization: &real,
                        assoc: &assoc,
                        profile: &profile,
                    },
                );
            }
            Ok((acc, resampled))
        })
        .collect::<Result<Vec<_>>>()?;
    let resampled = out.iter().map(|(_, r)| r).sum();
    Ok((out.into_iter().map(|(a, _)| a).collect(), resampled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub tiers: Vec<TierSpec>,
    pub window: Window,
    pub theta_db: Vec<f64>,
    pub x: Vec<f64>,
    /// Extra real moment orders besides 1 and 2.
    #[serde(default)]
    pub b: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl MeanEstimate {
    fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        MeanEstimate {
            mean,
            std_error: (var / nf).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeta {
    pub theta_db: Vec<f64>,
    pub x: Vec<f64>,
    /// `samples[i][r]` is `P_s(theta_i)` of realization `r`.
    pub samples: Vec<Vec<f32>>,
    /// `counts[i][j] = #{r : P_s(theta_i) > x_j}`, compared in double precision.
    pub counts: Vec<Vec<u64>>,
    pub b: Vec<f64>,
    /// `moments[k][i]`: `E[P_s(theta_i)^b_k]`.
    pub moments: Vec<Vec<MeanEstimate>>,
    pub m1: Vec<MeanEstimate>,
    pub m2: Vec<MeanEstimate>,
    pub isr: MeanEstimate,
    pub n: usize,
    pub seed: u64,
    pub resampled: u64,
}

impl EmpiricalMeta {
    pub fn ccdf(&self, ti: usize, xi: usize) -> f64 {
        self.counts[ti][xi] as f64 / self.n as f64
    }

    /// Binomial standard error of [`Self::ccdf`].
    pub fn ccdf_std_error(&self, ti: usize, xi: usize) -> f64 {
        let p = self.ccdf(ti, xi);
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// `P(P_s > x)` from the stored single-precision samples, for `x` off the grid.
    pub fn ccdf_at(&self, ti: usize, x: f64) -> f64 {
        let c = self.samples[ti].iter().filter(|&&s| f64::from(s) > x).count();
        c as f64 / self.n as f64
    }

    pub fn theta_index(&self, theta_db: f64) -> Option<usize> {
        self.theta_db.iter().position(|&t| (t - theta_db).abs() < 1e-9)
    }

    pub fn x_index(&self, x: f64) -> Option<usize> {
        self.x.iter().position(|&v| (v - x).abs() < 1e-12)
    }

    pub fn moment(&self, b: f64, ti: usize) -> Option<MeanEstimate> {
        match b {
            1.0 => Some(self.m1[ti]),
            2.0 => Some(self.m2[ti]),
            _ => self.b.iter().position(|&v| v == b).map(|k| self.moments[k][ti]),
        }
    }

    pub fn curve(&self) -> Result<MetaCurve> {
        let values = (0..self.theta_db.len())
            .map(|i| (0..self.x.len()).map(|j| self.ccdf(i, j)).collect())
            .collect();
        MetaCurve::new(self.theta_db.clone(), self.x.clone(), values, Provenance::Empirical)
    }
}

struct MetaAcc {
    samples: Vec<Vec<f32>>,
    counts: Vec<Vec<u64>>,
    pow_sums: Vec<Vec<(f64, f64)>>,
    isr: (f64, f64),
}

fn validate_grids(cfg: &SimConfig) -> Result<()> {
    if cfg.theta_db.is_empty() || cfg.x.is_empty() {
        return Err(Error::invalid("grid", "theta and x grids must be non-empty"));
    }
    if cfg.theta_db.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("theta_db", "must be finite"));
    }
    if cfg.x.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid("x", "must lie in [0, 1]"));
    }
    if cfg.b.iter().any(|b| !b.is_finite()) {
        return Err(Error::invalid("b", "must be finite"));
    }
    Ok(())
}

/// Monte Carlo estimate of the meta distribution on the configured grids.
pub fn simulate_meta(cfg: &SimConfig) -> Result<EmpiricalMeta> {
    validate_grids(cfg)?;
    let thetas: Vec<f64> = cfg.theta_db.iter().map(|&t| db_to_linear(t)).collect();
    let theta_max = thetas.iter().copied().fold(0.0, f64::max);
    let mut orders = vec![1.0, 2.0];
    orders.extend(cfg.b.iter().copied());
    let (nt, nx, nb) = (thetas.len(), cfg.x.len(), orders.len());
    let (blocks, resampled) = fold_realizations(
        &cfg.tiers,
        cfg.window,
        cfg.n,
        cfg.seed,
        theta_max,
        || MetaAcc {
            samples: vec![Vec::with_capacity(BLOCK); nt],
            counts: vec![vec![0; nx]; nt],
            pow_sums: vec![vec![(0.0, 0.0); nt]; nb],
            isr: (0.0, 0.0),
        },
        |acc, _, profile| {
            let isr = profile.isr();
            acc.isr.0 += isr;
            acc.isr.1 += isr * isr;
            for (i, &theta) in thetas.iter().enumerate() {
                let log_ps = profile.log_success(theta);
                let ps = log_ps.exp();
                acc.samples[i].push(ps as f32);
                for (j, &x) in cfg.x.iter().enumerate() {
                    if ps > x {
                        acc.counts[i][j] += 1;
                    }
                }
                for (k, &b) in orders.iter().enumerate() {
                    let v = (b * log_ps).exp();
                    let s = &mut acc.pow_sums[k][i];
                    s.0 += v;
                    s.1 += v * v;
                }
            }
        },
    )?;

    let mut samples = vec![Vec::with_capacity(cfg.n); nt];
    let mut counts = vec![vec![0u64; nx]; nt];
    let mut pow_sums = vec![vec![(0.0, 0.0); nt]; nb];
    let mut isr = (0.0, 0.0);
    for blk in blocks {
        for (dst, src) in samples.iter_mut().zip(&blk.samples) {
            dst.extend_from_slice(src);
        }
        for (dst, src) in counts.iter_mut().zip(&blk.counts) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
        for (dst, src) in pow_sums.iter_mut().zip(&blk.pow_sums) {
            for (d, s) in dst.iter_mut().zip(src) {
                d.0 += s.0;
                d.1 += s.1;
            }
        }
        isr.0 += blk.isr.0;
        isr.1 += blk.isr.1;
    }
    let mut moments: Vec<Vec<MeanEstimate>> = pow_sums
        .iter()
        .map(|row| row.iter().map(|&(s, s2)| MeanEstimate::from_sums(s, s2, cfg.n)).collect())
        .collect();
    let m2 = moments.remove(1);
    let m1 = moments.remove(0);
    Ok(EmpiricalMeta {
        theta_db: cfg.theta_db.clone(),
        x: cfg.x.clone(),
        samples,
        counts,
        b: cfg.b.clone(),
        moments,
        m1,
        m2,
        isr: MeanEstimate::from_sums(isr.0, isr.1, cfg.n),
        n: cfg.n,
        seed: cfg.seed,
        resampled,
    })
}

/// Mean interference-to-signal ratio over `n` realizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisrEstimate {
    pub misr: MeanEstimate,
    pub n: usize,
    pub resampled: u64,
}

pub fn estimate_misr(tiers: &[TierSpec], window: Window, n: usize, seed: u64) -> Result<MisrEstimate> {
    let (blocks, resampled) = fold_draws(tiers, window, n, seed, None, || (0.0, 0.0), |acc, _, d| {
        let v = isr_sample(d.realization, d.assoc);
        acc.0 += v;
        acc.1 += v * v;
    })?;
    let (s, s2) = blocks.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(MisrEstimate {
        misr: MeanEstimate::from_sums(s, s2, n),
        n,
        resampled,
    })
}

/// MISR of one tier at several path-loss exponents, all from the same
/// patterns. Nearest-base-station association does not depend on the
/// exponent, so each pattern serves every entry of `alphas`.
pub fn estimate_misr_alphas(
    tier: &TierSpec,
    alphas: &[f64],
    window: Window,
    n: usize,
    seed: u64,
) -> Result<Vec<MisrEstimate>> {
    if alphas.is_empty() {
        return Err(Error::invalid("alphas", "need at least one exponent"));
    }
    let tiers: Vec<TierSpec> = alphas
        .iter()
        .map(|&a| TierSpec::new(tier.kind, tier.lambda, tier.power, a))
        .collect::<Result<_>>()?;
    let laws: Vec<PathLoss> = alphas.iter().map(|&a| PathLoss::new(a)).collect();
    let m = alphas.len();
    let (blocks, resampled) = fold_draws(&tiers[..1], window, n, seed, None, || vec![(0.0, 0.0); m], |acc, _, d| {
        let pts = &d.realization.point_sets[0].points;
        let r02 = d.assoc.point.norm_sq();
        for (slot, pl) in acc.iter_mut().zip(&laws) {
            let inv = 1.0 / pl.gain_sq(r02);
            let mut isr = 0.0;
            for (i, p) in pts.iter().enumerate() {
                if i != d.assoc.index {
                    isr += pl.gain_sq(p.norm_sq());
                }
            }
            let v = isr * inv;
            slot.0 += v;
            slot.1 += v * v;
        }
    })?;
    let mut sums = vec![(0.0, 0.0); m];
    for blk in blocks {
        for (s, v) in sums.iter_mut().zip(blk) {
            s.0 += v.0;
            s.1 += v.1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(s, s2)| MisrEstimate {
            misr: MeanEstimate::from_sums(s, s2, n),
            n,
            resampled,
        })
        .collect())
}

/// Largest lattice radius, in units of the spacing, summed explicitly.
const MAX_RADIUS_OVER_ETA: f64 = 10_000.0;
/// Allowed change of `log P_s` from the omitted lattice tail.
const TAIL_TOL: f64 = 1e-8;

fn lattice_eta(lattice: &ProcessKind) -> Result<f64> {
    match *lattice {
        ProcessKind::TriangularLattice { eta } => {
            lattice.validate()?;
            Ok(eta)
        }
        _ => Err(Error::invalid(
            "lattice",
            format!("worst case is defined for the triangular lattice only, got {}", lattice.name()),
        )),
    }
}

/// Bound on `|log P_s|` contributed by lattice points beyond `radius` of the vertex.
pub fn worst_case_tail_bound(eta: f64, alpha: f64, theta: f64, radius: f64) -> f64 {
    if radius <= eta {
        return f64::INFINITY;
    }
    let d = eta / 3f64.sqrt();
    let lambda = 2.0 / (3f64.sqrt() * eta * eta);
    theta * d.powf(alpha) * lambda * std::f64::consts::TAU * (radius - eta).powf(2.0 - alpha) / (alpha - 2.0)
}

/// Smallest radius meeting the tail tolerance.
pub fn worst_case_radius(eta: f64, alpha: f64, theta: f64) -> f64 {
    if theta <= 0.0 {
        return 2.0 * eta;
    }
    let d = eta / 3f64.sqrt();
    let lambda = 2.0 / (3f64.sqrt() * eta * eta);
    let c = theta * d.powf(alpha) * lambda * std::f64::consts::TAU / ((alpha - 2.0) * TAIL_TOL);
    eta + c.powf(1.0 / (alpha - 2.0)) * (1.0 + 1e-6)
}

/// `P_s(theta)` of a user at a Voronoi vertex of the triangular lattice,
/// served by one of its three equidistant base stations.
pub fn worst_case_ps(lattice: &ProcessKind, alpha: f64, theta: f64, truncation_radius: f64) -> Result<f64> {
    let eta = lattice_eta(lattice)?;
    if !(alpha > 2.0) {
        return Err(Error::invalid("alpha", format!("must exceed 2, got {alpha}")));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", "must be finite and >= 0"));
    }
    if theta == 0.0 {
        return Ok(1.0);
    }
    let bound = worst_case_tail_bound(eta, alpha, theta, truncation_radius);
    if !(bound < TAIL_TOL) {
        return Err(Error::Truncation {
            radius: truncation_radius,
            tail_bound: bound,
        });
    }
    if truncation_radius > MAX_RADIUS_OVER_ETA * eta {
        return Err(Error::invalid(
            "truncation_radius",
            format!("exceeds {MAX_RADIUS_OVER_ETA} lattice spacings"),
        ));
    }
    let (vx, vy) = (0.5 * eta, 0.5 * eta / 3f64.sqrt());
    let d2 = eta * eta / 3.0;
    let pl = PathLoss::new(alpha);
    let scale = theta / pl.gain_sq(d2);
    let r2_max = truncation_radius * truncation_radius;
    let row_h = 0.5 * 3f64.sqrt() * eta;
    let jmax = (truncation_radius / row_h).ceil() as i64 + 1;
    let mut log_ps = 0.0;
    for j in -jmax..=jmax {
        let dy = j as f64 * row_h - vy;
        let rem = r2_max - dy * dy;
        if rem < 0.0 {
            continue;
        }
        let half = rem.sqrt();
        // Site (i, j) sits at x = (i + j/2) eta.
        let off = 0.5 * j as f64;
        let i_lo = ((vx - half) / eta - off).ceil() as i64;
        let i_hi = ((vx + half) / eta - off).floor() as i64;
        let mut row = 0.0;
        for i in i_lo..=i_hi {
            if i == 0 && j == 0 {
                continue;
            }
            let dx = (i as f64 + off) * eta - vx;
            let r2 = dx * dx + dy * dy;
            if r2 > r2_max {
                continue;
            }
            row += (scale * pl.gain_sq(r2)).ln_1p();
        }
        log_ps -= row;
    }
    Ok(log_ps.exp())
}

/// [`worst_case_ps`] with the radius picked from the tail bound.
pub fn worst_case_ps_auto(lattice: &ProcessKind, alpha: f64, theta: f64) -> Result<f64> {
    let eta = lattice_eta(lattice)?;
    worst_case_ps(lattice, alpha, theta, worst_case_radius(eta, alpha, theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalThreshold {
    pub x: f64,
    pub theta_c_db: f64,
    pub eta: f64,
    pub alpha: f64,
}

const THETA_C_LO_DB: f64 = -60.0;
const THETA_C_HI_DB: f64 = 30.0;
const THETA_C_STEP_DB: f64 = 5.0;

/// Threshold below which every user of the lattice reaches reliability `x`.
pub fn critical_theta(lattice: &ProcessKind, alpha: f64, x: f64) -> Result<CriticalThreshold> {
    let eta = lattice_eta(lattice)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::invalid("x", format!("must lie in (0, 1), got {x}")));
    }
    let f = |db: f64| worst_case_ps_auto(lattice, alpha, db_to_linear(db)).map(|p| p - x);
    let mut lo = THETA_C_LO_DB;
    if f(lo)? <= 0.0 {
        return Err(Error::OutOfRange {
            target: x,
            lo: THETA_C_LO_DB,
            hi: THETA_C_HI_DB,
        });
    }
    let mut hi = lo;
    loop {
        hi += THETA_C_STEP_DB;
        if hi > THETA_C_HI_DB {
            return Err(Error::OutOfRange {
                target: x,
                lo: THETA_C_LO_DB,
                hi: THETA_C_HI_DB,
            });
        }
        if f(hi)? <= 0.0 {
            break;
        }
        lo = hi;
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalThreshold {
        x,
        theta_c_db: 0.5 * (lo + hi),
        eta,
        alpha,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::pp::GaussPoissonParams;

    fn ppp_cfg(n: usize, seed: u64) -> SimConfig {
        SimConfig {
            tiers: vec![TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 4.0).unwrap()],
            window: Window::new(40.0).unwrap(),
            theta_db: vec![-100.0, -10.0, 0.0, 10.0],
            x: vec![0.0, 0.5, 0.9, 0.95],
            b: vec![0.5, -1.0],
            n,
            seed,
        }
    }

    #[test]
    fn threshold_zero_column_is_one() {
        let mut cfg = ppp_cfg(300, 3);
        cfg.theta_db[0] = -400.0;
        let m = simulate_meta(&cfg).unwrap();
        for j in 0..cfg.x.len() {
            assert_eq!(m.ccdf(0, j), 1.0);
        }
        assert!((m.m1[0].mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ccdf_is_monotone_and_consistent_with_samples() {
        let m = simulate_meta(&ppp_cfg(2000, 5)).unwrap();
        for i in 0..m.theta_db.len() {
            for j in 1..m.x.len() {
                assert!(m.ccdf(i, j) <= m.ccdf(i, j - 1));
            }
            // Single-precision samples move at most a few borderline users.
            assert!((m.ccdf_at(i, 0.9) - m.ccdf(i, 2)).abs() <= 2.0 / m.n as f64);
            // First moment equals the area under the empirical ccdf.
            let mut s: Vec<f64> = m.samples[i].iter().map(|&v| f64::from(v)).collect();
            s.sort_by(f64::total_cmp);
            let area: f64 = s.iter().sum::<f64>() / m.n as f64;
            assert!((area - m.m1[i].mean).abs() < 1e-6);
        }
        for i in 1..m.theta_db.len() {
            assert!(m.m1[i].mean <= m.m1[i - 1].mean);
            assert!(m.m2[i].mean >= m.m1[i].mean.powi(2));
            assert!(m.moment(-1.0, i).unwrap().mean >= 1.0);
        }
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let cfg = ppp_cfg(700, 11);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| simulate_meta(&cfg)).unwrap();
        let b = three.install(|| simulate_meta(&cfg)).unwrap();
        assert_eq!(a, b);
        assert_ne!(simulate_meta(&ppp_cfg(700, 12)).unwrap().counts, a.counts);
    }

    #[test]
    fn binomial_error_halves_at_four_times_n() {
        let a = simulate_meta(&ppp_cfg(1000, 1)).unwrap();
        let b = simulate_meta(&ppp_cfg(4000, 1)).unwrap();
        let ratio = a.ccdf_std_error(2, 2) / b.ccdf_std_error(2, 2);
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn sparse_processes_are_resampled() {
        let g = ProcessKind::GaussPoisson(GaussPoissonParams {
            lambda_p: 0.002,
            p: 0.5,
            u: 1.0,
        });
        let tiers = vec![TierSpec::new(g, 0.003, 1.0, 4.0).unwrap()];
        let est = estimate_misr(&tiers, Window::new(10.0).unwrap(), 200, 9).unwrap();
        assert!(est.resampled > 0);
        assert!(est.misr.mean.is_finite());
    }

    #[test]
    fn shared_pattern_misr_matches_single_exponent_runs() {
        let tier = TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 4.0).unwrap();
        let w = Window::new(25.0).unwrap();
        let many = estimate_misr_alphas(&tier, &[4.0, 3.0], w, 300, 21).unwrap();
        let t3 = TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 3.0).unwrap();
        let single = estimate_misr(&[t3], w, 300, 21).unwrap();
        assert!((many[1].misr.mean - single.misr.mean).abs() < 1e-12 * single.misr.mean);
        let direct = estimate_misr(&[tier], w, 300, 21).unwrap();
        assert!((many[0].misr.mean - direct.misr.mean).abs() < 1e-12 * direct.misr.mean);
    }

    #[test]
    fn worst_case_limits_and_monotonicity() {
        let tl = ProcessKind::TriangularLattice { eta: 1.0 };
        assert_eq!(worst_case_ps_auto(&tl, 4.0, 0.0).unwrap(), 1.0);
        let mut prev = 1.0;
        for db in [-30.0, -20.0, -10.0, -5.0, 0.0] {
            let p = worst_case_ps_auto(&tl, 4.0, db_to_linear(db)).unwrap();
            assert!(p < prev);
            prev = p;
        }
        // Two equidistant interferers cap P_s at 1/(1+theta)^2.
        let t = db_to_linear(-3.0);
        assert!(worst_case_ps_auto(&tl, 4.0, t).unwrap() < 1.0 / (1.0 + t).powi(2));
        assert!(matches!(worst_case_ps(&tl, 4.0, 1.0, 5.0), Err(Error::Truncation { .. })));
        let ptl = ProcessKind::PerturbedTriangularLattice { eta: 1.0, r_pert: 0.2 };
        assert!(worst_case_ps_auto(&ptl, 4.0, 0.1).is_err());
    }

    #[test]
    fn critical_threshold_is_scale_free_and_decreasing() {
        let a = critical_theta(&ProcessKind::TriangularLattice { eta: 1.0 }, 4.0, 0.95).unwrap();
        let b = critical_theta(&ProcessKind::TriangularLattice { eta: 3.4 }, 4.0, 0.95).unwrap();
        assert!((a.theta_c_db - b.theta_c_db).abs() < 2e-3);
        let c = critical_theta(&ProcessKind::TriangularLattice { eta: 1.0 }, 4.0, 0.999).unwrap();
        let d = critical_theta(&ProcessKind::TriangularLattice { eta: 1.0 }, 4.0, 0.6).unwrap();
        assert!(c.theta_c_db < a.theta_c_db && a.theta_c_db < d.theta_c_db);
        assert!(critical_theta(&ProcessKind::TriangularLattice { eta: 1.0 }, 4.0, 1.0).is_err());
    }
}
