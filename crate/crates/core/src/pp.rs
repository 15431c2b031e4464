//! Stationary point processes for base-station layouts.
//!
//! Every sampler fills a caller-owned buffer so that Monte Carlo loops can
//! reuse one allocation per worker. Cluster processes generate parents in a
//! window enlarged by the largest offspring displacement; lattices enumerate
//! every site that lands within `L + eta` of the origin along each axis.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite_positive, Error, Result};
use crate::rng;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Relative tolerance for the declared-vs-intrinsic density check.
const DENSITY_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// The square observation window `[-L, L]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub struct Window {
    half_extent: f64,
}

#[derive(Serialize, Deserialize)]
struct WindowRepr {
    half_extent: f64,
}

impl TryFrom<WindowRepr> for Window {
    type Error = Error;
    fn try_from(r: WindowRepr) -> Result<Self> {
        Window::new(r.half_extent)
    }
}

impl From<Window> for WindowRepr {
    fn from(w: Window) -> Self {
        WindowRepr {
            half_extent: w.half_extent,
        }
    }
}

impl Window {
    pub fn new(half_extent: f64) -> Result<Self> {
        ensure_finite_positive("half_extent", half_extent)?;
        Ok(Window { half_extent })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_extent * self.half_extent
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x.abs() <= self.half_extent && p.y.abs() <= self.half_extent
    }

    /// Window grown by `margin` on every side.
    pub fn enlarged(&self, margin: f64) -> Window {
        Window {
            half_extent: self.half_extent + margin.max(0.0),
        }
    }
}

impl Default for Window {
    fn default() -> Self {
        Window { half_extent: 500.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussPoissonParams {
    /// Parent density.
    pub lambda_p: f64,
    /// Probability that a cluster holds a single point.
    pub p: f64,
    /// Separation of the two points of a two-point cluster.
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    pub lambda_p: f64,
    /// Mean number of daughters per parent.
    pub c_bar: f64,
    /// Cluster radius.
    pub r_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    Poisson,
    TriangularLattice { eta: f64 },
    PerturbedTriangularLattice { eta: f64, r_pert: f64 },
    GaussPoisson(GaussPoissonParams),
    MaternCluster(MaternParams),
}

impl ProcessKind {
    /// Lattice spacing giving density `lambda`.
    pub fn lattice_spacing_for_density(lambda: f64) -> f64 {
        (2.0 / (SQRT3 * lambda)).sqrt()
    }

    pub fn triangular_lattice_with_density(lambda: f64) -> Self {
        ProcessKind::TriangularLattice {
            eta: Self::lattice_spacing_for_density(lambda),
        }
    }

    /// Perturbed lattice of density `lambda` with perturbation radius
    /// `r_pert_over_eta * eta`.
    pub fn perturbed_lattice_with_density(lambda: f64, r_pert_over_eta: f64) -> Self {
        let eta = Self::lattice_spacing_for_density(lambda);
        ProcessKind::PerturbedTriangularLattice {
            eta,
            r_pert: r_pert_over_eta * eta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProcessKind::Poisson => "ppp",
            ProcessKind::TriangularLattice { .. } => "tl",
            ProcessKind::PerturbedTriangularLattice { .. } => "ptl",
            ProcessKind::GaussPoisson(_) => "gappp",
            ProcessKind::MaternCluster(_) => "mcp",
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(
            self,
            ProcessKind::TriangularLattice { .. } | ProcessKind::PerturbedTriangularLattice { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessKind::Poisson => Ok(()),
            ProcessKind::TriangularLattice { eta } => ensure_finite_positive("eta", eta),
            ProcessKind::PerturbedTriangularLattice { eta, r_pert } => {
                ensure_finite_positive("eta", eta)?;
                if !(r_pert.is_finite() && r_pert >= 0.0) {
                    return Err(Error::invalid("r_pert", format!("must be >= 0, got {r_pert}")));
                }
                Ok(())
            }
            ProcessKind::GaussPoisson(GaussPoissonParams { lambda_p, p, u }) => {
                ensure_finite_positive("lambda_p", lambda_p)?;
                ensure_finite_positive("u", u)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
                }
                Ok(())
            }
            ProcessKind::MaternCluster(MaternParams {
                lambda_p,
                c_bar,
                r_c,
            }) => {
                ensure_finite_positive("lambda_p", lambda_p)?;
                ensure_finite_positive("c_bar", c_bar)?;
                ensure_finite_positive("r_c", r_c)
            }
        }
    }

    /// Density fixed by the process parameters; `None` for the PPP, whose
    /// density is a free tier parameter.
    pub fn intrinsic_density(&self) -> Option<f64> {
        match *self {
            ProcessKind::Poisson => None,
            ProcessKind::TriangularLattice { eta }
            | ProcessKind::PerturbedTriangularLattice { eta, .. } => Some(2.0 / (SQRT3 * eta * eta)),
            ProcessKind::GaussPoisson(g) => Some(g.lambda_p * (2.0 - g.p)),
            ProcessKind::MaternCluster(m) => Some(m.lambda_p * m.c_bar),
        }
    }

    /// Checks the parameters and that `lambda` matches the intrinsic density.
    pub fn check_density(&self, lambda: f64) -> Result<()> {
        self.validate()?;
        ensure_finite_positive("lambda", lambda)?;
        if let Some(intrinsic) = self.intrinsic_density() {
            if ((intrinsic - lambda) / lambda).abs() > DENSITY_REL_TOL {
                return Err(Error::invalid(
                    "lambda",
                    format!(
                        "declared density {lambda} differs from the {} density {intrinsic}",
                        self.name()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Side margin of the generation region beyond the observation window.
    pub fn generation_margin(&self) -> f64 {
        match *self {
            ProcessKind::Poisson => 0.0,
            ProcessKind::TriangularLattice { eta } | ProcessKind::PerturbedTriangularLattice { eta, .. } => eta,
            ProcessKind::GaussPoisson(g) => g.u,
            ProcessKind::MaternCluster(m) => m.r_c,
        }
    }

    /// Draws one realization into `out` (cleared first). Parameters must
    /// have been validated.
    pub fn sample_into<R: Rng + ?Sized>(&self, lambda: f64, window: Window, rng: &mut R, out: &mut Vec<Point>) {
        out.clear();
        match *self {
            ProcessKind::Poisson => ppp_into(lambda, window, rng, out),
            ProcessKind::TriangularLattice { eta } => lattice_into(eta, 0.0, window, rng, out),
            ProcessKind::PerturbedTriangularLattice { eta, r_pert } => lattice_into(eta, r_pert, window, rng, out),
            ProcessKind::GaussPoisson(g) => gauss_poisson_into(g, window, rng, out),
            ProcessKind::MaternCluster(m) => matern_into(m, window, rng, out),
        }
    }
}

/// One tier's points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    pub tier: usize,
    pub points: Vec<Point>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points inside `window`.
    pub fn count_in(&self, window: &Window) -> usize {
        self.points.iter().filter(|p| window.contains(**p)).count()
    }
}

#[inline]
fn uniform_in_square<R: Rng + ?Sized>(half: f64, rng: &mut R) -> Point {
    Point::new(half * (2.0 * rng.random::<f64>() - 1.0), half * (2.0 * rng.random::<f64>() - 1.0))
}

#[inline]
fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    let (u, v) = unit_disk(rng);
    Point::new(radius * u, radius * v)
}

/// Rejection sample in the unit disk; also returns `u^2 + v^2`.
#[inline]
fn unit_disk_r2<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64, f64) {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let r2 = u * u + v * v;
        if r2 <= 1.0 {
            return (u, v, r2);
        }
    }
}

#[inline]
fn unit_disk<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let (u, v, _) = unit_disk_r2(rng);
    (u, v)
}

/// Uniformly oriented unit vector.
#[inline]
fn unit_direction<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let (u, v, r2) = unit_disk_r2(rng);
        if r2 > 1e-12 {
            let inv = r2.sqrt().recip();
            return (u * inv, v * inv);
        }
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as usize,
        Err(_) => 0,
    }
}

fn ppp_into<R: Rng + ?Sized>(lambda: f64, window: Window, rng: &mut R, out: &mut Vec<Point>) {
    let n = poisson_count(lambda * window.area(), rng);
    out.reserve(n);
    let h = window.half_extent();
    for _ in 0..n {
        out.push(uniform_in_square(h, rng));
    }
}

fn lattice_into<R: Rng + ?Sized>(eta: f64, r_pert: f64, window: Window, rng: &mut R, out: &mut Vec<Point>) {
    // X = G u with u uniform on [0,1)^2 is uniform over the fundamental cell.
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let keep = window.half_extent() + eta;
    // Sites whose perturbed image may still land in the kept region.
    let reach = keep + r_pert;
    let row = eta * SQRT3 / 2.0;
    let j_lo = (-reach / row - u2).ceil() as i64;
    let j_hi = (reach / row - u2).floor() as i64;
    for j in j_lo..=j_hi {
        let jj = j as f64 + u2;
        let y = row * jj;
        let shift = u1 + 0.5 * jj;
        let i_lo = (-reach / eta - shift).ceil() as i64;
        let i_hi = (reach / eta - shift).floor() as i64;
        for i in i_lo..=i_hi {
            let x = eta * (i as f64 + shift);
            let p = if r_pert > 0.0 {
                let d = uniform_in_disk(r_pert, rng);
                Point::new(x + d.x, y + d.y)
            } else {
                Point::new(x, y)
            };
            if p.x.abs() <= keep && p.y.abs() <= keep {
                out.push(p);
            }
        }
    }
}

fn gauss_poisson_into<R: Rng + ?Sized>(g: GaussPoissonParams, window: Window, rng: &mut R, out: &mut Vec<Point>) {
    let region = window.enlarged(g.u);
    let h = region.half_extent();
    let n = poisson_count(g.lambda_p * region.area(), rng);
    out.reserve(n * 2);
    for _ in 0..n {
        let parent = uniform_in_square(h, rng);
        out.push(parent);
        if rng.random::<f64>() >= g.p {
            let (s, c) = unit_direction(rng);
            let q = Point::new(parent.x + g.u * s, parent.y + g.u * c);
            if region.contains(q) {
                out.push(q);
            }
        }
    }
}

fn matern_into<R: Rng + ?Sized>(m: MaternParams, window: Window, rng: &mut R, out: &mut Vec<Point>) {
    let region = window.enlarged(m.r_c);
    let h = region.half_extent();
    let n = poisson_count(m.lambda_p * region.area(), rng);
    out.reserve((n as f64 * m.c_bar * 1.1) as usize);
    for _ in 0..n {
        let parent = uniform_in_square(h, rng);
        let k = poisson_count(m.c_bar, rng);
        for _ in 0..k {
            let d = uniform_in_disk(m.r_c, rng);
            let q = Point::new(parent.x + d.x, parent.y + d.y);
            if region.contains(q) {
                out.push(q);
            }
        }
    }
}

fn seeded(kind: ProcessKind, lambda: f64, window: Window, seed: u64) -> PointSet {
    let mut rng = rng::stream(seed, 0);
    let mut points = Vec::new();
    kind.sample_into(lambda, window, &mut rng, &mut points);
    PointSet { tier: 0, points }
}

pub fn sample_ppp(lambda: f64, window: Window, seed: u64) -> Result<PointSet> {
    ensure_finite_positive("lambda", lambda)?;
    Ok(seeded(ProcessKind::Poisson, lambda, window, seed))
}

/// Samples a (perturbed) stationary triangular lattice.
pub fn sample_lattice(kind: ProcessKind, window: Window, seed: u64) -> Result<PointSet> {
    if !kind.is_lattice() {
        return Err(Error::invalid("kind", format!("{} is not a lattice", kind.name())));
    }
    kind.validate()?;
    let lambda = kind.intrinsic_density().expect("lattices have an intrinsic density");
    Ok(seeded(kind, lambda, window, seed))
}

pub fn sample_gauss_poisson(params: GaussPoissonParams, window: Window, seed: u64) -> Result<PointSet> {
    let kind = ProcessKind::GaussPoisson(params);
    kind.validate()?;
    Ok(seeded(kind, params.lambda_p * (2.0 - params.p), window, seed))
}

pub fn sample_matern_cluster(params: MaternParams, window: Window, seed: u64) -> Result<PointSet> {
    let kind = ProcessKind::MaternCluster(params);
    kind.validate()?;
    Ok(seeded(kind, params.lambda_p * params.c_bar, window, seed))
}

/// Samples any process at its declared density, validating consistency.
pub fn sample(kind: ProcessKind, lambda: f64, window: Window, seed: u64) -> Result<PointSet> {
    kind.check_density(lambda)?;
    Ok(seeded(kind, lambda, window, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_pair_dist(points: &[Point]) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                best = best.min(a.dist_sq(*b));
            }
        }
        best.sqrt()
    }

    #[test]
    fn rejects_bad_parameters() {
        let w = Window::new(10.0).unwrap();
        assert!(sample_ppp(0.0, w, 1).is_err());
        assert!(sample_ppp(-1.0, w, 1).is_err());
        assert!(Window::new(0.0).is_err());
        assert!(ProcessKind::GaussPoisson(GaussPoissonParams { lambda_p: 1.0, p: 1.5, u: 1.0 })
            .validate()
            .is_err());
        assert!(ProcessKind::PerturbedTriangularLattice { eta: 1.0, r_pert: -0.1 }.validate().is_err());
        assert!(sample_lattice(ProcessKind::Poisson, w, 1).is_err());
    }

    #[test]
    fn density_consistency_is_checked() {
        let tl = ProcessKind::triangular_lattice_with_density(0.1);
        assert!(tl.check_density(0.1).is_ok());
        assert!(tl.check_density(0.2).is_err());
        let gp = ProcessKind::GaussPoisson(GaussPoissonParams { lambda_p: 1.0 / 15.0, p: 0.5, u: 1.0 });
        assert!((gp.intrinsic_density().unwrap() - 0.1).abs() < 1e-15);
        let mcp = ProcessKind::MaternCluster(MaternParams { lambda_p: 0.01, c_bar: 10.0, r_c: 4.0 });
        assert!((mcp.intrinsic_density().unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn tiny_window_is_almost_always_empty() {
        let w = Window::new(1e-4).unwrap();
        let nonempty = (0..200).filter(|&s| !sample_ppp(0.1, w, s).unwrap().is_empty()).count();
        assert!(nonempty <= 1);
    }

    #[test]
    fn same_seed_same_points() {
        let w = Window::new(1.0).unwrap();
        assert_eq!(sample_ppp(1.0, w, 42).unwrap(), sample_ppp(1.0, w, 42).unwrap());
        let mcp = MaternParams { lambda_p: 0.5, c_bar: 3.0, r_c: 0.3 };
        assert_eq!(
            sample_matern_cluster(mcp, w, 9).unwrap(),
            sample_matern_cluster(mcp, w, 9).unwrap()
        );
    }

    #[test]
    fn zero_perturbation_matches_lattice() {
        let w = Window::new(30.0).unwrap();
        let tl = sample_lattice(ProcessKind::TriangularLattice { eta: 2.0 }, w, 5).unwrap();
        let ptl = sample_lattice(ProcessKind::PerturbedTriangularLattice { eta: 2.0, r_pert: 0.0 }, w, 5).unwrap();
        assert_eq!(tl, ptl);
    }

    #[test]
    fn lattice_geometry() {
        let w = Window::new(15.0).unwrap();
        let eta = 1.7;
        let tl = sample_lattice(ProcessKind::TriangularLattice { eta }, w, 3).unwrap();
        assert!((min_pair_dist(&tl.points) - eta).abs() < 1e-9);
        let r_pert = 0.2;
        let ptl = sample_lattice(ProcessKind::PerturbedTriangularLattice { eta, r_pert }, w, 3).unwrap();
        assert!(min_pair_dist(&ptl.points) >= eta - 2.0 * r_pert);
        // Every site within the kept region is present.
        let keep = w.enlarged(eta);
        assert!(tl.points.iter().all(|p| keep.contains(*p)));
    }

    #[test]
    fn single_point_clusters_are_the_parent_ppp() {
        let w = Window::new(20.0).unwrap();
        let g = GaussPoissonParams { lambda_p: 0.3, p: 1.0, u: 1.0 };
        let pts = sample_gauss_poisson(g, w, 11).unwrap();
        // Same stream consumption as the PPP except for the per-parent coin.
        let mut rng = rng::stream(11, 0);
        let region = w.enlarged(1.0);
        let n = poisson_count(0.3 * region.area(), &mut rng);
        assert_eq!(pts.len(), n);
    }

    #[test]
    fn two_point_clusters_are_separated_by_u() {
        let w = Window::new(50.0).unwrap();
        let g = GaussPoissonParams { lambda_p: 0.001, p: 0.0, u: 1.0 };
        let pts = sample_gauss_poisson(g, w, 2).unwrap().points;
        assert!(pts.len() > 10);
        // Partners may be clipped only near the generation boundary.
        for (i, a) in pts.iter().enumerate() {
            if a.x.abs().max(a.y.abs()) > 50.0 {
                continue;
            }
            let paired = pts
                .iter()
                .enumerate()
                .any(|(j, b)| j != i && (a.dist_sq(*b).sqrt() - 1.0).abs() < 1e-12);
            assert!(paired, "{a:?} has no partner");
        }
    }

    #[test]
    fn matern_daughters_stay_in_their_disk() {
        let w = Window::new(40.0).unwrap();
        let m = MaternParams { lambda_p: 0.002, c_bar: 10.0, r_c: 4.0 };
        let mut rng = rng::stream(8, 0);
        let region = w.enlarged(m.r_c);
        let n = poisson_count(m.lambda_p * region.area(), &mut rng);
        let mut max_d: f64 = 0.0;
        for _ in 0..n {
            let parent = uniform_in_square(region.half_extent(), &mut rng);
            for _ in 0..poisson_count(m.c_bar, &mut rng) {
                let d = uniform_in_disk(m.r_c, &mut rng);
                max_d = max_d.max(Point::new(parent.x + d.x, parent.y + d.y).dist_sq(parent).sqrt());
            }
        }
        assert!(max_d <= m.r_c);
    }

    #[test]
    fn vanishing_cluster_size_gives_empty_patterns() {
        let w = Window::new(5.0).unwrap();
        let m = MaternParams { lambda_p: 0.1, c_bar: 1e-9, r_c: 1.0 };
        assert!((0..50).all(|s| sample_matern_cluster(m, w, s).unwrap().is_empty()));
    }
}
