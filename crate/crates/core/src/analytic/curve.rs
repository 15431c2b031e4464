//! Moment grids and meta distribution curves.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::beta::beta_approx;
use super::gp::gil_pelaez;
use super::hypf::mb_ppp;
use crate::error::{Error, Result};
use crate::sir::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AnalyticGp,
    Beta,
    Empirical,
    Shifted,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::AnalyticGp => "analytic-gp",
            Provenance::Beta => "beta",
            Provenance::Empirical => "empirical",
            Provenance::Shifted => "shifted",
        }
    }
}

/// `M_b(theta)` on a grid; `values[i][j]` is order `b[i]` at `theta[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentGrid {
    pub b: Vec<Complex64>,
    /// Linear scale.
    pub theta: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
}

impl MomentGrid {
    pub fn compute<M>(b: &[Complex64], theta: &[f64], moment: M) -> Result<Self>
    where
        M: Fn(Complex64, f64) -> Result<Complex64> + Sync,
    {
        let values = b
            .par_iter()
            .map(|&bi| theta.iter().map(|&t| if bi == Complex64::new(0.0, 0.0) { Ok(bi + 1.0) } else { moment(bi, t) }).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        Ok(MomentGrid {
            b: b.to_vec(),
            theta: theta.to_vec(),
            values,
        })
    }

    pub fn get(&self, bi: usize, ti: usize) -> Complex64 {
        self.values[bi][ti]
    }
}

/// `F(theta, x) = P(P_s(theta) > x)` on a grid; `values[i][j]` is at
/// `theta_db[i]`, `x[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaCurve {
    pub theta_db: Vec<f64>,
    pub x: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl MetaCurve {
    pub fn new(theta_db: Vec<f64>, x: Vec<f64>, values: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if theta_db.is_empty() || x.is_empty() {
            return Err(Error::invalid("grid", "theta and x grids must be non-empty"));
        }
        if theta_db.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("theta_db", "must be strictly increasing"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("x", "must be strictly increasing within [0, 1]"));
        }
        if values.len() != theta_db.len() || values.iter().any(|r| r.len() != x.len()) {
            return Err(Error::invalid("values", "shape does not match the grids"));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("values", "all entries must lie in [0, 1]"));
        }
        Ok(MetaCurve {
            theta_db,
            x,
            values,
            provenance,
        })
    }

    /// Largest increase along x (should be <= 0 up to noise).
    pub fn max_rise_in_x(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|r| r.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_rise_in_theta(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for w in self.values.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                worst = worst.max(b - a);
            }
        }
        worst
    }

    pub fn x_index(&self, x: f64) -> Option<usize> {
        self.x.iter().position(|&v| (v - x).abs() < 1e-12)
    }

    /// Column at `x[xi]` linearly interpolated in dB.
    pub fn interpolate(&self, theta_db: f64, xi: usize) -> Result<f64> {
        let (lo, hi) = (self.theta_db[0], *self.theta_db.last().unwrap());
        let eps = 1e-9 * (1.0 + theta_db.abs());
        if theta_db < lo - eps || theta_db > hi + eps {
            return Err(Error::OutOfRange { target: theta_db, lo, hi });
        }
        let j = self.theta_db.partition_point(|&t| t <= theta_db);
        if j == 0 {
            return Ok(self.values[0][xi]);
        }
        if j >= self.theta_db.len() {
            return Ok(self.values[self.theta_db.len() - 1][xi]);
        }
        let (t0, t1) = (self.theta_db[j - 1], self.theta_db[j]);
        let w = (theta_db - t0) / (t1 - t0);
        Ok(self.values[j - 1][xi] * (1.0 - w) + self.values[j][xi] * w)
    }

    /// Resamples the curve on another theta grid.
    pub fn resample(&self, theta_db: &[f64]) -> Result<MetaCurve> {
        let values = theta_db
            .iter()
            .map(|&t| (0..self.x.len()).map(|xi| self.interpolate(t, xi)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        MetaCurve::new(theta_db.to_vec(), self.x.clone(), values, self.provenance)
    }
}

/// Moves `base` right by `gain_db`: the result at `theta` is base at
/// `theta - gain_db`.
pub fn shifted_meta(base: &MetaCurve, gain_db: f64) -> Result<MetaCurve> {
    if !gain_db.is_finite() {
        return Err(Error::invalid("gain_db", "must be finite"));
    }
    let theta_db = base.theta_db.iter().map(|t| t + gain_db).collect();
    MetaCurve::new(theta_db, base.x.clone(), base.values.clone(), Provenance::Shifted)
}

/// Shifted curve evaluated on a requested grid.
pub fn shifted_meta_on(base: &MetaCurve, gain_db: f64, theta_db: &[f64]) -> Result<MetaCurve> {
    let shifted = shifted_meta(base, gain_db)?;
    let mut out = shifted.resample(theta_db)?;
    out.provenance = Provenance::Shifted;
    Ok(out)
}

/// Gil-Pelaez curve of `moment(b, theta_linear)`.
pub fn gp_meta_curve<M>(theta_db: &[f64], x: &[f64], moment: M) -> Result<MetaCurve>
where
    M: Fn(Complex64, f64) -> Result<Complex64> + Sync,
{
    let cells: Vec<(usize, usize)> = (0..theta_db.len()).flat_map(|i| (0..x.len()).map(move |j| (i, j))).collect();
    let flat = cells
        .par_iter()
        .map(|&(i, j)| {
            let theta = db_to_linear(theta_db[i]);
            Ok(gil_pelaez(|b| moment(b, theta), x[j])?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = flat.chunks(x.len()).map(|c| c.to_vec()).collect();
    MetaCurve::new(theta_db.to_vec(), x.to_vec(), values, Provenance::AnalyticGp)
}

/// Beta-fit curve from the first two moments at each theta.
pub fn beta_meta_curve<M>(theta_db: &[f64], x: &[f64], moment: M) -> Result<MetaCurve>
where
    M: Fn(f64, f64) -> Result<f64> + Sync,
{
    let values = theta_db
        .par_iter()
        .map(|&t| {
            let theta = db_to_linear(t);
            let (m1, m2) = (moment(1.0, theta)?, moment(2.0, theta)?);
            let m2 = m2.clamp(m1 * m1, m1);
            x.iter().map(|&xv| beta_approx(m1, m2, xv)).collect()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    MetaCurve::new(theta_db.to_vec(), x.to_vec(), values, Provenance::Beta)
}

/// Exact single-tier PPP meta distribution.
pub fn ppp_meta_curve(alpha: f64, theta_db: &[f64], x: &[f64]) -> Result<MetaCurve> {
    let delta = 2.0 / alpha;
    gp_meta_curve(theta_db, x, |b, t| mb_ppp(b, delta, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::hypf::mb_ppp_real;

    fn toy() -> MetaCurve {
        MetaCurve::new(
            vec![-10.0, -5.0, 0.0],
            vec![0.2, 0.8],
            vec![vec![1.0, 0.9], vec![0.9, 0.5], vec![0.7, 0.2]],
            Provenance::Empirical,
        )
        .unwrap()
    }

    #[test]
    fn zero_shift_is_identity_and_shifts_invert() {
        let c = toy();
        let s = shifted_meta(&c, 0.0).unwrap();
        assert_eq!(s.values, c.values);
        assert_eq!(s.theta_db, c.theta_db);
        let back = shifted_meta(&shifted_meta(&c, 3.6099).unwrap(), -3.6099).unwrap();
        assert_eq!(back.values, c.values);
        for (a, b) in back.theta_db.iter().zip(&c.theta_db) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_moves_the_curve_right() {
        let c = toy();
        let s = shifted_meta_on(&c, 2.0, &[-8.0, -5.5]).unwrap();
        assert!((s.values[0][1] - 0.9).abs() < 1e-12);
        assert!((s.values[1][1] - 0.7).abs() < 1e-12);
        assert!(matches!(shifted_meta_on(&c, 2.0, &[-9.0]), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn malformed_curves_rejected() {
        assert!(MetaCurve::new(vec![0.0], vec![0.5], vec![vec![1.2]], Provenance::Beta).is_err());
        assert!(MetaCurve::new(vec![0.0, 0.0], vec![0.5], vec![vec![0.1], vec![0.1]], Provenance::Beta).is_err());
        assert!(MetaCurve::new(vec![0.0], vec![0.5, 0.6], vec![vec![0.1]], Provenance::Beta).is_err());
    }

    #[test]
    fn beta_and_gp_agree_for_the_ppp() {
        let x: Vec<f64> = (1..=19).map(|i| 0.05 * i as f64).collect();
        let gp = ppp_meta_curve(4.0, &[0.0], &x).unwrap();
        let beta = beta_meta_curve(&[0.0], &x, |b, t| mb_ppp_real(b, 0.5, t)).unwrap();
        let gap = gp.values[0].iter().zip(&beta.values[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap <= 0.03, "gap {gap}");
        assert!(gp.max_rise_in_x() <= 1e-6);
    }

    #[test]
    fn moment_grid_properties() {
        let b: Vec<Complex64> = [0.0, 1.0, 2.0, 3.0].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let theta: Vec<f64> = (-20..=10).step_by(5).map(|d| db_to_linear(d as f64)).collect();
        let g = MomentGrid::compute(&b, &theta, |b, t| mb_ppp(b, 0.5, t)).unwrap();
        for j in 0..theta.len() {
            assert_eq!(g.get(0, j).re, 1.0);
            for i in 1..b.len() {
                let (prev, cur) = (g.get(i - 1, j), g.get(i, j));
                assert!(cur.im.abs() < 1e-14 && cur.re > 0.0 && cur.re <= prev.re + 1e-14);
                if j > 0 {
                    assert!(cur.re <= g.get(i, j - 1).re + 1e-14);
                }
            }
            assert!(g.get(2, j).re >= g.get(1, j).re.powi(2) - 1e-14);
        }
    }
}
