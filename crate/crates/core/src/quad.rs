//! Globally adaptive Gauss-Kronrod (7/15) quadrature for real- and
//! complex-valued integrands on finite intervals.
//!
//! Error estimates follow the QUADPACK rescaling of |K15 - G7|. Intervals are
//! kept in a max-heap keyed on their error estimate and the worst one is
//! bisected until the total estimate meets `max(abs_tol, rel_tol * |I|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: a vector space over the reals with a norm.
pub trait Integrand:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    pub const fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    fn target(&self, value_norm: f64) -> f64 {
        self.abs.max(self.rel * value_norm)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub abs_error: f64,
    pub evaluations: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    floor: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 15-point Kronrod rule on `[a, b]`: returns (value, error estimate).
pub fn gk15<T: Integrand, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let (v, e, _) = gk15_full(f, a, b);
    (v, e)
}

/// [`gk15`] plus the roundoff floor of its error estimate.
fn gk15_full<T: Integrand, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = fc.norm() * WGK[7];
    let mut values = [(T::zero(), T::zero()); 7];
    for (j, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        values[j] = (f1, f2);
        kronrod = kronrod + (f1 + f2) * WGK[j];
        res_abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut res_asc = (fc - mean).norm() * WGK[7];
    for (j, &(f1, f2)) in values.iter().enumerate() {
        res_asc += ((f1 - mean).norm() + (f2 - mean).norm()) * WGK[j];
    }
    let h = half.abs();
    let err = rescale_error(((kronrod - gauss) * half).norm(), res_abs * h, res_asc * h);
    (kronrod * half, err, 50.0 * f64::EPSILON * res_abs * h)
}

/// Adaptive integration of `f` over `[a, b]`.
///
/// On non-convergence the error carries the achieved error estimate.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate<T>>
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    integrate_panels(&mut f, &[a, b], tol)
}

/// Like [`integrate`] but starts from the given breakpoints.
pub fn integrate_panels<T, F>(f: &mut F, breaks: &[f64], tol: Tolerance) -> Result<Estimate<T>>
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    assert!(breaks.len() >= 2, "need at least one panel");
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 4);
    let mut total = T::zero();
    let mut total_err = 0.0;
    // Accuracy below this is out of reach in double precision.
    let mut floor = 0.0;
    for w in breaks.windows(2) {
        let (v, e, r) = gk15_full(f, w[0], w[1]);
        total = total + v;
        total_err += e;
        floor += r;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
            floor: r,
        });
    }
    let mut evaluations = 15 * (breaks.len() - 1);
    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature {
                achieved: f64::INFINITY,
                requested: tol.target(0.0),
            });
        }
        let target = tol.target(total.norm());
        if total_err <= target.max(2.0 * floor) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: target,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: target,
            });
        }
        let (v1, e1, r1) = gk15_full(f, worst.a, mid);
        let (v2, e2, r2) = gk15_full(f, mid, worst.b);
        floor += r1 + r2 - worst.floor;
        evaluations += 30;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            floor: r1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            floor: r2,
        });
    }
    // Re-sum to shed the drift of incremental updates.
    let mut value = T::zero();
    let mut abs_error = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        abs_error += p.error;
    }
    Ok(Estimate {
        value,
        abs_error,
        evaluations,
    })
}

/// Fixed-order Gauss-Legendre nodes and weights on [-1, 1] by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
/// the extrapolated limit and a crude error estimate (difference between the
/// last two extrapolations).
pub fn wynn_epsilon(partial_sums: &[f64]) -> (f64, f64) {
    let n = partial_sums.len();
    if n < 3 {
        let last = *partial_sums.last().unwrap_or(&0.0);
        let prev = if n >= 2 { partial_sums[n - 2] } else { 0.0 };
        return (last, (last - prev).abs());
    }
    // eps[k] holds column k of the table for the current diagonal sweep.
    let mut prev_col = vec![0.0; n + 1];
    let mut col: Vec<f64> = partial_sums.to_vec();
    let mut best = (col[n - 1], f64::INFINITY);
    let mut last_even: Option<f64> = None;
    let mut k = 0;
    while col.len() > 1 {
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            let d = col[i + 1] - col[i];
            let base = prev_col[i + 1];
            next.push(if d == 0.0 { f64::INFINITY } else { base + 1.0 / d });
        }
        prev_col = col;
        col = next;
        k += 1;
        if k % 2 == 0 {
            let v = *col.last().expect("non-empty column");
            if !v.is_finite() {
                break;
            }
            if let Some(prev) = last_even {
                let err = (v - prev).abs();
                if err < best.1 {
                    best = (v, err);
                }
            }
            last_even = Some(v);
        }
    }
    if !best.1.is_finite() {
        let last = partial_sums[n - 1];
        return (last, (last - partial_sums[n - 2]).abs());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x: f64| x.powi(5) - 2.0 * x, 0.0, 2.0, Tolerance::new(1e-14, 1e-14)).unwrap();
        assert!((est.value - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let est = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn complex_oscillatory() {
        // int_0^10 e^{i 5 x} dx = (e^{50 i} - 1)/(5 i)
        let est = integrate(
            |x: f64| Complex64::new(0.0, 5.0 * x).exp(),
            0.0,
            10.0,
            Tolerance::new(1e-12, 1e-12),
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 50.0).exp() - 1.0) / Complex64::new(0.0, 5.0);
        assert!((est.value - exact).norm() < 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(
            |x: f64| (1.0 / x).sin() / x,
            1e-9,
            1.0,
            Tolerance::new(1e-14, 1e-14).with_max_intervals(20),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Quadrature { achieved, .. } if achieved > 0.0));
    }

    #[test]
    fn gauss_legendre_weights() {
        let (x, w) = gauss_legendre(20);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((i - 2.0 / 11.0).abs() < 1e-13);
    }
    #[test]
    fn epsilon_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut sums = Vec::new();
        let mut acc = 0.0;
        for k in 1..=15 {
            acc += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            sums.push(acc);
        }
        let (v, _) = wynn_epsilon(&sums);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-10, "{v}");
    }
}
