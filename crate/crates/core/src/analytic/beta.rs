//! Two-moment beta fit of a `[0, 1]` variable.

use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};

/// Relative slack on the moment-pair constraints `m1^2 <= m2 <= m1`.
const PAIR_SLACK: f64 = 1e-12;

/// Beta shape parameters matching mean `m1` and second moment `m2`.
/// Returns `None` for the degenerate pairs (zero variance or a Bernoulli).
pub fn beta_shapes(m1: f64, m2: f64) -> Result<Option<(f64, f64)>> {
    if !(m1 > 0.0 && m1 <= 1.0) {
        return Err(Error::invalid("m1", format!("must lie in (0, 1], got {m1}")));
    }
    if !m2.is_finite() || m2 < m1 * m1 * (1.0 - PAIR_SLACK) || m2 > m1 * (1.0 + PAIR_SLACK) {
        return Err(Error::invalid(
            "m2",
            format!("({m1}, {m2}) is not a moment pair of a [0, 1] variable"),
        ));
    }
    let var = m2 - m1 * m1;
    if var <= m1 * m1 * PAIR_SLACK || m2 >= m1 * (1.0 - PAIR_SLACK) {
        return Ok(None);
    }
    let k = m1 * (1.0 - m1) / var - 1.0;
    Ok(Some((m1 * k, (1.0 - m1) * k)))
}

/// `P(X > x)` for the beta variable with moments `(m1, m2)`.
///
/// Zero variance is treated as a point mass at `m1` (with `P(X > m1) = 0`),
/// and `m2 = m1` as the Bernoulli limit with mass `m1` at 1.
pub fn beta_approx(m1: f64, m2: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid("x", format!("must lie in [0, 1], got {x}")));
    }
    match beta_shapes(m1, m2)? {
        Some((a, b)) => {
            let dist = Beta::new(a, b).map_err(|e| Error::invalid("m2", e.to_string()))?;
            Ok(dist.sf(x).clamp(0.0, 1.0))
        }
        None if m2 >= m1 * (1.0 - PAIR_SLACK) && m1 < 1.0 => Ok(if x < 1.0 { m1 } else { 0.0 }),
        None => Ok(if x < m1 { 1.0 } else { 0.0 }),
    }
}
