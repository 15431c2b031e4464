use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("realization contains no base station")]
    EmptyRealization,

    #[error("quadrature did not converge: estimated error {achieved:.3e} exceeds tolerance {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("tier {tier}: {source}")]
    Tier {
        tier: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all tiers must share one path-loss exponent (found {first} and {other})")]
    UnequalPathLoss { first: f64, other: f64 },

    #[error("target {target} is outside the achievable interval [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("truncation radius {radius} too small: omitted tail may change log P_s by up to {tail_bound:.3e}")]
    Truncation { radius: f64, tail_bound: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_tier(self, tier: usize) -> Self {
        Error::Tier {
            tier,
            source: Box::new(self),
        }
    }
}

pub(crate) fn ensure_finite_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}
