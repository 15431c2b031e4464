//! Experiment configuration files (JSON).
//!
//! All user-facing thresholds and gains are in dB.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pp::{ProcessKind, Window};
use crate::sir::TierSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    G0,
    Gb,
    Moments,
    MetaAnalytic,
    MetaBeta,
    MetaSim,
    Hcn,
    CriticalTheta,
    Compare,
    Figures,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::G0 => "g0",
            Mode::Gb => "gb",
            Mode::Moments => "moments",
            Mode::MetaAnalytic => "meta-analytic",
            Mode::MetaBeta => "meta-beta",
            Mode::MetaSim => "meta-sim",
            Mode::Hcn => "hcn",
            Mode::CriticalTheta => "critical-theta",
            Mode::Compare => "compare",
            Mode::Figures => "figures",
        }
    }

    fn needs_gains(self) -> bool {
        matches!(self, Mode::Moments | Mode::MetaAnalytic | Mode::MetaBeta | Mode::Hcn | Mode::Compare)
    }
}

/// Inclusive `start..=stop` in steps of `step` dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ThetaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(config_err("theta_db.step", "must be > 0"));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop >= self.start) {
            return Err(config_err("theta_db", "need finite start <= stop"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub tiers: Vec<TierSpec>,
    #[serde(default)]
    pub window: Window,
    pub theta_db: ThetaGrid,
    #[serde(default = "default_x")]
    pub x: Vec<f64>,
    #[serde(default = "default_b")]
    pub b: Vec<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_x() -> Vec<f64> {
    vec![0.95]
}

fn default_b() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn default_n() -> usize {
    10_000
}

fn default_seed() -> u64 {
    1
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl Default for ExperimentConfig {
    /// Single Poisson tier, alpha = 4, density 0.1.
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::MetaAnalytic,
            tiers: vec![TierSpec::new(ProcessKind::Poisson, 0.1, 1.0, 4.0)
                .expect("valid default tier")
                .with_gain_db(0.0)],
            window: Window::default(),
            theta_db: ThetaGrid {
                start: -20.0,
                stop: 10.0,
                step: 1.0,
            },
            x: default_x(),
            b: default_b(),
            n: default_n(),
            seed: default_seed(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn theta_points(&self) -> Vec<f64> {
        self.theta_db.points()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tiers.is_empty() {
            return Err(config_err("tiers", "at least one tier is required"));
        }
        for (k, t) in self.tiers.iter().enumerate() {
            t.validate()
                .and_then(|_| t.kind.check_density(t.lambda))
                .map_err(|e| config_err(&format!("tiers[{k}]"), e.to_string()))?;
            if self.mode.needs_gains() && t.gain_db.is_none() && t.kind != ProcessKind::Poisson {
                return Err(config_err(
                    &format!("tiers[{k}].gain_db"),
                    format!("mode {} needs the gain of every non-Poisson tier", self.mode.as_str()),
                ));
            }
        }
        self.theta_db.validate()?;
        if self.x.is_empty() || self.x.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(config_err("x", "need at least one value, all within [0, 1]"));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_err("x", "must be strictly increasing"));
        }
        if self.b.iter().any(|b| !b.is_finite()) {
            return Err(config_err("b", "must be finite"));
        }
        if self.n == 0 {
            return Err(config_err("n", "must be >= 1"));
        }
        match self.mode {
            Mode::Gb if self.b.iter().any(|&b| b <= 0.0) => Err(config_err("b", "gains need positive orders")),
            Mode::CriticalTheta if self.tiers.iter().any(|t| !matches!(t.kind, ProcessKind::TriangularLattice { .. })) => {
                Err(config_err("tiers", "critical-theta needs triangular lattice tiers"))
            }
            Mode::CriticalTheta if self.x.iter().any(|&x| x <= 0.0 || x >= 1.0) => {
                Err(config_err("x", "critical-theta needs 0 < x < 1"))
            }
            _ => Ok(()),
        }
    }

    /// Tiers with Poisson gains defaulted to 0 dB.
    pub fn tiers_with_gains(&self) -> Vec<TierSpec> {
        self.tiers
            .iter()
            .map(|t| match (t.gain_db, t.kind) {
                (None, ProcessKind::Poisson) => t.with_gain_db(0.0),
                _ => *t,
            })
            .collect()
    }
}
