//! Analytic moments and meta distributions.

pub mod beta;
pub mod curve;
pub mod gp;
pub mod hcn;
pub mod hypf;

pub use beta::{beta_approx, beta_shapes};
pub use curve::{
    beta_meta_curve, gp_meta_curve, ppp_meta_curve, shifted_meta, shifted_meta_on, MetaCurve, MomentGrid, Provenance,
};
pub use gp::{gil_pelaez, gil_pelaez_with, GpOptions, GpValue};
pub use hcn::{mb_hcn_hat, mb_hcn_same_alpha, mb_hcn_tier, mb_hip, HcnSpec};
pub use hypf::{hyp_f, hyp_f_real, hyp_f_series, mb_ppp, mb_ppp_real};
