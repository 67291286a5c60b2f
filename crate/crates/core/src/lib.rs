//! John's sphericity test for the disturbances of fixed-effects panel data
//! models with many cross-section units.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: trace functionals of sample and population covariance
//!   matrices (`tr S`, `tr S²`, `tr Σᵏ`, Hadamard traces, spectral moments).
//! - [`sim`] and [`rng`]: reproducible generation of disturbances, factor
//!   alternatives and full panels.
//! - [`within`]: the within (fixed-effects) estimator, residuals and the
//!   residual fourth moment.
//! - [`sphericity`]: the classic χ² John test, the raw-data large-panel test
//!   and the residual-based GRJ test.
//! - [`power`]: closed-form asymptotic means, variances and power functions.
//! - [`mc`]: Monte-Carlo size/power experiments and residual-gap studies.
//! - [`panel_csv`], [`cli`] and [`validate`]: file formats, the command-line
//!   surface and the built-in validation suite.

pub mod cli;
pub mod dist;
pub mod error;
pub mod kernels;
pub mod mc;
pub mod panel_csv;
pub mod power;
pub mod rng;
pub mod sim;
pub mod sphericity;
pub mod validate;
pub mod within;

mod sum;

pub use error::{Error, Result};
pub use kernels::{
    eta_limits, mp_moments, sample_traces, sigma_traces, theta_moments, CovarianceSpec,
    DisturbanceMatrix, LoadingPolicy, MomentSet, SampleTracePair, SigmaTraces,
};
pub use sim::{
    gen_disturbances, gen_factor_disturbances, gen_panel, ErrorDistribution, FactorAlternative,
    PanelData,
};
pub use sphericity::{
    classic_john_test, grj_test, john_u, raw_panel_test, TestReport, TestVariant,
};
pub use within::{demean, gamma4_hat, within_ols, WithinFit};
