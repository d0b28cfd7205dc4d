//! Clipped stochastic gradient descent with Gaussian-mechanism privacy noise,
//! studied under heavy-tailed gradient noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`numkit`] – dense vectors and counter-based random streams.
//! * [`oracles`] – smooth test problems and heavy-tailed stochastic gradient oracles
//!   with certified `(alpha, sigma)` moment bounds.
//! * [`clipping`] – the clipping operator and its analysis quantities.
//! * [`privacy`] – Gaussian-mechanism noise calibration.
//! * [`schedule`] – step-size conditions, regime classification, optimal clipping levels
//!   and the high-probability convergence bounds.
//! * [`optimizer`] – the DP-Clipped-SGD iteration.
//! * [`verifier`] – Monte Carlo checks of the clipped-estimator bias/variance bounds.
//! * [`harness`] – multi-trial experiments, quantiles, rate fits and persistence.
//! * [`config`] – the versioned JSON experiment file.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Frozen reference constants keep every digit of the high-precision oracle.
#![allow(clippy::excessive_precision)]

pub mod clipping;
pub mod config;
pub mod error;
pub mod harness;
pub mod numkit;
pub mod optimizer;
pub mod oracles;
pub mod privacy;
pub mod schedule;
pub mod verifier;

pub use clipping::{clip, clip_factor_c, theta, ClipLevel};
pub use error::{Error, Result};
pub use harness::{
    check_bound, quantile, rate_fit, run_trials, ExperimentConfig, GammaRule, OutputFormat,
    QuantileSummary, RateFit, TrialRecord,
};
pub use numkit::{norm, RngStream, Vector};
pub use optimizer::{run, run_with_theory, Recording, RunConfig, RunRecord, TheoryRun};
pub use oracles::{NoiseKind, NoiseModel, ProblemSpec, StochasticOracle};
pub use privacy::{calibrate_sigma_omega, invert_lambda_budget, PrivacyRegime, PrivacyTarget};
pub use schedule::{
    classify_regime, optimal_lambda_dp, theory_bound, zeta_lambda, LambdaBranch, Regime,
    RegimeReport, StepSizeParts, TheoryParams,
};
pub use verifier::{LemmaRow, LemmaScenario};

/// Schema tag written into every configuration and JSON result file.
pub const SCHEMA_VERSION: &str = "hclip-v1";
