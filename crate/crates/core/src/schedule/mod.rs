//! Step-size conditions, the bias level `ζ_λ`, the regime tables for the clipping
//! level, optimal clipping levels under privacy, and the high-probability bounds.
//!
//! The convex theory is parameterised by the initial distance `R`; the non-convex
//! theory by the initial gap `Δ >= f(x⁰) - f*`. Both live in [`TheoryParams::radius`].

mod optimal;
mod regime;
mod stepsize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use optimal::{optimal_lambda_dp, LambdaBranch};
pub use regime::{classify_regime, Regime, RegimeReport, SubCase, DEFAULT_ETA_FRACTION};
pub use stepsize::{
    reduced_rule_lambda_limit, stepsize_convex_full, stepsize_convex_reduced, stepsize_full,
    stepsize_nonconvex_full, stepsize_nonconvex_reduced, stepsize_reduced, StepSizeParts,
};

/// Constants shared by the step-size rules, bounds and regime tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryParams {
    /// Smoothness constant `L`.
    pub smoothness: f64,
    /// `R` when convex, `Δ` otherwise.
    pub radius: f64,
    /// `σ` from the certified moment bound `σ^α`.
    pub sigma: f64,
    pub alpha: f64,
    /// Number of update steps `K`.
    pub iterations: u64,
    /// Failure probability `β`.
    pub beta: f64,
    pub lambda: f64,
    pub sigma_omega: f64,
    pub dim: usize,
    pub convex: bool,
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::params(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        positive("smoothness", self.smoothness)?;
        positive("radius", self.radius)?;
        positive("sigma", self.sigma)?;
        positive("lambda", self.lambda)?;
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(Error::params(
                "alpha",
                format!("must lie in (1, 2], got {}", self.alpha),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::params("iterations", "must be >= 1"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::params(
                "beta",
                format!("must lie in (0, 1], got {}", self.beta),
            ));
        }
        if !(self.sigma_omega >= 0.0 && self.sigma_omega.is_finite()) {
            return Err(Error::params(
                "sigma_omega",
                format!("must be nonnegative and finite, got {}", self.sigma_omega),
            ));
        }
        if self.dim == 0 {
            return Err(Error::params("dim", "must be >= 1"));
        }
        Ok(())
    }

    /// `LR` when convex, `sqrt(LΔ)` otherwise: the scale of every regime threshold.
    pub fn scale(&self) -> f64 {
        if self.convex {
            self.smoothness * self.radius
        } else {
            (self.smoothness * self.radius).sqrt()
        }
    }

    pub(crate) fn k1(&self) -> f64 {
        self.iterations as f64 + 1.0
    }
}

/// `ζ_λ = max{0, 2LR - λ/2}`, or `max{0, 2 sqrt(LΔ) - λ/2}` in the non-convex case.
pub fn zeta_lambda(p: &TheoryParams) -> f64 {
    (2.0 * p.scale() - p.lambda / 2.0).max(0.0)
}

/// Right-hand side of the high-probability bound at step-size `gamma`.
///
/// Convex: `min_t f(x^t) - f* <= 4R²/(γ(K+1)) + 64LR⁴/(λ²γ²(K+1)²)`.
/// Non-convex: `min_t ‖∇f(x^t)‖² <= 8Δ/(γ(K+1)) + 128Δ²/(λ²γ²(K+1)²)`.
pub fn theory_bound(p: &TheoryParams, gamma: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    let k1 = p.k1();
    let gk = gamma * k1;
    let l2 = p.lambda * p.lambda;
    let r = p.radius;
    Ok(if p.convex {
        4.0 * r * r / gk + 64.0 * p.smoothness * r.powi(4) / (l2 * gk * gk)
    } else {
        8.0 * r / gk + 128.0 * r * r / (l2 * gk * gk)
    })
}
