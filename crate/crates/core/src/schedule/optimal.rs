//! Optimal clipping level when Gaussian-mechanism noise is calibrated to `(ε, δ)`.
//!
//! With `D = d ln(K/δ) ln(1/δ) ln(K/β)` and `A = LR` (or `sqrt(LΔ)`):
//! the large-level branch is `max{4A, (ε σ^α / D)^{1/α}}` and the small-level branch is
//! `min{4A/3, 2εA / (D^{1/(2α+2)} + 1)}`.

use serde::{Deserialize, Serialize};

use super::TheoryParams;
use crate::error::Result;
use crate::privacy::PrivacyTarget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaBranch {
    /// `λ > 4A`
    Large,
    /// `λ <= 4A/3`
    Small,
}

/// Uses `K`, `d`, `β`, `σ`, `α` from `p` and `ε`, `δ` from `target`.
pub fn optimal_lambda_dp(
    p: &TheoryParams,
    target: &PrivacyTarget,
    branch: LambdaBranch,
) -> Result<f64> {
    p.validate()?;
    target.validate()?;
    let k = p.iterations as f64;
    let delta = target.delta;
    let d = p.dim as f64 * (k / delta).ln() * (1.0 / delta).ln() * (k / p.beta).ln();
    let a = p.scale();
    let eps = target.epsilon;
    Ok(match branch {
        LambdaBranch::Large => {
            let free = (eps * p.sigma.powf(p.alpha) / d).powf(1.0 / p.alpha);
            (4.0 * a).max(free)
        }
        LambdaBranch::Small => {
            let free = 2.0 * eps * a / (d.powf(1.0 / (2.0 * p.alpha + 2.0)) + 1.0);
            (4.0 * a / 3.0).min(free)
        }
    })
}
