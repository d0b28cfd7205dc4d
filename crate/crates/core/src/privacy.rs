//! Gaussian-mechanism noise calibration.
//!
//! Expectation minimisation uses advanced composition over `K` releases:
//! `σ_ω = c_dp · (λ/ε) · sqrt(K · ln(K/δ) · ln(1/δ))`.
//! The finite-sum setting with sampling ratio `q` uses
//! `σ_ω = c_dp · (q·λ/ε) · sqrt(K · ln(1/δ))`, valid when `ε = O(q²K)`.
//!
//! Only the order of these expressions is known, so the constant `c_dp` is explicit
//! and defaults to 1.

use serde::{Deserialize, Serialize};

use crate::clipping::ClipLevel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum PrivacyRegime {
    Expectation,
    FiniteSum {
        /// Sampling ratio `b/n` in `(0, 1]`.
        q: f64,
    },
}

fn default_c_dp() -> f64 {
    1.0
}

/// An `(ε, δ)` target over `iterations` releases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyTarget {
    pub epsilon: f64,
    pub delta: f64,
    pub iterations: u64,
    #[serde(flatten)]
    pub regime: PrivacyRegime,
    #[serde(default = "default_c_dp")]
    pub c_dp: f64,
}

impl PrivacyTarget {
    pub fn expectation(epsilon: f64, delta: f64, iterations: u64) -> Result<Self> {
        let t = PrivacyTarget {
            epsilon,
            delta,
            iterations,
            regime: PrivacyRegime::Expectation,
            c_dp: 1.0,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn finite_sum(epsilon: f64, delta: f64, iterations: u64, q: f64) -> Result<Self> {
        let t = PrivacyTarget {
            epsilon,
            delta,
            iterations,
            regime: PrivacyRegime::FiniteSum { q },
            c_dp: 1.0,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_c_dp(mut self, c_dp: f64) -> Result<Self> {
        self.c_dp = c_dp;
        self.validate()?;
        Ok(self)
    }

    pub fn with_iterations(mut self, iterations: u64) -> Result<Self> {
        self.iterations = iterations;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidTarget(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidTarget(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidTarget("iterations must be >= 1".into()));
        }
        if !(self.c_dp > 0.0 && self.c_dp.is_finite()) {
            return Err(Error::InvalidTarget(format!(
                "c_dp must be positive, got {}",
                self.c_dp
            )));
        }
        if let PrivacyRegime::FiniteSum { q } = self.regime {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::InvalidTarget(format!(
                    "sampling ratio q must lie in (0, 1], got {q}"
                )));
            }
        }
        Ok(())
    }

    /// Whether `ε <= c_dp · q² · K` holds (always true outside the finite-sum regime).
    pub fn finite_sum_condition_holds(&self) -> bool {
        match self.regime {
            PrivacyRegime::Expectation => true,
            PrivacyRegime::FiniteSum { q } => {
                self.epsilon <= self.c_dp * q * q * self.iterations as f64
            }
        }
    }

    /// `σ_ω` per unit of clipping level.
    fn unit_sigma(&self) -> f64 {
        let k = self.iterations as f64;
        let ln_inv_delta = (1.0 / self.delta).ln();
        match self.regime {
            PrivacyRegime::Expectation => {
                self.c_dp / self.epsilon * (k * (k / self.delta).ln() * ln_inv_delta).sqrt()
            }
            PrivacyRegime::FiniteSum { q } => {
                self.c_dp * q / self.epsilon * (k * ln_inv_delta).sqrt()
            }
        }
    }
}

/// Noise scale of the Gaussian mechanism for clipping level `lambda`.
pub fn calibrate_sigma_omega(target: &PrivacyTarget, lambda: ClipLevel) -> Result<f64> {
    target.validate()?;
    if lambda.is_unclipped() {
        return Err(Error::InvalidTarget(
            "privacy requires a finite clipping level".into(),
        ));
    }
    if !target.finite_sum_condition_holds() {
        log::warn!(
            "finite-sum calibration assumes epsilon <= c_dp q^2 K; got epsilon = {}",
            target.epsilon
        );
    }
    Ok(lambda.value() * target.unit_sigma())
}

/// The clipping level at which [`calibrate_sigma_omega`] returns `sigma_omega`.
pub fn invert_lambda_budget(target: &PrivacyTarget, sigma_omega: f64) -> Result<f64> {
    target.validate()?;
    if !(sigma_omega > 0.0 && sigma_omega.is_finite()) {
        return Err(Error::InvalidTarget(format!(
            "sigma_omega must be positive, got {sigma_omega}"
        )));
    }
    Ok(sigma_omega / target.unit_sigma())
}
