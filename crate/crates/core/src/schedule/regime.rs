//! The seven clipping-level regimes without privacy noise.
//!
//! With `A = LR` (convex) or `A = sqrt(LΔ)` (non-convex), the level `λ` is first placed
//! against `4A` and `4A/3`, then `(λ, ζ_λ, σ)` are ordered. Comparisons are closed and
//! the first matching row wins, so every input lands in exactly one regime.

use serde::Serialize;

use super::{zeta_lambda, TheoryParams};
use crate::error::{Error, Result};

/// Default `η` as a fraction of `A`.
pub const DEFAULT_ETA_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `λ > 4A`, so `ζ_λ = 0`.
    Unbiased,
    /// `4A/3 < λ <= 4A`, `ζ_λ <= λ <= σ`.
    MidNoiseAboveLevel,
    /// `4A/3 < λ <= 4A`, `ζ_λ <= σ <= λ`.
    MidNoiseBetween,
    /// `4A/3 < λ <= 4A`, `σ <= ζ_λ <= λ`.
    MidBiasAboveNoise,
    /// `λ <= 4A/3`, `λ <= ζ_λ <= σ`.
    SmallNoiseAboveBias,
    /// `λ <= 4A/3`, `λ <= σ <= ζ_λ`.
    SmallNoiseBetween,
    /// `λ <= 4A/3`, `σ <= λ <= ζ_λ`.
    SmallNoiseBelowLevel,
}

impl Regime {
    pub const ALL: [Regime; 7] = [
        Regime::Unbiased,
        Regime::MidNoiseAboveLevel,
        Regime::MidNoiseBetween,
        Regime::MidBiasAboveNoise,
        Regime::SmallNoiseAboveBias,
        Regime::SmallNoiseBetween,
        Regime::SmallNoiseBelowLevel,
    ];

    /// Row number `1..=7`, top to bottom.
    pub fn row(self) -> u8 {
        Regime::ALL.iter().position(|&r| r == self).unwrap() as u8 + 1
    }

    pub fn condition(self) -> &'static str {
        match self {
            Regime::Unbiased => "lambda > 4A (zeta = 0)",
            Regime::MidNoiseAboveLevel => "4A/3 < lambda <= 4A, zeta <= lambda <= sigma",
            Regime::MidNoiseBetween => "4A/3 < lambda <= 4A, zeta <= sigma <= lambda",
            Regime::MidBiasAboveNoise => "4A/3 < lambda <= 4A, sigma <= zeta <= lambda",
            Regime::SmallNoiseAboveBias => "lambda <= 4A/3, lambda <= zeta <= sigma",
            Regime::SmallNoiseBetween => "lambda <= 4A/3, lambda <= sigma <= zeta",
            Regime::SmallNoiseBelowLevel => "lambda <= 4A/3, sigma <= lambda <= zeta",
        }
    }
}

/// Which of the two table cells applies in the rows that print two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubCase {
    /// The noise term dominates the bias term.
    NoiseDominated,
    /// The bias term dominates.
    BiasDominated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub row: u8,
    pub condition: &'static str,
    pub sub_case: Option<SubCase>,
    pub zeta: f64,
    /// The row's neighborhood expression evaluated at the given parameters.
    pub neighborhood: f64,
    pub rate_label: &'static str,
    pub optimal_lambda: Option<f64>,
    pub notes: Vec<String>,
}

const EXACT_RATE: &str = "(alpha-1)/alpha-rate to exact optimum";
const NEIGHBORHOOD_RATE: &str = "1/sqrt(K)-rate to neighborhood";

fn place(lambda: f64, zeta: f64, sigma: f64, a: f64) -> Regime {
    if lambda > 4.0 * a {
        Regime::Unbiased
    } else if lambda > 4.0 * a / 3.0 {
        if lambda <= sigma {
            Regime::MidNoiseAboveLevel
        } else if zeta <= sigma {
            Regime::MidNoiseBetween
        } else {
            Regime::MidBiasAboveNoise
        }
    } else if zeta <= sigma {
        Regime::SmallNoiseAboveBias
    } else if lambda <= sigma {
        Regime::SmallNoiseBetween
    } else {
        Regime::SmallNoiseBelowLevel
    }
}

/// Places `p` in one of the seven regimes and evaluates that row's cells.
///
/// `eta` is the small offset in the `4A - η` and `4A/3 - η` cells and defaults to
/// `DEFAULT_ETA_FRACTION * A`. The tables assume no privacy noise, so `σ_ω > 0` is
/// rejected.
pub fn classify_regime(p: &TheoryParams, eta: Option<f64>) -> Result<RegimeReport> {
    p.validate()?;
    if p.sigma_omega > 0.0 {
        return Err(Error::TablesNotApplicable {
            sigma_omega: p.sigma_omega,
        });
    }
    let a = p.scale();
    let eta = eta.unwrap_or(DEFAULT_ETA_FRACTION * a);
    if !(eta > 0.0 && eta < 4.0 * a / 3.0) {
        return Err(Error::params(
            "eta",
            format!("must lie in (0, 4A/3) with A = {a}, got {eta}"),
        ));
    }

    let (lam, sigma, al) = (p.lambda, p.sigma, p.alpha);
    let zeta = zeta_lambda(p);
    let regime = place(lam, zeta, sigma, a);

    // Neighborhood prefactors: P = R or sqrt(LΔ); Q = LR² or LΔ.
    let (pf, qf) = if p.convex {
        (p.radius, p.smoothness * p.radius * p.radius)
    } else {
        (a, p.smoothness * p.radius)
    };
    let sa = sigma.powf(al);
    let noise_cell = pf * sa / lam.powf(al - 1.0) + qf * sa * sa / lam.powf(2.0 * al);
    let bias_cell = pf * zeta + qf * zeta * zeta / (lam * lam);
    let heavy_bias_cell = pf * zeta.powf(al + 1.0) / lam.powf(al)
        + qf * zeta.powf(2.0 * al) / lam.powf(2.0 * al + 2.0);

    let mut notes = Vec::new();
    let (sub_case, neighborhood, optimal) = match regime {
        Regime::Unbiased => {
            let k = p.iterations as f64;
            let l = (k / p.beta).ln();
            let opt = (l > 0.0).then(|| sigma * (k / l).powf(1.0 / al));
            if opt.is_none() {
                notes.push("ln(K/beta) <= 0: optimal lambda undefined".to_string());
            }
            (None, noise_cell, opt)
        }
        Regime::MidNoiseAboveLevel => (None, noise_cell, Some(4.0 * a)),
        Regime::MidNoiseBetween => {
            if sa >= lam.powf(al - 1.0) * zeta {
                (Some(SubCase::NoiseDominated), noise_cell, Some(4.0 * a))
            } else {
                (Some(SubCase::BiasDominated), bias_cell, Some(4.0 * a - eta))
            }
        }
        Regime::MidBiasAboveNoise => (None, bias_cell, Some(4.0 * a - 2.0 * sigma)),
        Regime::SmallNoiseAboveBias => {
            let n = pf * sa * zeta / lam.powf(al)
                + qf * sa * sa * zeta * zeta / lam.powf(2.0 * al + 2.0);
            (None, n, Some(4.0 * a / 3.0))
        }
        Regime::SmallNoiseBetween => (None, heavy_bias_cell, Some(4.0 * a / 3.0 - eta)),
        Regime::SmallNoiseBelowLevel => {
            if zeta.powf(al + 1.0) / lam >= zeta.powf(al - 1.0) * sigma {
                (
                    Some(SubCase::BiasDominated),
                    heavy_bias_cell,
                    Some(4.0 * a / 3.0 - eta),
                )
            } else {
                let n = pf * sigma * zeta.powf(al - 1.0) / lam.powf(al - 1.0)
                    + qf * sigma * sigma * zeta.powf(2.0 * al - 2.0) / lam.powf(2.0 * al);
                (Some(SubCase::NoiseDominated), n, Some(4.0 * a / 3.0))
            }
        }
    };

    if p.iterations < 1000 {
        notes.push(format!(
            "K = {} may be too small for the asymptotic optimal-lambda formulas",
            p.iterations
        ));
    }

    Ok(RegimeReport {
        regime,
        row: regime.row(),
        condition: regime.condition(),
        sub_case,
        zeta,
        neighborhood,
        rate_label: if regime == Regime::Unbiased {
            EXACT_RATE
        } else {
            NEIGHBORHOOD_RATE
        },
        optimal_lambda: optimal,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::tests::convex;
    use proptest::prelude::*;

    fn params(sigma: f64, lambda: f64) -> TheoryParams {
        TheoryParams {
            sigma,
            alpha: 1.5,
            iterations: 1000,
            ..convex(lambda)
        }
    }

    #[test]
    fn unbiased_row() {
        let r = classify_regime(&params(1.0, 5.0), None).unwrap();
        assert_eq!(r.regime, Regime::Unbiased);
        assert_eq!(r.zeta, 0.0);
        let expected = (1000.0 / (1000.0f64 / 0.1).ln()).powf(1.0 / 1.5);
        assert!((r.optimal_lambda.unwrap() - expected).abs() < 1e-12 * expected);
        assert_eq!(r.rate_label, EXACT_RATE);
    }

    #[test]
    fn mid_row_with_large_noise() {
        let r = classify_regime(&params(10.0, 2.0), None).unwrap();
        assert_eq!(r.regime, Regime::MidNoiseAboveLevel);
        assert_eq!(r.zeta, 1.0);
        assert_eq!(r.optimal_lambda, Some(4.0));
        assert_eq!(r.rate_label, NEIGHBORHOOD_RATE);
    }

    #[test]
    fn small_row_with_large_noise() {
        let r = classify_regime(&params(10.0, 1.0), None).unwrap();
        assert_eq!(r.regime, Regime::SmallNoiseAboveBias);
        assert_eq!(r.zeta, 1.5);
        assert!((r.optimal_lambda.unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn remaining_rows() {
        // ζ = 1, σ = 1.5 between ζ and λ = 2.
        let r = classify_regime(&params(1.5, 2.0), None).unwrap();
        assert_eq!(r.regime, Regime::MidNoiseBetween);
        // σ below ζ = 1 < λ = 2.
        let r = classify_regime(&params(0.5, 2.0), None).unwrap();
        assert_eq!(r.regime, Regime::MidBiasAboveNoise);
        assert_eq!(r.optimal_lambda, Some(3.0));
        // λ = 1 < σ = 1.2 < ζ = 1.5.
        let r = classify_regime(&params(1.2, 1.0), None).unwrap();
        assert_eq!(r.regime, Regime::SmallNoiseBetween);
        // σ = 0.5 < λ = 1 < ζ = 1.5.
        let r = classify_regime(&params(0.5, 1.0), None).unwrap();
        assert_eq!(r.regime, Regime::SmallNoiseBelowLevel);
        assert_eq!(r.sub_case, Some(SubCase::BiasDominated));
    }

    #[test]
    fn ties_go_to_the_earlier_row() {
        // λ = σ = 2 with ζ = 1: both rows 2 and 3 match.
        let r = classify_regime(&params(2.0, 2.0), None).unwrap();
        assert_eq!(r.regime, Regime::MidNoiseAboveLevel);
        // λ exactly 4A belongs to the middle band.
        let r = classify_regime(&params(1.0, 4.0), None).unwrap();
        assert_eq!(r.regime, Regime::MidNoiseBetween);
    }

    #[test]
    fn privacy_noise_is_rejected() {
        let p = TheoryParams {
            sigma_omega: 1.0,
            ..params(1.0, 5.0)
        };
        assert!(matches!(
            classify_regime(&p, None),
            Err(Error::TablesNotApplicable { .. })
        ));
    }

    #[test]
    fn small_k_is_noted() {
        let p = TheoryParams {
            iterations: 10,
            ..params(1.0, 5.0)
        };
        assert!(!classify_regime(&p, None).unwrap().notes.is_empty());
    }

    proptest! {
        #[test]
        fn orderings_hold(
            lam in 1e-3..1e3f64, l in 1e-2..1e2f64, r in 1e-2..1e2f64,
            sigma in 1e-3..1e3f64, alpha in 1.01..2.0f64, convex in any::<bool>()
        ) {
            let p = TheoryParams { smoothness: l, radius: r, sigma, alpha, lambda: lam, convex, ..params(1.0, 1.0) };
            let rep = classify_regime(&p, None).unwrap();
            let a = p.scale();
            let z = rep.zeta;
            let ok = match rep.regime {
                Regime::Unbiased => lam > 4.0 * a && z == 0.0,
                Regime::MidNoiseAboveLevel => lam > 4.0 * a / 3.0 && lam <= 4.0 * a && z <= lam && lam <= sigma,
                Regime::MidNoiseBetween => lam > 4.0 * a / 3.0 && lam <= 4.0 * a && z <= sigma && sigma <= lam,
                Regime::MidBiasAboveNoise => lam > 4.0 * a / 3.0 && lam <= 4.0 * a && sigma <= z && z <= lam,
                Regime::SmallNoiseAboveBias => lam <= 4.0 * a / 3.0 && lam <= z && z <= sigma,
                Regime::SmallNoiseBetween => lam <= 4.0 * a / 3.0 && lam <= sigma && sigma <= z,
                Regime::SmallNoiseBelowLevel => lam <= 4.0 * a / 3.0 && sigma <= lam && lam <= z,
            };
            prop_assert!(ok, "{:?} {} {} {}", rep.regime, lam, z, sigma);
            prop_assert!(rep.neighborhood >= 0.0);
        }
    }
}
