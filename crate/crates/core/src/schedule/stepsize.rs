//! Step-size conditions with their literal constants.
//!
//! The full rule is `γ = min{ceiling, γ₁, ..., γ₆}` with `ceiling = 1/(8L)` (convex)
//! or `1/(4L)` (non-convex). The reduced rule keeps `ceiling, γ₁, γ₂, γ₃` and is valid
//! for large `K` when `λ <= σ (K / ln(K/β))^{1/α}`.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use super::{zeta_lambda, TheoryParams};
use crate::error::{Error, Result};

/// Every term of a step-size rule. Terms that a rule drops are `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSizeParts {
    pub ceiling: f64,
    pub gammas: [f64; 6],
}

impl StepSizeParts {
    /// The componentwise minimum.
    pub fn gamma(&self) -> f64 {
        self.gammas.iter().fold(self.ceiling, |m, &g| m.min(g))
    }

    /// Index of the binding term: `0` for the ceiling, `i` for `γᵢ`.
    /// Ties go to the lowest index.
    pub fn binding(&self) -> usize {
        let g = self.gamma();
        if self.ceiling == g {
            return 0;
        }
        1 + self.gammas.iter().position(|&x| x == g).unwrap_or(0)
    }

    fn checked(self) -> Result<Self> {
        const NAMES: [&str; 6] = [
            "gamma_1", "gamma_2", "gamma_3", "gamma_4", "gamma_5", "gamma_6",
        ];
        for (name, &g) in NAMES.iter().zip(&self.gammas) {
            if !(g > 0.0) {
                return Err(Error::Internal {
                    term: name,
                    value: g,
                });
            }
        }
        Ok(self)
    }
}

/// Quantities shared by the convex and non-convex terms.
struct Common {
    k1: f64,
    pow2: f64,
    /// `1 + ζ^α/σ^α`
    ratio: f64,
    /// `σ^α + ζ^α`
    mass: f64,
    /// The bracket `ζ/λ + 1/2 + λ^{α-1}ζ/(2^{2α-1}(σ^α+ζ^α)) + (1+ζ^α/σ^α)^{-1/α}`.
    bracket: f64,
    ln8: f64,
    ln4: f64,
    phi: f64,
    /// `σ^{α/2} λ^{1-α/2} sqrt(6 (K+1) ln(8(K+1)/β) (1 + ζ^α/σ^α))`
    variance_root: f64,
}

impl Common {
    fn new(p: &TheoryParams) -> Self {
        let a = p.alpha;
        let k1 = p.k1();
        let pow2 = 2f64.powf(2.0 * a - 1.0);
        let zeta = zeta_lambda(p);
        let sa = p.sigma.powf(a);
        let za = zeta.powf(a);
        let ratio = 1.0 + za / sa;
        let mass = sa + za;
        let lam = p.lambda;
        let bracket =
            zeta / lam + 0.5 + lam.powf(a - 1.0) * zeta / (pow2 * mass) + ratio.powf(-1.0 / a);
        let ln8 = (8.0 * k1 / p.beta).ln();
        let ln4 = (4.0 * k1 / p.beta).ln();
        let variance_root =
            p.sigma.powf(a / 2.0) * lam.powf(1.0 - a / 2.0) * (6.0 * k1 * ln8 * ratio).sqrt();
        Common {
            k1,
            pow2,
            ratio,
            mass,
            bracket,
            ln8,
            ln4,
            phi: (3.0 * ln4).sqrt(),
            variance_root,
        }
    }

    /// `sqrt(d(K+1)) (√2 + √2 φ)`, multiplied by `σ_ω` in the third term.
    fn dp_root(&self, p: &TheoryParams) -> f64 {
        (p.dim as f64 * self.k1).sqrt() * (SQRT_2 + SQRT_2 * self.phi)
    }

    /// `λ + σ_ω (sqrt(d) + sqrt(2 ln((K+1)/β)))`
    fn step_length(&self, p: &TheoryParams) -> f64 {
        p.lambda + p.sigma_omega * ((p.dim as f64).sqrt() + (2.0 * (self.k1 / p.beta).ln()).sqrt())
    }

    /// `sqrt(7[(K+1)d + 2 sqrt((K+1)d ln(4(K+1)/β)) + 2 ln(4(K+1)/β)])`
    fn chi_root(&self, p: &TheoryParams) -> f64 {
        let kd = self.k1 * p.dim as f64;
        (7.0 * (kd + 2.0 * (kd * self.ln4).sqrt() + 2.0 * self.ln4)).sqrt()
    }
}

fn over_sigma_omega(num: f64, sigma_omega: f64, den: f64) -> f64 {
    if sigma_omega == 0.0 {
        f64::INFINITY
    } else {
        num / (sigma_omega * den)
    }
}

fn expect_convexity(p: &TheoryParams, convex: bool) -> Result<()> {
    p.validate()?;
    if p.convex != convex {
        return Err(Error::params(
            "convex",
            format!("this step-size rule needs convex = {convex}"),
        ));
    }
    Ok(())
}

/// All six convex terms and the `1/(8L)` ceiling.
pub fn stepsize_convex_full(p: &TheoryParams) -> Result<StepSizeParts> {
    expect_convexity(p, true)?;
    let c = Common::new(p);
    let r = p.radius;
    let lam = p.lambda;
    let g1 = r / (42.0 * (c.pow2 + 1.0).sqrt() * c.variance_root);
    let g2 = r * lam.powf(p.alpha - 1.0)
        / (28.0 * c.k1 * c.pow2 * p.sigma.powf(p.alpha) * c.ratio * c.bracket);
    let g3 = over_sigma_omega(r, p.sigma_omega, 56.0 * c.dp_root(p));
    let g4 = (2.0 - SQRT_2) * r / c.step_length(p);
    let g5 = r / (56.0 * lam * c.ln8);
    let g6 = over_sigma_omega(r, p.sigma_omega, 2.0 * c.chi_root(p));
    StepSizeParts {
        ceiling: 1.0 / (8.0 * p.smoothness),
        gammas: [g1, g2, g3, g4, g5, g6],
    }
    .checked()
}

/// All six non-convex terms and the `1/(4L)` ceiling.
pub fn stepsize_nonconvex_full(p: &TheoryParams) -> Result<StepSizeParts> {
    expect_convexity(p, false)?;
    let c = Common::new(p);
    let s = (p.radius / p.smoothness).sqrt();
    let lam = p.lambda;
    let g1 = s / (21.0 * (c.pow2 + 1.0).sqrt() * c.variance_root);
    let g2 = s * lam.powf(p.alpha - 1.0) / (14.0 * c.k1 * c.pow2 * c.mass * c.bracket);
    let g3 = over_sigma_omega(s, p.sigma_omega, 14.0 * c.dp_root(p));
    let g4 = s / (20.0 * c.step_length(p));
    let g5 = s / (28.0 * lam * c.ln8);
    let g6 = over_sigma_omega(s, p.sigma_omega, c.chi_root(p));
    StepSizeParts {
        ceiling: 1.0 / (4.0 * p.smoothness),
        gammas: [g1, g2, g3, g4, g5, g6],
    }
    .checked()
}

pub fn stepsize_full(p: &TheoryParams) -> Result<StepSizeParts> {
    if p.convex {
        stepsize_convex_full(p)
    } else {
        stepsize_nonconvex_full(p)
    }
}

/// `σ (K / ln(K/β))^{1/α}`, the largest clipping level covered by the reduced rule.
/// Infinite when `ln(K/β) <= 0`.
pub fn reduced_rule_lambda_limit(p: &TheoryParams) -> f64 {
    let k = p.iterations as f64;
    let l = (k / p.beta).ln();
    if l <= 0.0 {
        return f64::INFINITY;
    }
    p.sigma * (k / l).powf(1.0 / p.alpha)
}

fn reduce(p: &TheoryParams, mut parts: StepSizeParts) -> StepSizeParts {
    if p.lambda > reduced_rule_lambda_limit(p) {
        log::warn!(
            "lambda = {} exceeds sigma (K/ln(K/beta))^(1/alpha) = {}; the reduced step-size may be invalid",
            p.lambda,
            reduced_rule_lambda_limit(p)
        );
    }
    parts.gammas[3..].fill(f64::INFINITY);
    parts
}

/// `min{1/(8L), γ₁, γ₂, γ₃}`, returned with the dropped terms set to `+∞`.
pub fn stepsize_convex_reduced(p: &TheoryParams) -> Result<StepSizeParts> {
    Ok(reduce(p, stepsize_convex_full(p)?))
}

/// `min{1/(4L), γ₁, γ₂, γ₃}`, returned with the dropped terms set to `+∞`.
pub fn stepsize_nonconvex_reduced(p: &TheoryParams) -> Result<StepSizeParts> {
    Ok(reduce(p, stepsize_nonconvex_full(p)?))
}

pub fn stepsize_reduced(p: &TheoryParams) -> Result<StepSizeParts> {
    if p.convex {
        stepsize_convex_reduced(p)
    } else {
        stepsize_nonconvex_reduced(p)
    }
}
