//! Closed-form evaluator written against the formulas alone, sharing no code with the
//! library. Arguments are plain numbers so a test can feed it the same grid point it
//! feeds the library.

#![allow(dead_code)]

use std::f64::consts::SQRT_2;

pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        return 0.0;
    }
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// `(L, R or Δ, σ, α, λ, K, β, σ_ω, d)`
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub l: f64,
    pub r: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub k: u64,
    pub beta: f64,
    pub sigma_omega: f64,
    pub d: usize,
}

pub fn zeta(p: &Point, convex: bool) -> f64 {
    let two_a = if convex {
        2.0 * p.l * p.r
    } else {
        2.0 * (p.l * p.r).sqrt()
    };
    let z = two_a - 0.5 * p.lambda;
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// `[ceiling, γ1, ..., γ6]`
pub fn gammas(p: &Point, convex: bool) -> [f64; 7] {
    let n = p.k as f64 + 1.0;
    let a = p.alpha;
    let sa = p.sigma.powf(a);
    let z = zeta(p, convex);
    let za = z.powf(a);
    let c = 2f64.powf(2.0 * a - 1.0);
    let big = 1.0 + za / sa;
    let l8 = (8.0 * n / p.beta).ln();
    let l4 = (4.0 * n / p.beta).ln();
    let phi = (3.0 * l4).sqrt();
    let br = z / p.lambda + 0.5 + p.lambda.powf(a - 1.0) * z / (c * (sa + za)) + big.powf(-1.0 / a);
    let sw = p.sigma_omega;
    let d = p.d as f64;
    // numerators: R for convex, sqrt(Δ/L) for non-convex
    let s = if convex { p.r } else { (p.r / p.l).sqrt() };
    let root = (6.0 * n * l8 * big).sqrt();
    let g1_den = (c + 1.0).sqrt() * p.sigma.powf(a / 2.0) * p.lambda.powf(1.0 - a / 2.0) * root;
    let tail = (2.0 * (n / p.beta).ln()).sqrt();
    let g6_root = (7.0 * (n * d + 2.0 * (n * d * l4).sqrt() + 2.0 * l4)).sqrt();
    if convex {
        [
            1.0 / (8.0 * p.l),
            s / (42.0 * g1_den),
            s * p.lambda.powf(a - 1.0) / (28.0 * n * c * sa * big * br),
            if sw == 0.0 {
                f64::INFINITY
            } else {
                s / (56.0 * sw * (d * n).sqrt() * SQRT_2 * (1.0 + phi))
            },
            (2.0 - SQRT_2) * s / (p.lambda + sw * (d.sqrt() + tail)),
            s / (56.0 * p.lambda * l8),
            if sw == 0.0 {
                f64::INFINITY
            } else {
                s / (2.0 * sw * g6_root)
            },
        ]
    } else {
        [
            1.0 / (4.0 * p.l),
            s / (21.0 * g1_den),
            s * p.lambda.powf(a - 1.0) / (14.0 * n * c * (sa + za) * br),
            if sw == 0.0 {
                f64::INFINITY
            } else {
                s / (14.0 * sw * (d * n).sqrt() * SQRT_2 * (1.0 + phi))
            },
            s / (20.0 * (p.lambda + sw * (d.sqrt() + tail))),
            s / (28.0 * p.lambda * l8),
            if sw == 0.0 {
                f64::INFINITY
            } else {
                s / (sw * g6_root)
            },
        ]
    }
}

pub fn bound(p: &Point, convex: bool, gamma: f64) -> f64 {
    let gk = gamma * (p.k as f64 + 1.0);
    let l2 = p.lambda * p.lambda;
    if convex {
        4.0 * p.r * p.r / gk + 64.0 * p.l * p.r.powi(4) / (l2 * gk * gk)
    } else {
        8.0 * p.r / gk + 128.0 * p.r * p.r / (l2 * gk * gk)
    }
}

/// Clipped-estimator bias bound for a point at distance `xn` from the origin.
pub fn lemma_bias(alpha: f64, sigma: f64, xn: f64, lambda: f64) -> f64 {
    let e = (xn - lambda / 2.0).max(0.0);
    let c = 2f64.powf(2.0 * alpha - 1.0);
    let m = sigma.powf(alpha) + e.powf(alpha);
    c * sigma * m.powf(1.0 - 1.0 / alpha) * lambda.powf(1.0 - alpha)
        + xn.max(lambda / 2.0) * c * m * lambda.powf(-alpha)
        + e
}

pub fn lemma_variance(alpha: f64, sigma: f64, xn: f64, lambda: f64) -> f64 {
    let e = (xn - lambda / 2.0).max(0.0);
    let c = 9.0 / 4.0 * (2f64.powf(2.0 * alpha - 1.0) + 1.0);
    c * lambda.powf(2.0 - alpha) * (sigma.powf(alpha) + e.powf(alpha))
}

pub fn dp_log_product(d: usize, k: u64, delta: f64, beta: f64) -> f64 {
    let k = k as f64;
    d as f64 * (k / delta).ln() * (-delta.ln()) * (k / beta).ln()
}

/// Large-level branch with `A = LR` or `sqrt(LΔ)`.
pub fn dp_lambda_large(p: &Point, convex: bool, eps: f64, delta: f64) -> f64 {
    let a = if convex {
        p.l * p.r
    } else {
        (p.l * p.r).sqrt()
    };
    let dd = dp_log_product(p.d, p.k, delta, p.beta);
    (4.0 * a).max((eps * p.sigma.powf(p.alpha) / dd).powf(1.0 / p.alpha))
}

pub fn dp_lambda_small(p: &Point, convex: bool, eps: f64, delta: f64) -> f64 {
    let a = if convex {
        p.l * p.r
    } else {
        (p.l * p.r).sqrt()
    };
    let dd = dp_log_product(p.d, p.k, delta, p.beta);
    (4.0 * a / 3.0).min(2.0 * eps * a / (1.0 + dd.powf(1.0 / (2.0 * p.alpha + 2.0))))
}

pub fn sigma_omega_expectation(lambda: f64, eps: f64, delta: f64, k: u64, c_dp: f64) -> f64 {
    let k = k as f64;
    c_dp * lambda * (k * (k / delta).ln() * (1.0 / delta).ln()).sqrt() / eps
}

pub fn sigma_omega_finite_sum(lambda: f64, eps: f64, delta: f64, k: u64, q: f64, c_dp: f64) -> f64 {
    c_dp * q * lambda * (k as f64 * (1.0 / delta).ln()).sqrt() / eps
}
