//! Test problems and heavy-tailed stochastic gradient oracles.
//!
//! Each [`NoiseModel`] carries a certified bound `sigma_alpha >= E‖ξ‖^α`. All
//! families are radially symmetric, so the certificate is an exact closed form of
//! the radial `alpha`-moment rather than an estimate.

use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{self, RngStream, Vector};

/// The analytic objective behind a [`ProblemSpec`].
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// `½ Σ a_i (x_i - x*_i)^2`.
    Quadratic {
        eigenvalues: Vec<f64>,
        center: Vec<f64>,
    },
    /// `scale · Σ x_i^2 / (1 + x_i^2)`.
    NonconvexSmooth { scale: f64 },
    /// Ridge-regularised logistic loss `1/n Σ ln(1 + exp(-y_i <a_i, w>)) + reg/2 ‖w‖²`.
    Logistic {
        /// Row-major `n × d` feature matrix.
        features: Vec<f64>,
        labels: Vec<f64>,
        reg: f64,
    },
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Quadratic { eigenvalues, .. } => f
                .debug_struct("Quadratic")
                .field("eigenvalues", eigenvalues)
                .finish_non_exhaustive(),
            Objective::NonconvexSmooth { scale } => f
                .debug_struct("NonconvexSmooth")
                .field("scale", scale)
                .finish(),
            Objective::Logistic { labels, reg, .. } => f
                .debug_struct("Logistic")
                .field("n", &labels.len())
                .field("reg", reg)
                .finish_non_exhaustive(),
        }
    }
}

/// A smooth objective with known smoothness constant and optimum data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    dim: usize,
    objective: Objective,
    smoothness: f64,
    x_star: Option<Vector>,
    f_star: f64,
    convex: bool,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    /// Lipschitz constant `L` of the gradient.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn x_star(&self) -> Option<&Vector> {
        self.x_star.as_ref()
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    /// Objective value on a raw slice of length `dim`.
    pub fn value_raw(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.objective {
            Objective::Quadratic {
                eigenvalues,
                center,
            } => {
                0.5 * eigenvalues
                    .iter()
                    .zip(center)
                    .zip(x)
                    .map(|((a, c), xi)| a * (xi - c) * (xi - c))
                    .sum::<f64>()
            }
            Objective::NonconvexSmooth { scale } => {
                scale * x.iter().map(|xi| xi * xi / (1.0 + xi * xi)).sum::<f64>()
            }
            Objective::Logistic {
                features,
                labels,
                reg,
            } => {
                let n = labels.len();
                let loss: f64 = features
                    .chunks_exact(self.dim)
                    .zip(labels)
                    .map(|(row, y)| softplus(-y * numkit::dot(row, x)))
                    .sum();
                loss / n as f64 + 0.5 * reg * numkit::norm_sq(x)
            }
        }
    }

    /// Writes `∇f(x)` into `out`.
    pub fn gradient_raw(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        match &self.objective {
            Objective::Quadratic {
                eigenvalues,
                center,
            } => {
                for (((o, a), c), xi) in out.iter_mut().zip(eigenvalues).zip(center).zip(x) {
                    *o = a * (xi - c);
                }
            }
            Objective::NonconvexSmooth { scale } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    let q = 1.0 + xi * xi;
                    *o = scale * 2.0 * xi / (q * q);
                }
            }
            Objective::Logistic {
                features,
                labels,
                reg,
            } => {
                let n = labels.len() as f64;
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = reg * xi;
                }
                for (row, y) in features.chunks_exact(self.dim).zip(labels) {
                    // d/dz softplus(-y z) = -y * sigmoid(-y z)
                    let w = -y * sigmoid(-y * numkit::dot(row, x)) / n;
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += w * a;
                    }
                }
            }
        }
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_raw(x.as_slice()))
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        self.check(x)?;
        let mut out = vec![0.0; self.dim];
        self.gradient_raw(x.as_slice(), &mut out);
        Vector::new(out)
    }

    /// `R = ‖x0 - x*‖` for convex problems, `Δ = f(x0) - f*` otherwise.
    pub fn initial_radius(&self, x0: &Vector) -> Result<f64> {
        self.check(x0)?;
        if self.convex {
            let x_star = self.x_star.as_ref().ok_or_else(|| {
                Error::InvalidProblem("convex problem without a known minimiser".into())
            })?;
            Ok(numkit::distance(x0.as_slice(), x_star.as_slice()))
        } else {
            Ok(self.value_raw(x0.as_slice()) - self.f_star)
        }
    }

    pub(crate) fn check(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::InvalidDimension {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Convex quadratic `½ Σ a_i (x_i - x*_i)^2` with `L = max a_i`, `f* = 0`.
pub fn make_quadratic(dim: usize, eigenvalues: &[f64], x_star: &Vector) -> Result<ProblemSpec> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            expected: 1,
            got: 0,
        });
    }
    if eigenvalues.len() != dim {
        return Err(Error::InvalidDimension {
            expected: dim,
            got: eigenvalues.len(),
        });
    }
    if x_star.dim() != dim {
        return Err(Error::InvalidDimension {
            expected: dim,
            got: x_star.dim(),
        });
    }
    if let Some(a) = eigenvalues.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidProblem(format!(
            "eigenvalues must be positive and finite, got {a}"
        )));
    }
    let smoothness = eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    Ok(ProblemSpec {
        dim,
        objective: Objective::Quadratic {
            eigenvalues: eigenvalues.to_vec(),
            center: x_star.as_slice().to_vec(),
        },
        smoothness,
        x_star: Some(x_star.clone()),
        f_star: 0.0,
        convex: true,
    })
}

/// Non-convex `scale · Σ x_i^2/(1+x_i^2)`; `|f''| <= 2·scale` so `L = 2·scale`.
pub fn make_nonconvex_smooth(dim: usize, scale: f64) -> Result<ProblemSpec> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            expected: 1,
            got: 0,
        });
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "scale must be positive and finite, got {scale}"
        )));
    }
    Ok(ProblemSpec {
        dim,
        objective: Objective::NonconvexSmooth { scale },
        smoothness: 2.0 * scale,
        x_star: Some(Vector::from_raw(vec![0.0; dim])),
        f_star: 0.0,
        convex: false,
    })
}

/// Synthetic ridge-regularised logistic regression for the finite-sum path.
///
/// Features are i.i.d. `N(0, 1/d)`; labels follow a logistic model around a planted
/// Gaussian weight vector. `L` uses the Frobenius bound `‖A‖_F²/(4n) + reg`. The
/// minimiser is found by gradient descent to `‖∇f‖ <= 1e-12`.
pub fn make_logistic(n: usize, dim: usize, reg: f64, seed: u64) -> Result<ProblemSpec> {
    if dim == 0 || dim > 50 {
        return Err(Error::InvalidProblem(format!(
            "logistic dimension must be in 1..=50, got {dim}"
        )));
    }
    if n == 0 || n > 10_000 {
        return Err(Error::InvalidProblem(format!(
            "logistic sample count must be in 1..=10000, got {n}"
        )));
    }
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "ridge parameter must be positive, got {reg}"
        )));
    }
    let mut rng = RngStream::new(seed, u64::MAX);
    let planted: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let feature_sd = (1.0 / dim as f64).sqrt();
    let mut features = vec![0.0; n * dim];
    let mut labels = Vec::with_capacity(n);
    for row in features.chunks_exact_mut(dim) {
        rng.fill_gaussian(feature_sd, row);
        let p = sigmoid(numkit::dot(row, &planted));
        labels.push(if rng.uniform_open0() <= p { 1.0 } else { -1.0 });
    }
    let smoothness = numkit::norm_sq(&features) / (4.0 * n as f64) + reg;

    let mut problem = ProblemSpec {
        dim,
        objective: Objective::Logistic {
            features,
            labels,
            reg,
        },
        smoothness,
        x_star: None,
        f_star: 0.0,
        convex: true,
    };

    // Strongly convex with modulus `reg`: GD with step 1/L converges linearly.
    let mut w = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let step = 1.0 / smoothness;
    for _ in 0..1_000_000 {
        problem.gradient_raw(&w, &mut g);
        if numkit::norm(&g) <= 1e-12 {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= step * gi;
        }
    }
    problem.f_star = problem.value_raw(&w);
    problem.x_star = Some(Vector::new(w)?);
    Ok(problem)
}

/// Radial heavy-tailed noise families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Isotropic `N(0, std^2 I_d)`.
    Gaussian { std: f64 },
    /// Radius `scale · U^(-1/tail_p)` with uniform direction.
    SymmetricPareto { tail_p: f64, scale: f64 },
    /// Multivariate Student-t: `scale · Z / sqrt(W/dof)`, `Z ~ N(0, I_d)`, `W ~ χ²_dof`.
    StudentT { dof: f64, scale: f64 },
    /// `±magnitude · e_1` with probability ½ each.
    TwoPoint { magnitude: f64 },
}

/// Zero-mean noise with certified `E‖ξ‖^α <= sigma_alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    kind: NoiseKind,
    dim: usize,
    alpha: f64,
    sigma_alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::InvalidNoise(format!(
            "alpha must lie in (1, 2], got {alpha}"
        )));
    }
    Ok(())
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            expected: 1,
            got: 0,
        });
    }
    Ok(())
}

/// `E‖Z‖^α` for `Z ~ N(0, I_d)`: `2^(α/2) Γ((d+α)/2) / Γ(d/2)`.
fn gaussian_norm_moment(alpha: f64, dim: usize) -> f64 {
    let d = dim as f64;
    (0.5 * alpha * std::f64::consts::LN_2 + libm::lgamma(0.5 * (d + alpha)) - libm::lgamma(0.5 * d))
        .exp()
}

impl NoiseModel {
    /// Isotropic Gaussian; `std = 0` gives the degenerate zero-noise oracle.
    pub fn gaussian(alpha: f64, std: f64, dim: usize) -> Result<Self> {
        check_alpha(alpha)?;
        check_dim(dim)?;
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::InvalidNoise(format!(
                "std must be finite and >= 0, got {std}"
            )));
        }
        Ok(NoiseModel {
            kind: NoiseKind::Gaussian { std },
            dim,
            alpha,
            sigma_alpha: std.powf(alpha) * gaussian_norm_moment(alpha, dim),
        })
    }

    /// Zero noise in dimension `dim`, certified with `alpha = 2`.
    pub fn none(dim: usize) -> Result<Self> {
        NoiseModel::gaussian(2.0, 0.0, dim)
    }

    /// Multivariate Student-t with `dof > alpha`.
    ///
    /// `E‖ξ‖^α = scale^α · E‖Z‖^α · dof^(α/2) · 2^(-α/2) Γ((dof-α)/2) / Γ(dof/2)`.
    pub fn student_t(alpha: f64, dof: f64, scale: f64, dim: usize) -> Result<Self> {
        check_alpha(alpha)?;
        check_dim(dim)?;
        if !(dof > alpha && dof.is_finite()) {
            return Err(Error::MomentUnbounded { alpha, tail_p: dof });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidNoise(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let inv_chi = (0.5 * alpha * (dof.ln() - std::f64::consts::LN_2)
            + libm::lgamma(0.5 * (dof - alpha))
            - libm::lgamma(0.5 * dof))
        .exp();
        Ok(NoiseModel {
            kind: NoiseKind::StudentT { dof, scale },
            dim,
            alpha,
            sigma_alpha: scale.powf(alpha) * gaussian_norm_moment(alpha, dim) * inv_chi,
        })
    }

    /// Symmetric two-point law `±magnitude·e_1`; `E‖ξ‖^α = magnitude^α` exactly.
    pub fn two_point(alpha: f64, magnitude: f64, dim: usize) -> Result<Self> {
        check_alpha(alpha)?;
        check_dim(dim)?;
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::InvalidNoise(format!(
                "magnitude must be finite and >= 0, got {magnitude}"
            )));
        }
        Ok(NoiseModel {
            kind: NoiseKind::TwoPoint { magnitude },
            dim,
            alpha,
            sigma_alpha: magnitude.powf(alpha),
        })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The certified bound on `E‖ξ‖^α`.
    pub fn sigma_alpha(&self) -> f64 {
        self.sigma_alpha
    }

    /// `σ = sigma_alpha^(1/α)`.
    pub fn sigma(&self) -> f64 {
        self.sigma_alpha.powf(1.0 / self.alpha)
    }

    /// Overwrites `out` with one noise draw.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match self.kind {
            NoiseKind::Gaussian { std } => rng.fill_gaussian(std, out),
            NoiseKind::SymmetricPareto { tail_p, scale } => {
                uniform_direction(rng, out);
                let r = scale * rng.uniform_open0().powf(-1.0 / tail_p);
                out.iter_mut().for_each(|o| *o *= r);
            }
            NoiseKind::StudentT { dof, scale } => {
                rng.fill_gaussian(1.0, out);
                let w: f64 = rng.sample(rand_distr::ChiSquared::new(dof).expect("dof > 1"));
                let s = scale * (dof / w).sqrt();
                out.iter_mut().for_each(|o| *o *= s);
            }
            NoiseKind::TwoPoint { magnitude } => {
                out.fill(0.0);
                let sign = if rng.uniform_open0() <= 0.5 {
                    1.0
                } else {
                    -1.0
                };
                out[0] = sign * magnitude;
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vector {
        let mut v = vec![0.0; self.dim];
        self.sample_into(rng, &mut v);
        Vector::from_raw(v)
    }
}

/// Uniform point on the unit sphere via normalised Gaussians.
fn uniform_direction(rng: &mut RngStream, out: &mut [f64]) {
    loop {
        rng.fill_gaussian(1.0, out);
        let n = numkit::norm(out);
        if n > 0.0 {
            out.iter_mut().for_each(|o| *o /= n);
            return;
        }
    }
}

/// Radially symmetric Pareto noise with `sigma_alpha = scale^α · p/(p - α)`.
pub fn make_pareto_noise(alpha: f64, tail_p: f64, scale: f64, dim: usize) -> Result<NoiseModel> {
    check_alpha(alpha)?;
    check_dim(dim)?;
    if !(tail_p > alpha && tail_p.is_finite()) {
        return Err(Error::MomentUnbounded { alpha, tail_p });
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidNoise(format!(
            "scale must be positive, got {scale}"
        )));
    }
    Ok(NoiseModel {
        kind: NoiseKind::SymmetricPareto { tail_p, scale },
        dim,
        alpha,
        sigma_alpha: scale.powf(alpha) * tail_p / (tail_p - alpha),
    })
}

/// Pareto noise whose scale is chosen so that the certificate equals `sigma_alpha`.
pub fn make_pareto_noise_with_moment(
    alpha: f64,
    tail_p: f64,
    sigma_alpha: f64,
    dim: usize,
) -> Result<NoiseModel> {
    if !(sigma_alpha > 0.0 && sigma_alpha.is_finite()) {
        return Err(Error::InvalidNoise(format!(
            "sigma_alpha must be positive, got {sigma_alpha}"
        )));
    }
    if !(tail_p > alpha) {
        return Err(Error::MomentUnbounded { alpha, tail_p });
    }
    let scale = (sigma_alpha * (tail_p - alpha) / tail_p).powf(1.0 / alpha);
    let mut model = make_pareto_noise(alpha, tail_p, scale, dim)?;
    model.sigma_alpha = sigma_alpha;
    Ok(model)
}

/// `∇f(x) + ξ` with one fresh noise draw per call.
#[derive(Debug, Clone)]
pub struct StochasticOracle<'a> {
    pub problem: &'a ProblemSpec,
    pub noise: &'a NoiseModel,
}

impl<'a> StochasticOracle<'a> {
    pub fn new(problem: &'a ProblemSpec, noise: &'a NoiseModel) -> Result<Self> {
        if problem.dim() != noise.dim() {
            return Err(Error::InvalidDimension {
                expected: problem.dim(),
                got: noise.dim(),
            });
        }
        Ok(StochasticOracle { problem, noise })
    }

    pub fn sample_gradient(&self, x: &Vector, rng: &mut RngStream) -> Result<Vector> {
        self.problem.check(x)?;
        let d = self.problem.dim();
        let mut out = vec![0.0; d];
        let mut noise = vec![0.0; d];
        self.sample_raw(x.as_slice(), rng, &mut out, &mut noise);
        Vector::new(out)
    }

    /// Allocation-free variant: `out <- ∇f(x) + ξ`, with `scratch` holding `ξ`.
    #[inline]
    pub fn sample_raw(&self, x: &[f64], rng: &mut RngStream, out: &mut [f64], scratch: &mut [f64]) {
        self.problem.gradient_raw(x, out);
        self.noise.sample_into(rng, scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o += s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn quadratic_examples() {
        let p = make_quadratic(1, &[2.0], &v(&[0.0])).unwrap();
        assert_eq!(p.value(&v(&[3.0])).unwrap(), 9.0);
        assert_eq!(p.gradient(&v(&[3.0])).unwrap().as_slice(), &[6.0]);
        assert_eq!(p.smoothness(), 2.0);

        let p = make_quadratic(2, &[1.0, 4.0], &v(&[1.0, 1.0])).unwrap();
        assert_eq!(p.value(&v(&[1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(p.gradient(&v(&[1.0, 1.0])).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(p.smoothness(), 4.0);
    }

    #[test]
    fn quadratic_rejects_nonpositive_eigenvalue() {
        assert!(matches!(
            make_quadratic(2, &[1.0, 0.0], &v(&[0.0, 0.0])),
            Err(Error::InvalidProblem(_))
        ));
        assert!(matches!(
            make_quadratic(2, &[1.0], &v(&[0.0, 0.0])),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn nonconvex_examples() {
        let p = make_nonconvex_smooth(1, 1.0).unwrap();
        assert_eq!(p.value(&v(&[0.0])).unwrap(), 0.0);
        assert_eq!(p.gradient(&v(&[0.0])).unwrap().as_slice(), &[0.0]);
        assert_eq!(p.value(&v(&[1.0])).unwrap(), 0.5);
        assert_eq!(p.gradient(&v(&[1.0])).unwrap().as_slice(), &[0.5]);
        assert_eq!(p.smoothness(), 2.0);
        assert!(!p.is_convex());
        assert!(matches!(
            make_nonconvex_smooth(1, 0.0),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn nonconvex_curvature_bounded_on_grid() {
        // |f''| = |2 s (1 - 3x^2) / (1 + x^2)^3| via second differences on a dense grid.
        let p = make_nonconvex_smooth(1, 1.0).unwrap();
        let h = 1e-4;
        let mut sup: f64 = 0.0;
        let mut x = -20.0;
        while x <= 20.0 {
            let f = |t: f64| p.value_raw(&[t]);
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            sup = sup.max(d2.abs());
            x += 1e-3;
        }
        assert!(sup <= 2.0 + 1e-4, "sup |f''| = {sup}");
        assert!(sup >= 1.99);
    }

    #[test]
    fn pareto_certificates() {
        let n = make_pareto_noise(1.5, 2.5, 1.0, 3).unwrap();
        assert!((n.sigma_alpha() - 2.5).abs() < 1e-12);
        let n = make_pareto_noise(2.0, 3.0, 1.0, 3).unwrap();
        assert!((n.sigma_alpha() - 3.0).abs() < 1e-12);
        assert!(matches!(
            make_pareto_noise(1.5, 1.5, 1.0, 3),
            Err(Error::MomentUnbounded { .. })
        ));
        let n = make_pareto_noise_with_moment(1.5, 2.5, 1.0, 10).unwrap();
        assert!((n.sigma_alpha() - 1.0).abs() < 1e-12);
        assert!((n.sigma() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_moments_match_quadrature() {
        // Values from tests/oracle/formulas.py (mpmath quadrature).
        let g = NoiseModel::gaussian(1.5, 1.0, 4).unwrap();
        assert!((g.sigma_alpha() - 2.7049273447743634).abs() < 1e-12);
        let t = NoiseModel::student_t(1.5, 3.0, 1.0, 4).unwrap();
        assert!((t.sigma_alpha() - 5.0694740395222917).abs() < 1e-11);
        let t = NoiseModel::student_t(2.0, 5.0, 1.0, 1).unwrap();
        assert!((t.sigma_alpha() - 5.0 / 3.0).abs() < 1e-12);
        assert!(NoiseModel::student_t(1.5, 1.5, 1.0, 1).is_err());
    }

    #[test]
    fn zero_noise_oracle_is_exact() {
        let p = make_quadratic(1, &[2.0], &v(&[-1.0])).unwrap();
        let noise = NoiseModel::none(1).unwrap();
        let oracle = StochasticOracle::new(&p, &noise).unwrap();
        let mut rng = RngStream::new(1, 1);
        let g = oracle.sample_gradient(&v(&[1.0]), &mut rng).unwrap();
        assert_eq!(g.as_slice(), &[4.0]);
        assert!(oracle.sample_gradient(&v(&[1.0, 2.0]), &mut rng).is_err());
    }

    #[test]
    fn pareto_mean_is_zero() {
        let noise = make_pareto_noise(1.5, 2.5, 1.0, 2).unwrap();
        let mut rng = RngStream::new(5, 0);
        let n = 100_000;
        let mut sum = [0.0; 2];
        let mut abs_sum = 0.0;
        for _ in 0..n {
            let s = noise.sample(&mut rng);
            sum[0] += s.as_slice()[0];
            sum[1] += s.as_slice()[1];
            abs_sum += s.norm();
        }
        // Infinite variance: use a generous band scaled by E‖ξ‖ (= p/(p-1) = 5/3).
        let mean_norm = abs_sum / n as f64;
        for s in sum {
            assert!((s / n as f64).abs() < 5.0 * mean_norm / (n as f64).sqrt() * 10.0);
        }
    }

    #[test]
    fn logistic_minimiser_is_stationary() {
        let p = make_logistic(200, 5, 0.1, 3).unwrap();
        let x_star = p.x_star().unwrap();
        assert!(p.gradient(x_star).unwrap().norm() <= 1e-10);
        assert!(p.is_convex());
        // f* is a minimum along random directions.
        let mut rng = RngStream::new(0, 0);
        for _ in 0..20 {
            let dir = rng.gaussian_vector(5, 0.1).unwrap();
            let y = x_star.add(&dir).unwrap();
            assert!(p.value(&y).unwrap() >= p.f_star());
        }
    }
}
