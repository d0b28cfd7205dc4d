//! The DP-Clipped-SGD iteration
//!
//! ```text
//! ĝ_k = clip(∇f(x^k) + ξ_k, λ)
//! x^{k+1} = x^k - γ (ĝ_k + ω_k),   ω_k ~ N(0, σ_ω² I)
//! ```
//!
//! `K` updates produce `x¹, ..., x^K`; best-iterate statistics are minima over the
//! `K + 1` points `x⁰, ..., x^K`, computed from the exact `f` and `∇f`.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clipping::{self, ClipLevel};
use crate::error::{Error, Result};
use crate::numkit::{self, RngStream, Vector, PRIVACY_LANE};
use crate::oracles::{NoiseModel, ProblemSpec};
use crate::privacy::{self, PrivacyTarget};
use crate::schedule::{self, StepSizeParts, TheoryParams};

/// Iterates whose norm exceeds this are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recording {
    /// Best-iterate statistics only.
    #[default]
    None,
    /// Also `f(x^t)` and `‖∇f(x^t)‖` for every `t`.
    Scalars,
    /// Also per-step clipping diagnostics and every iterate.
    Full,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Arc<ProblemSpec>,
    pub noise: NoiseModel,
    pub lambda: ClipLevel,
    pub gamma: f64,
    pub iterations: u64,
    pub sigma_omega: f64,
    pub seed: u64,
    pub stream_id: u64,
    pub record: Recording,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::params(
                "gamma",
                format!("must be positive and finite, got {}", self.gamma),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::params("iterations", "must be >= 1"));
        }
        if !(self.sigma_omega >= 0.0 && self.sigma_omega.is_finite()) {
            return Err(Error::params(
                "sigma_omega",
                format!("must be nonnegative and finite, got {}", self.sigma_omega),
            ));
        }
        if self.noise.dim() != self.problem.dim() {
            return Err(Error::InvalidDimension {
                expected: self.problem.dim(),
                got: self.noise.dim(),
            });
        }
        Ok(())
    }
}

/// Per-step traces. Index `t` refers to `x^t` for the value and gradient traces and
/// to update `t` for the clipping traces.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub theta_norms: Vec<f64>,
    pub clipped_norms: Vec<f64>,
    pub clip_active: Vec<bool>,
    pub iterates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    /// `min_t f(x^t) - f*`.
    pub best_suboptimality: f64,
    /// `min_t ‖∇f(x^t)‖²`.
    pub best_grad_norm_sq: f64,
    /// `max_t ‖x^t - x*‖` when the minimiser is known.
    pub max_dist_to_opt: Option<f64>,
    pub trajectory: Option<Trajectory>,
    pub final_x: Vector,
    pub wall_time: f64,
    pub oracle_draws: u64,
    pub privacy_draws: u64,
    pub gamma: f64,
    pub lambda: ClipLevel,
    pub sigma_omega: f64,
    pub iterations: u64,
    pub seed: u64,
    pub stream_id: u64,
}

struct Tracker<'a> {
    problem: &'a ProblemSpec,
    best_subopt: f64,
    best_gradsq: f64,
    max_dist: Option<f64>,
}

impl Tracker<'_> {
    /// Updates the statistics at `x` and leaves `∇f(x)` in `grad`. Returns `f(x)`.
    fn observe(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let f = self.problem.value_raw(x);
        self.problem.gradient_raw(x, grad);
        self.best_subopt = self.best_subopt.min(f - self.problem.f_star());
        self.best_gradsq = self.best_gradsq.min(numkit::norm_sq(grad));
        if let (Some(m), Some(xs)) = (self.max_dist.as_mut(), self.problem.x_star()) {
            *m = m.max(numkit::distance(x, xs.as_slice()));
        }
        f
    }
}

/// Runs `config.iterations` updates from `x0`.
///
/// Stochastic-gradient noise is drawn from `RngStream::new(seed, stream_id)`, privacy
/// noise from the privacy lane of the same `(seed, stream_id)`.
pub fn run(config: &RunConfig, x0: &Vector) -> Result<RunRecord> {
    config.validate()?;
    let problem = config.problem.as_ref();
    problem.check(x0)?;
    let start = Instant::now();
    let d = problem.dim();
    let mut oracle_rng = RngStream::new(config.seed, config.stream_id);
    let mut privacy_rng = RngStream::with_lane(config.seed, config.stream_id, PRIVACY_LANE);

    let mut x = x0.as_slice().to_vec();
    let mut grad = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let mut theta = vec![0.0; d];

    let mut tracker = Tracker {
        problem,
        best_subopt: f64::INFINITY,
        best_gradsq: f64::INFINITY,
        max_dist: problem.x_star().map(|_| 0.0),
    };
    let mut traj = (config.record != Recording::None).then(Trajectory::default);
    let full = config.record == Recording::Full;

    let f0 = tracker.observe(&x, &mut grad);
    if let Some(t) = traj.as_mut() {
        t.values.push(f0);
        t.grad_norms.push(numkit::norm(&grad));
        if full {
            t.iterates.push(x.clone());
        }
    }

    let mut privacy_draws = 0;
    for k in 0..config.iterations {
        config.noise.sample_into(&mut oracle_rng, &mut scratch);
        for ((gi, di), si) in g.iter_mut().zip(&grad).zip(&scratch) {
            *gi = di + si;
        }
        let active = clipping::clip_in_place(&mut g, config.lambda);
        if full {
            let t = traj.as_mut().unwrap();
            clipping::theta_raw(&g, &grad, config.lambda, &mut theta);
            t.theta_norms.push(numkit::norm(&theta));
            t.clipped_norms.push(numkit::norm(&g));
            t.clip_active.push(active);
        }
        if config.sigma_omega > 0.0 {
            privacy_rng.fill_gaussian(config.sigma_omega, &mut scratch);
            for (gi, wi) in g.iter_mut().zip(&scratch) {
                *gi += wi;
            }
            privacy_draws += 1;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= config.gamma * gi;
        }
        let step = k + 1;
        let n = numkit::norm(&x);
        if !(n <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { step });
        }
        let f = tracker.observe(&x, &mut grad);
        if !f.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step });
        }
        if let Some(t) = traj.as_mut() {
            t.values.push(f);
            t.grad_norms.push(numkit::norm(&grad));
            if full {
                t.iterates.push(x.clone());
            }
        }
    }

    Ok(RunRecord {
        best_suboptimality: tracker.best_subopt,
        best_grad_norm_sq: tracker.best_gradsq,
        max_dist_to_opt: tracker.max_dist,
        trajectory: traj,
        final_x: Vector::from_raw(x),
        wall_time: start.elapsed().as_secs_f64(),
        oracle_draws: config.iterations,
        privacy_draws,
        gamma: config.gamma,
        lambda: config.lambda,
        sigma_omega: config.sigma_omega,
        iterations: config.iterations,
        seed: config.seed,
        stream_id: config.stream_id,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryRun {
    pub record: RunRecord,
    pub gamma: f64,
    pub sigma_omega: f64,
    pub parts: StepSizeParts,
    pub bound: f64,
}

/// Checks that `params` describe `problem` started at `x0`, and returns `params`
/// with `σ_ω` taken from `privacy` when present.
pub fn resolve_theory(
    params: &TheoryParams,
    problem: &ProblemSpec,
    x0: &Vector,
    privacy: Option<&PrivacyTarget>,
) -> Result<TheoryParams> {
    params.validate()?;
    if params.convex != problem.is_convex() {
        return Err(Error::Precondition(format!(
            "theory convexity ({}) does not match the problem ({})",
            params.convex,
            problem.is_convex()
        )));
    }
    if params.dim != problem.dim() {
        return Err(Error::InvalidDimension {
            expected: problem.dim(),
            got: params.dim,
        });
    }
    if params.smoothness < problem.smoothness() * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "smoothness {} is below the problem's constant {}",
            params.smoothness,
            problem.smoothness()
        )));
    }
    let initial = problem.initial_radius(x0)?;
    if params.radius < initial * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "radius {} is below the initial {} {}",
            params.radius,
            if params.convex { "distance" } else { "gap" },
            initial
        )));
    }
    let mut p = *params;
    if let Some(target) = privacy {
        let lambda = ClipLevel::new(p.lambda)?;
        p.sigma_omega = privacy::calibrate_sigma_omega(target, lambda)?;
    }
    Ok(p)
}

/// Runs with `γ` from the full step-size rule and returns the matching bound.
pub fn run_with_theory(
    params: &TheoryParams,
    problem: Arc<ProblemSpec>,
    noise: NoiseModel,
    x0: &Vector,
    seed: u64,
    privacy: Option<&PrivacyTarget>,
) -> Result<TheoryRun> {
    let p = resolve_theory(params, &problem, x0, privacy)?;
    let parts = schedule::stepsize_full(&p)?;
    let gamma = parts.gamma();
    let config = RunConfig {
        problem,
        noise,
        lambda: ClipLevel::new(p.lambda)?,
        gamma,
        iterations: p.iterations,
        sigma_omega: p.sigma_omega,
        seed,
        stream_id: 0,
        record: Recording::None,
    };
    let record = run(&config, x0)?;
    Ok(TheoryRun {
        record,
        gamma,
        sigma_omega: p.sigma_omega,
        parts,
        bound: schedule::theory_bound(&p, gamma)?,
    })
}
