//! Multi-trial experiments: `T` independent runs, empirical `(1-β)`-quantiles of the
//! best-iterate statistic, comparison with the high-probability bound, sweeps over
//! `K` and `λ`, and persistence.

mod persist;
mod quantile;
mod rate;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clipping::ClipLevel;
use crate::error::{Error, Result};
use crate::numkit::Vector;
use crate::optimizer::{self, Recording, RunConfig};
use crate::oracles::{NoiseModel, ProblemSpec};
use crate::privacy::{self, PrivacyTarget};
use crate::schedule::{self, StepSizeParts, TheoryParams};

pub use persist::{load_records, write_json, write_records, OutputFormat, CSV_COLUMNS};
pub use quantile::quantile;
pub use rate::{check_rate_grid, fit_points, fit_rate, rate_fit, RateFit};

pub const DEFAULT_TRIALS: usize = 200;

/// How the step-size of every trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaRule {
    Fixed(f64),
    /// `min{ceiling, γ₁, ..., γ₆}`
    TheoryFull,
    /// `min{ceiling, γ₁, γ₂, γ₃}`
    TheoryReduced,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: Arc<ProblemSpec>,
    pub noise: NoiseModel,
    pub x0: Vector,
    pub lambda: ClipLevel,
    pub iterations: u64,
    pub gamma: GammaRule,
    /// Privacy noise used when no target is attached.
    pub sigma_omega: f64,
    pub seed: u64,
    /// Problem constants for the step-size rules and the bound. Its `lambda`,
    /// `iterations` and `sigma_omega` are overwritten per resolved point.
    pub theory: TheoryParams,
    pub privacy: Option<PrivacyTarget>,
    pub trials: usize,
    pub k_grid: Option<Vec<u64>>,
    pub lambda_grid: Option<Vec<f64>>,
    /// Worker threads; `None` uses every logical core.
    pub workers: Option<usize>,
}

/// A configuration pinned to one `(K, λ)`.
#[derive(Debug, Clone)]
pub struct ResolvedPoint {
    pub run: RunConfig,
    pub x0: Vector,
    pub theory: TheoryParams,
    pub parts: Option<StepSizeParts>,
}

fn strictly_increasing<T: PartialOrd + Copy>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::params("trials", "must be >= 1"));
        }
        if let Some(g) = &self.k_grid {
            if g.is_empty() || g[0] == 0 || !strictly_increasing(g) {
                return Err(Error::params(
                    "k_grid",
                    "must be a nonempty strictly increasing list of positive integers",
                ));
            }
        }
        if let Some(g) = &self.lambda_grid {
            if g.is_empty()
                || !(g[0] > 0.0)
                || !strictly_increasing(g)
                || g.iter().any(|l| !l.is_finite())
            {
                return Err(Error::params(
                    "lambda_grid",
                    "must be a nonempty strictly increasing list of positive reals",
                ));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::params("workers", "must be >= 1"));
        }
        if let GammaRule::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::params("gamma", format!("must be positive, got {g}")));
            }
        }
        if self.privacy.is_some() && self.lambda.is_unclipped() {
            return Err(Error::InvalidTarget(
                "privacy requires a finite clipping level".into(),
            ));
        }
        Ok(())
    }

    /// Resolves `σ_ω` and `γ` at the base `(K, λ)`.
    pub fn resolve(&self) -> Result<ResolvedPoint> {
        self.resolve_at(self.iterations, self.lambda)
    }

    pub fn resolve_at(&self, iterations: u64, lambda: ClipLevel) -> Result<ResolvedPoint> {
        self.validate()?;
        let sigma_omega = match &self.privacy {
            Some(t) => privacy::calibrate_sigma_omega(&t.with_iterations(iterations)?, lambda)?,
            None => self.sigma_omega,
        };
        let mut theory = TheoryParams {
            iterations,
            lambda: lambda.value(),
            sigma_omega,
            ..self.theory
        };
        let (gamma, parts) = match self.gamma {
            GammaRule::Fixed(g) => (g, None),
            rule => {
                if lambda.is_unclipped() {
                    return Err(Error::params(
                        "gamma",
                        "theory step-sizes need a finite clipping level",
                    ));
                }
                theory = optimizer::resolve_theory(&theory, &self.problem, &self.x0, None)?;
                let parts = if rule == GammaRule::TheoryFull {
                    schedule::stepsize_full(&theory)?
                } else {
                    schedule::stepsize_reduced(&theory)?
                };
                (parts.gamma(), Some(parts))
            }
        };
        Ok(ResolvedPoint {
            run: RunConfig {
                problem: self.problem.clone(),
                noise: self.noise.clone(),
                lambda,
                gamma,
                iterations,
                sigma_omega,
                seed: self.seed,
                stream_id: 0,
                record: Recording::None,
            },
            x0: self.x0.clone(),
            theory,
            parts,
        })
    }
}

/// One trial, flattened for persistence. `None` fields are empty in CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    #[serde(rename = "K")]
    pub iterations: u64,
    /// `None` when unclipped.
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub sigma_omega: f64,
    pub best_subopt: Option<f64>,
    pub best_gradsq: Option<f64>,
    pub max_dist: Option<f64>,
    pub diverged: bool,
    pub wall_time: f64,
}

/// Runs `T` trials of `point`, trial `i` on stream `i`, on at most `workers` threads.
///
/// Diverged trials are kept as records with `diverged = true`; more than half
/// diverging fails the experiment.
pub fn run_point(
    point: &ResolvedPoint,
    trials: usize,
    workers: Option<usize>,
) -> Result<Vec<TrialRecord>> {
    let pool = worker_pool(workers)?;
    let records: Vec<Result<TrialRecord>> = pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|i| trial(point, i))
            .collect()
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let failed = records.iter().filter(|r| r.diverged).count();
    if 2 * failed > trials {
        return Err(Error::ExperimentFailed {
            failed,
            total: trials,
        });
    }
    Ok(records)
}

/// A pool of `workers` threads, or one per logical core.
pub(crate) fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::params("workers", "must be >= 1"));
        }
        builder = builder.num_threads(w);
    }
    builder
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))
}

fn trial(point: &ResolvedPoint, i: u64) -> Result<TrialRecord> {
    let cfg = RunConfig {
        stream_id: i,
        ..point.run.clone()
    };
    let lambda = Option::<f64>::from(cfg.lambda);
    let base = TrialRecord {
        trial: i,
        iterations: cfg.iterations,
        lambda,
        gamma: cfg.gamma,
        sigma_omega: cfg.sigma_omega,
        best_subopt: None,
        best_gradsq: None,
        max_dist: None,
        diverged: false,
        wall_time: 0.0,
    };
    match optimizer::run(&cfg, &point.x0) {
        Ok(r) => Ok(TrialRecord {
            best_subopt: Some(r.best_suboptimality),
            best_gradsq: Some(r.best_grad_norm_sq),
            max_dist: r.max_dist_to_opt,
            wall_time: r.wall_time,
            ..base
        }),
        Err(Error::Diverged { step }) => {
            log::debug!("trial {i} diverged at step {step}");
            Ok(TrialRecord {
                diverged: true,
                ..base
            })
        }
        Err(e) => Err(e),
    }
}

/// Runs the base point of `config`.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let point = config.resolve()?;
    run_point(&point, config.trials, config.workers)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileSummary {
    pub statistic: String,
    /// Sorted; diverged trials enter as `+∞`.
    pub values: Vec<f64>,
    pub level: f64,
    pub quantile_value: f64,
    pub bound: f64,
    pub pass: bool,
    pub gamma: f64,
    pub diverged: usize,
    /// Fraction of trials whose iterates all stayed within `√2·R` of the minimiser.
    /// Convex problems with a known minimiser only.
    pub containment: Option<f64>,
}

/// `min f - f*` for convex theory, `min ‖∇f‖²` otherwise; `+∞` for diverged trials.
pub fn statistic(record: &TrialRecord, convex: bool) -> f64 {
    let v = if convex {
        record.best_subopt
    } else {
        record.best_gradsq
    };
    if record.diverged {
        f64::INFINITY
    } else {
        v.unwrap_or(f64::INFINITY)
    }
}

/// Compares the empirical `(1-β)`-quantile with the bound at `gamma`.
///
/// `gamma` and `theory.{iterations, lambda, sigma_omega}` must be the values the
/// records were produced with.
pub fn check_bound(
    records: &[TrialRecord],
    theory: &TheoryParams,
    gamma: f64,
) -> Result<QuantileSummary> {
    let first = records
        .first()
        .ok_or_else(|| Error::Precondition("no records to summarise".into()))?;
    for r in records {
        if r.iterations != first.iterations
            || r.lambda != first.lambda
            || r.gamma.to_bits() != first.gamma.to_bits()
            || r.sigma_omega.to_bits() != first.sigma_omega.to_bits()
        {
            return Err(Error::MixedRecords(format!(
                "trial {} differs from trial {} in (K, lambda, gamma, sigma_omega)",
                r.trial, first.trial
            )));
        }
    }
    if first.gamma.to_bits() != gamma.to_bits() {
        return Err(Error::MixedRecords(format!(
            "records used gamma = {}, summary asked for {gamma}",
            first.gamma
        )));
    }
    if first.iterations != theory.iterations
        || first.lambda.unwrap_or(f64::INFINITY) != theory.lambda
    {
        return Err(Error::MixedRecords(format!(
            "records used K = {}, lambda = {:?}; theory has K = {}, lambda = {}",
            first.iterations, first.lambda, theory.iterations, theory.lambda
        )));
    }
    let mut values: Vec<f64> = records
        .iter()
        .map(|r| statistic(r, theory.convex))
        .collect();
    values.sort_by(f64::total_cmp);
    let level = 1.0 - theory.beta;
    let q = quantile(&values, level.min(1.0 - f64::EPSILON))?;
    let bound = schedule::theory_bound(theory, gamma)?;
    let containment = if theory.convex && records.iter().any(|r| r.max_dist.is_some()) {
        let limit = std::f64::consts::SQRT_2 * theory.radius;
        let inside = records
            .iter()
            .filter(|r| !r.diverged && r.max_dist.is_some_and(|m| m <= limit))
            .count();
        Some(inside as f64 / records.len() as f64)
    } else {
        None
    };
    Ok(QuantileSummary {
        statistic: if theory.convex {
            "best_subopt".into()
        } else {
            "best_gradsq".into()
        },
        values,
        level,
        quantile_value: q,
        bound,
        pass: q <= bound,
        gamma,
        diverged: records.iter().filter(|r| r.diverged).count(),
        containment,
    })
}

/// One `(K, λ)` point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    #[serde(rename = "K")]
    pub iterations: u64,
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub sigma_omega: f64,
    pub summary: QuantileSummary,
    /// Trial mean of the statistic.
    pub mean: f64,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

fn grid_point(config: &ExperimentConfig, iterations: u64, lambda: ClipLevel) -> Result<GridPoint> {
    let point = config.resolve_at(iterations, lambda)?;
    let records = run_point(&point, config.trials, config.workers)?;
    let summary = check_bound(&records, &point.theory, point.run.gamma)?;
    let mean = summary.values.iter().sum::<f64>() / summary.values.len() as f64;
    log::info!(
        "K = {iterations}, lambda = {}: quantile {} (bound {})",
        lambda.value(),
        summary.quantile_value,
        summary.bound
    );
    Ok(GridPoint {
        iterations,
        lambda: lambda.into(),
        gamma: point.run.gamma,
        sigma_omega: point.run.sigma_omega,
        summary,
        mean,
        records,
    })
}

/// Runs the base `λ` at every `K` of `k_grid`.
pub fn sweep_k(config: &ExperimentConfig) -> Result<Vec<GridPoint>> {
    config.validate()?;
    let grid = config
        .k_grid
        .as_ref()
        .ok_or_else(|| Error::Precondition("sweep needs a K grid".into()))?;
    grid.iter()
        .map(|&k| grid_point(config, k, config.lambda))
        .collect()
}

/// Runs the base `K` at every level of `lambda_grid`.
pub fn sweep_lambda(config: &ExperimentConfig) -> Result<Vec<GridPoint>> {
    config.validate()?;
    let grid = config
        .lambda_grid
        .as_ref()
        .ok_or_else(|| Error::Precondition("sweep needs a lambda grid".into()))?;
    grid.iter()
        .map(|&l| grid_point(config, config.iterations, ClipLevel::new(l)?))
        .collect()
}
