//! The versioned JSON experiment file.
//!
//! Every field has a default, so `{}` describes a complete experiment (a 10-dimensional
//! quadratic under Pareto noise). Dotted overrides such as `run.lambda=2` or
//! `experiment.k_grid=[1000,10000]` are applied to the JSON tree before it is
//! type-checked. Setting a `kind` key drops the sibling fields of the old variant, so
//! set `kind` before the variant's own fields.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clipping::ClipLevel;
use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, GammaRule, OutputFormat, DEFAULT_TRIALS};
use crate::numkit::Vector;
use crate::oracles::{self, NoiseModel, ProblemSpec};
use crate::privacy::PrivacyTarget;
use crate::schedule::TheoryParams;
use crate::verifier::DEFAULT_SAMPLES;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub schema: String,
    pub seed: u64,
    pub problem: ProblemConfig,
    pub noise: NoiseConfig,
    /// Defaults to `x* + e_1` when the minimiser is known, else `e_1`.
    pub x0: Option<Vec<f64>>,
    pub run: RunSection,
    pub theory: TheorySection,
    pub privacy: Option<PrivacyConfig>,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            schema: SCHEMA_VERSION.into(),
            seed: 0,
            problem: ProblemConfig::default(),
            noise: NoiseConfig::default(),
            x0: None,
            run: RunSection::default(),
            theory: TheorySection::default(),
            privacy: None,
            experiment: ExperimentSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Eigenvalues default to `dim` evenly spaced values in `[eig_min, eig_max]`.
    Quadratic {
        dim: usize,
        #[serde(default)]
        eigenvalues: Option<Vec<f64>>,
        #[serde(default = "default_eig_min")]
        eig_min: f64,
        #[serde(default = "default_eig_max")]
        eig_max: f64,
        /// Defaults to the origin.
        #[serde(default)]
        x_star: Option<Vec<f64>>,
    },
    Nonconvex {
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    Logistic {
        n: usize,
        dim: usize,
        reg: f64,
        #[serde(default)]
        data_seed: u64,
    },
}

fn default_eig_min() -> f64 {
    0.1
}
fn default_eig_max() -> f64 {
    1.0
}
fn one() -> f64 {
    1.0
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::Quadratic {
            dim: 10,
            eigenvalues: None,
            eig_min: default_eig_min(),
            eig_max: default_eig_max(),
            x_star: None,
        }
    }
}

impl ProblemConfig {
    pub fn dim(&self) -> usize {
        match *self {
            ProblemConfig::Quadratic { dim, .. }
            | ProblemConfig::Nonconvex { dim, .. }
            | ProblemConfig::Logistic { dim, .. } => dim,
        }
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        match self {
            ProblemConfig::Quadratic {
                dim,
                eigenvalues,
                eig_min,
                eig_max,
                x_star,
            } => {
                let eigs = match eigenvalues {
                    Some(e) => e.clone(),
                    None if *dim == 1 => vec![*eig_max],
                    None => (0..*dim)
                        .map(|i| {
                            let t = i as f64;
                            let rest = (*dim - 1 - i) as f64;
                            (eig_min * rest + eig_max * t) / (*dim - 1) as f64
                        })
                        .collect(),
                };
                let center = match x_star {
                    Some(c) => Vector::new(c.clone())?,
                    None => Vector::zeros(*dim)?,
                };
                oracles::make_quadratic(*dim, &eigs, &center)
            }
            ProblemConfig::Nonconvex { dim, scale } => oracles::make_nonconvex_smooth(*dim, *scale),
            ProblemConfig::Logistic {
                n,
                dim,
                reg,
                data_seed,
            } => oracles::make_logistic(*n, *dim, *reg, *data_seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseConfig {
    /// Radial Pareto; give exactly one of `sigma_alpha` (the certified `E‖ξ‖^α`) or `scale`.
    Pareto {
        alpha: f64,
        tail_p: f64,
        #[serde(default)]
        sigma_alpha: Option<f64>,
        #[serde(default)]
        scale: Option<f64>,
    },
    Gaussian {
        #[serde(default = "two")]
        alpha: f64,
        std: f64,
    },
    StudentT {
        alpha: f64,
        dof: f64,
        scale: f64,
    },
    TwoPoint {
        alpha: f64,
        magnitude: f64,
    },
    None,
}

fn two() -> f64 {
    2.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::Pareto {
            alpha: 1.5,
            tail_p: 2.5,
            sigma_alpha: Some(1.0),
            scale: None,
        }
    }
}

impl NoiseConfig {
    pub fn build(&self, dim: usize) -> Result<NoiseModel> {
        match *self {
            NoiseConfig::Pareto {
                alpha,
                tail_p,
                sigma_alpha,
                scale,
            } => match (sigma_alpha, scale) {
                (Some(m), None) => oracles::make_pareto_noise_with_moment(alpha, tail_p, m, dim),
                (None, Some(s)) => oracles::make_pareto_noise(alpha, tail_p, s, dim),
                _ => Err(Error::Config {
                    path: "noise".into(),
                    message: "pareto noise needs exactly one of `sigma_alpha` and `scale`".into(),
                }),
            },
            NoiseConfig::Gaussian { alpha, std } => NoiseModel::gaussian(alpha, std, dim),
            NoiseConfig::StudentT { alpha, dof, scale } => {
                NoiseModel::student_t(alpha, dof, scale, dim)
            }
            NoiseConfig::TwoPoint { alpha, magnitude } => {
                NoiseModel::two_point(alpha, magnitude, dim)
            }
            NoiseConfig::None => NoiseModel::none(dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// `null` runs unclipped.
    pub lambda: Option<f64>,
    pub iterations: u64,
    pub gamma: GammaRule,
    /// Ignored when `privacy` is set.
    pub sigma_omega: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            lambda: Some(4.0),
            iterations: 10_000,
            gamma: GammaRule::TheoryFull,
            sigma_omega: 0.0,
        }
    }
}

/// Constants for the step-size rules and the bound; `null` takes the value implied by
/// the problem, noise and starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheorySection {
    pub smoothness: Option<f64>,
    /// `R` (convex) or `Δ` (non-convex).
    pub radius: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: f64,
}

impl Default for TheorySection {
    fn default() -> Self {
        TheorySection {
            smoothness: None,
            radius: None,
            sigma: None,
            alpha: None,
            beta: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrivacyKind {
    Expectation,
    FiniteSum,
}

/// `K` comes from the run (or the `K` grid point being evaluated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyConfig {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "expectation")]
    pub regime: PrivacyKind,
    /// Sampling ratio, finite-sum only.
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default = "one")]
    pub c_dp: f64,
}

fn expectation() -> PrivacyKind {
    PrivacyKind::Expectation
}

impl PrivacyConfig {
    pub fn target(&self, iterations: u64) -> Result<PrivacyTarget> {
        let t = match (self.regime, self.q) {
            (PrivacyKind::Expectation, None) => {
                PrivacyTarget::expectation(self.epsilon, self.delta, iterations)?
            }
            (PrivacyKind::FiniteSum, Some(q)) => {
                PrivacyTarget::finite_sum(self.epsilon, self.delta, iterations, q)?
            }
            (PrivacyKind::Expectation, Some(_)) => {
                return Err(Error::Config {
                    path: "privacy.q".into(),
                    message: "only the finite-sum regime takes a sampling ratio".into(),
                })
            }
            (PrivacyKind::FiniteSum, None) => {
                return Err(Error::Config {
                    path: "privacy.q".into(),
                    message: "the finite-sum regime needs a sampling ratio".into(),
                })
            }
        };
        t.with_c_dp(self.c_dp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub trials: usize,
    pub k_grid: Option<Vec<u64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub workers: Option<usize>,
    /// Monte Carlo samples per row of the lemma sweep.
    pub lemma_samples: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            trials: DEFAULT_TRIALS,
            k_grid: None,
            lambda_grid: None,
            workers: None,
            lemma_samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: Option<String>,
    /// `csv` or `json`; `null` picks by extension.
    pub format: Option<String>,
    /// Writes a generation-time line; turn off for byte-stable output.
    pub timestamp: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: None,
            format: None,
            timestamp: true,
        }
    }
}

impl OutputSection {
    pub fn format(&self) -> Result<OutputFormat> {
        match (&self.format, &self.path) {
            (Some(f), _) => f.parse(),
            (None, Some(p)) => OutputFormat::from_path(Path::new(p)),
            (None, None) => Ok(OutputFormat::Csv),
        }
    }
}

/// Applies `key.path=value`; the value is parsed as JSON and falls back to a string.
pub fn apply_override(tree: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| Error::Config {
        path: assignment.into(),
        message: "override must look like `key.path=value`".into(),
    })?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config {
            path: key.into(),
            message: "empty path segment".into(),
        });
    }
    let value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    let mut node = tree;
    let segments: Vec<&str> = key.split('.').collect();
    let (last, parents) = segments.split_last().expect("nonempty");
    for seg in parents {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(seg.to_string())
            .or_insert(Value::Null);
    }
    if !node.is_object() {
        *node = Value::Object(Default::default());
    }
    let map = node.as_object_mut().expect("object");
    if *last == "kind" && map.get("kind") != Some(&value) {
        map.clear();
    }
    map.insert(last.to_string(), value);
    Ok(())
}

impl Config {
    /// Reads `path` (or starts from the defaults) and applies the overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut tree = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|source| Error::Json {
                    path: p.to_path_buf(),
                    source,
                })?
            }
            None => serde_json::to_value(Config::default()).expect("default config serialises"),
        };
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        Self::from_value(tree)
    }

    pub fn from_value(tree: Value) -> Result<Self> {
        let cfg: Config = serde_path_to_error::deserialize(tree).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config {
                path: "schema".into(),
                message: format!("expected {SCHEMA_VERSION}, found {}", cfg.schema),
            });
        }
        Ok(cfg)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// Builds problem, noise, starting point and theory constants.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let problem = self.problem.build()?;
        let dim = problem.dim();
        let noise = self.noise.build(dim)?;
        let x0 = match &self.x0 {
            Some(v) => Vector::new(v.clone())?,
            None => {
                let mut e = vec![0.0; dim];
                e[0] = 1.0;
                match problem.x_star() {
                    Some(c) => Vector::new(e)?.add(c)?,
                    None => Vector::new(e)?,
                }
            }
        };
        if x0.dim() != dim {
            return Err(Error::Config {
                path: "x0".into(),
                message: format!("has dimension {}, problem has {dim}", x0.dim()),
            });
        }
        let lambda = match self.run.lambda {
            Some(l) => ClipLevel::new(l)?,
            None => ClipLevel::unclipped(),
        };
        let theory = TheoryParams {
            smoothness: self.theory.smoothness.unwrap_or(problem.smoothness()),
            radius: match self.theory.radius {
                Some(r) => r,
                None => problem.initial_radius(&x0)?,
            },
            sigma: self.theory.sigma.unwrap_or(noise.sigma()),
            alpha: self.theory.alpha.unwrap_or(noise.alpha()),
            iterations: self.run.iterations,
            beta: self.theory.beta,
            lambda: lambda.value(),
            sigma_omega: self.run.sigma_omega,
            dim,
            convex: problem.is_convex(),
        };
        let privacy = self
            .privacy
            .as_ref()
            .map(|p| p.target(self.run.iterations))
            .transpose()?;
        let cfg = ExperimentConfig {
            problem: Arc::new(problem),
            noise,
            x0,
            lambda,
            iterations: self.run.iterations,
            gamma: self.run.gamma,
            sigma_omega: self.run.sigma_omega,
            seed: self.seed,
            theory,
            privacy,
            trials: self.experiment.trials,
            k_grid: self.experiment.k_grid.clone(),
            lambda_grid: self.experiment.lambda_grid.clone(),
            workers: self.experiment.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
