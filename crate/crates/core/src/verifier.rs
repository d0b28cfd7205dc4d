//! Monte Carlo check of the bias and variance bounds for a clipped random vector.
//!
//! For `X = x + ξ` with `E‖ξ‖^α <= σ^α`, `X̂ = clip(X, λ)` and `x̂ = clip(x, λ/2)`,
//! with `c = 2^{2α-1}` and `e = max{0, ‖x‖ - λ/2}`:
//!
//! ```text
//! ‖E X̂ - x̂‖     <= c σ (σ^α + e^α)^{(α-1)/α} / λ^{α-1} + max{‖x‖, λ/2} c (σ^α + e^α) / λ^α + e
//! E‖X̂ - E X̂‖²  <= 9(c+1)/4 · λ^{2-α} σ^α + 9(c+1)/4 · λ^{2-α} e^α
//! ```

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clipping::{self, ClipLevel};
use crate::error::{Error, Result};
use crate::numkit::{self, RngStream, Vector, BOOTSTRAP_LANE};
use crate::oracles::{make_pareto_noise_with_moment, NoiseModel};

pub const DEFAULT_SAMPLES: usize = 1_000_000;
/// Smallest sample size for which a comparison is reported.
pub const MIN_SAMPLES: usize = 1_000;
const BLOCKS: usize = 1_000;
const RESAMPLES: usize = 500;
const BAND_LEVEL: f64 = 0.99;

#[derive(Debug, Clone)]
pub struct LemmaScenario {
    /// The mean of `X`.
    pub x: Vector,
    pub noise: NoiseModel,
    pub lambda: ClipLevel,
    pub n_samples: usize,
    pub seed: u64,
    pub stream_id: u64,
}

impl LemmaScenario {
    pub fn validate(&self) -> Result<()> {
        if self.x.dim() != self.noise.dim() {
            return Err(Error::InvalidDimension {
                expected: self.x.dim(),
                got: self.noise.dim(),
            });
        }
        if self.lambda.is_unclipped() {
            return Err(Error::params(
                "lambda",
                "the bounds need a finite clipping level",
            ));
        }
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::params(
                "n_samples",
                format!("must be at least {MIN_SAMPLES}, got {}", self.n_samples),
            ));
        }
        Ok(())
    }

    /// `max{0, ‖x‖ - λ/2}`
    fn excess(&self) -> f64 {
        (self.x.norm() - self.lambda.value() / 2.0).max(0.0)
    }
}

pub fn lemma_bias_bound(s: &LemmaScenario) -> f64 {
    let a = s.noise.alpha();
    let lam = s.lambda.value();
    let c = 2f64.powf(2.0 * a - 1.0);
    let e = s.excess();
    let mass = s.noise.sigma_alpha() + e.powf(a);
    c * s.noise.sigma() * mass.powf((a - 1.0) / a) / lam.powf(a - 1.0)
        + s.x.norm().max(lam / 2.0) * c * mass / lam.powf(a)
        + e
}

pub fn lemma_variance_bound(s: &LemmaScenario) -> f64 {
    let a = s.noise.alpha();
    let lam = s.lambda.value();
    let k = 9.0 * (2f64.powf(2.0 * a - 1.0) + 1.0) / 4.0;
    let scale = lam.powf(2.0 - a);
    k * scale * s.noise.sigma_alpha() + k * scale * s.excess().powf(a)
}

/// Empirical counterparts of the bounded quantities, with bootstrap half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClippedMoments {
    /// `‖mean(X̂) - x̂‖`
    pub bias_norm: f64,
    /// `mean ‖X̂ - mean(X̂)‖²`
    pub variance: f64,
    pub band_bias: f64,
    pub band_variance: f64,
}

/// Per-block sums of `X̂ - x̂` and `‖X̂ - x̂‖²`. Centring at `x̂` keeps the point-mass
/// case exact.
struct Blocks {
    dim: usize,
    sums: Vec<f64>,
    sq: Vec<f64>,
    counts: Vec<usize>,
}

impl Blocks {
    fn moments(&self, pick: impl Iterator<Item = usize>) -> (f64, f64) {
        let mut s1 = vec![0.0; self.dim];
        let mut s2 = 0.0;
        let mut n = 0usize;
        for b in pick {
            let row = &self.sums[b * self.dim..(b + 1) * self.dim];
            s1.iter_mut().zip(row).for_each(|(a, r)| *a += r);
            s2 += self.sq[b];
            n += self.counts[b];
        }
        let n = n as f64;
        s1.iter_mut().for_each(|a| *a /= n);
        let m2 = numkit::norm_sq(&s1);
        (m2.sqrt(), (s2 / n - m2).max(0.0))
    }
}

/// Draws `n_samples` of `X`, clips each at `λ`, and compares the sample mean to
/// `x̂ = clip(x, λ/2)`. Bands are the 99% quantile of `|θ* - θ̂|` over 500 bootstrap
/// resamples of 1000 contiguous blocks.
pub fn estimate_clipped_moments(s: &LemmaScenario) -> Result<ClippedMoments> {
    s.validate()?;
    let d = s.x.dim();
    let lam = s.lambda;
    let half = ClipLevel::new(lam.value() / 2.0)?;
    let x_hat = clipping::clip(&s.x, half);
    let x_hat = x_hat.as_slice();

    let nblocks = BLOCKS.min(s.n_samples);
    let mut blocks = Blocks {
        dim: d,
        sums: vec![0.0; nblocks * d],
        sq: vec![0.0; nblocks],
        counts: vec![0; nblocks],
    };
    let mut rng = RngStream::new(s.seed, s.stream_id);
    let mut sample = vec![0.0; d];
    for i in 0..s.n_samples {
        let b = i * nblocks / s.n_samples;
        s.noise.sample_into(&mut rng, &mut sample);
        sample
            .iter_mut()
            .zip(s.x.as_slice())
            .for_each(|(v, m)| *v += m);
        clipping::clip_in_place(&mut sample, lam);
        let row = &mut blocks.sums[b * d..(b + 1) * d];
        let mut sq = 0.0;
        for ((r, v), c) in row.iter_mut().zip(&sample).zip(x_hat) {
            let dev = v - c;
            *r += dev;
            sq += dev * dev;
        }
        blocks.sq[b] += sq;
        blocks.counts[b] += 1;
    }

    let (bias_norm, variance) = blocks.moments(0..nblocks);
    let mut boot = RngStream::with_lane(s.seed, s.stream_id, BOOTSTRAP_LANE);
    let mut dev_bias = Vec::with_capacity(RESAMPLES);
    let mut dev_var = Vec::with_capacity(RESAMPLES);
    let mut pick = vec![0usize; nblocks];
    for _ in 0..RESAMPLES {
        pick.iter_mut().for_each(|p| *p = boot.index(nblocks));
        let (b, v) = blocks.moments(pick.iter().copied());
        dev_bias.push((b - bias_norm).abs());
        dev_var.push((v - variance).abs());
    }
    Ok(ClippedMoments {
        bias_norm,
        variance,
        band_bias: crate::harness::quantile(&dev_bias, BAND_LEVEL)?,
        band_variance: crate::harness::quantile(&dev_var, BAND_LEVEL)?,
    })
}

/// One comparison row; field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub alpha: f64,
    pub lambda: f64,
    pub x_norm: f64,
    pub sigma_alpha: f64,
    pub emp_bias: f64,
    pub bound_bias: f64,
    pub emp_var: f64,
    pub bound_var: f64,
    pub band_bias: f64,
    pub band_var: f64,
    pub pass: bool,
}

impl LemmaRow {
    pub fn slack_bias(&self) -> f64 {
        self.bound_bias - self.emp_bias
    }

    pub fn slack_var(&self) -> f64 {
        self.bound_var - self.emp_var
    }
}

pub fn evaluate(s: &LemmaScenario) -> Result<LemmaRow> {
    let m = estimate_clipped_moments(s)?;
    let bound_bias = lemma_bias_bound(s);
    let bound_var = lemma_variance_bound(s);
    Ok(LemmaRow {
        alpha: s.noise.alpha(),
        lambda: s.lambda.value(),
        x_norm: s.x.norm(),
        sigma_alpha: s.noise.sigma_alpha(),
        emp_bias: m.bias_norm,
        bound_bias,
        emp_var: m.variance,
        bound_var,
        band_bias: m.band_bias,
        band_var: m.band_variance,
        pass: m.bias_norm <= bound_bias + m.band_bias && m.variance <= bound_var + m.band_variance,
    })
}

/// Evaluates every scenario in parallel. Failing rows are flagged, not raised.
pub fn sweep_lemma(grid: &[LemmaScenario]) -> Result<Vec<LemmaRow>> {
    if grid.is_empty() {
        return Err(Error::Precondition("lemma grid is empty".into()));
    }
    grid.par_iter().map(evaluate).collect()
}

/// [`sweep_lemma`] on a pool of `workers` threads (`None`: all logical cores).
pub fn sweep_lemma_with(grid: &[LemmaScenario], workers: Option<usize>) -> Result<Vec<LemmaRow>> {
    crate::harness::worker_pool(workers)?.install(|| sweep_lemma(grid))
}

/// The 75-row grid: `α ∈ {1.2, 1.5, 2}` with Pareto tails `{1.7, 2.0, 2.5}` scaled to
/// `σ^α = 1`, `λ/σ ∈ {0.5, 1, 2, 4, 8}`, `‖x‖ ∈ {0, λ/4, λ/2, λ, 4λ}`, `d = 4`.
/// Row `i` uses stream `i`.
pub fn default_grid(seed: u64, n_samples: usize) -> Result<Vec<LemmaScenario>> {
    const DIM: usize = 4;
    let mut grid = Vec::with_capacity(75);
    for (alpha, tail_p) in [(1.2, 1.7), (1.5, 2.0), (2.0, 2.5)] {
        let noise = make_pareto_noise_with_moment(alpha, tail_p, 1.0, DIM)?;
        for lam in [0.5, 1.0, 2.0, 4.0, 8.0] {
            for frac in [0.0, 0.25, 0.5, 1.0, 4.0] {
                let mut x = vec![0.0; DIM];
                x[0] = frac * lam;
                grid.push(LemmaScenario {
                    x: Vector::new(x)?,
                    noise: noise.clone(),
                    lambda: ClipLevel::new(lam)?,
                    n_samples,
                    seed,
                    stream_id: grid.len() as u64,
                });
            }
        }
    }
    Ok(grid)
}

pub fn write_lemma_csv(rows: &[LemmaRow], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
