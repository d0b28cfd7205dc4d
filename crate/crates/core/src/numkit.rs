//! Dense vectors and deterministic random streams.
//!
//! Every random quantity in the crate is drawn from an [`RngStream`], a ChaCha8
//! block cipher keyed by a 64-bit seed and positioned on one of its 2^64 independent
//! streams by `stream_id`. Trial `i` of an experiment uses `stream_id = i`, so trials
//! can run in any order or concurrently and still produce identical results.
//!
//! Gaussian variates use the Ziggurat method of [`rand_distr::StandardNormal`].
//! Reimplementations in other languages are expected to match moments, not bits.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euclidean norm of a slice.
#[inline]
pub fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

#[inline]
pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean distance between two slices of equal length.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A dense point or gradient in `R^d`, `d >= 1`, with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension {
                expected: 1,
                got: 0,
            });
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Vector::new(vec![0.0; dim])
    }

    /// `value` repeated `dim` times.
    pub fn filled(dim: usize, value: f64) -> Result<Self> {
        Vector::new(vec![value; dim])
    }

    /// Wraps entries already known to be finite and non-empty.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty() && entries.iter().all(|x| x.is_finite()));
        Vector(entries)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        self.check_dim(other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.check_dim(other.dim())?;
        Vector::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.check_dim(other.dim())?;
        Vector::new(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, t: f64) -> Result<Vector> {
        Vector::new(self.0.iter().map(|a| t * a).collect())
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::InvalidDimension {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Vector").field(&self.0).finish()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Lane used by the optimizer for stochastic-gradient noise.
pub const ORACLE_LANE: u64 = 0;
/// Lane used by the optimizer for the Gaussian privacy mechanism.
pub const PRIVACY_LANE: u64 = 1;
/// Lane used by the lemma verifier for bootstrap resampling.
pub const BOOTSTRAP_LANE: u64 = 2;

/// SplitMix64 finaliser, used to derive lane keys from the user seed.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic random stream identified by `(seed, stream_id, lane)`.
///
/// Two streams with equal identifiers yield identical sequences. Different
/// `stream_id`s select disjoint ChaCha streams under the same key; different lanes
/// use different keys.
#[derive(Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    lane: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::with_lane(seed, stream_id, ORACLE_LANE)
    }

    pub fn with_lane(seed: u64, stream_id: u64, lane: u64) -> Self {
        let key = if lane == ORACLE_LANE {
            seed
        } else {
            mix64(seed ^ mix64(lane))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            lane,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn lane(&self) -> u64 {
        self.lane
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform on the half-open interval `(0, 1]`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Overwrites `out` with i.i.d. `N(0, sigma^2)` draws. Consumes nothing when
    /// `sigma == 0`.
    #[inline]
    pub fn fill_gaussian(&mut self, sigma: f64, out: &mut [f64]) {
        if sigma == 0.0 {
            out.fill(0.0);
            return;
        }
        for o in out.iter_mut() {
            *o = sigma * self.standard_normal();
        }
    }

    /// `d` i.i.d. samples of `N(0, sigma^2)`.
    pub fn gaussian_vector(&mut self, dim: usize, sigma: f64) -> Result<Vector> {
        if dim == 0 {
            return Err(Error::InvalidDimension {
                expected: 1,
                got: 0,
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::params(
                "sigma",
                format!("must be finite and >= 0, got {sigma}"),
            ));
        }
        let mut v = vec![0.0; dim];
        self.fill_gaussian(sigma, &mut v);
        Ok(Vector::from_raw(v))
    }

    /// Uniform index in `0..n`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("seed", &self.seed)
            .field("stream_id", &self.stream_id)
            .field("lane", &self.lane)
            .field("position", &self.position())
            .finish()
    }
}
