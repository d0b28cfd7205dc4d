//! Radial clipping `clip(v, λ) = min{1, λ/‖v‖} v` and the analysis quantities
//! `c_t` and `θ_t` recorded by the optimizer diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{self, Vector};

/// A clipping level `λ > 0`.
///
/// [`ClipLevel::unclipped`] is a `+∞` sentinel under which clipping is the
/// identity; it cannot be combined with a privacy target.
#[derive(Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "Option<f64>", into = "Option<f64>")]
pub struct ClipLevel(f64);

impl ClipLevel {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(ClipLevel(lambda))
        } else {
            Err(Error::InvalidClipLevel(lambda))
        }
    }

    pub const fn unclipped() -> Self {
        ClipLevel(f64::INFINITY)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_unclipped(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Debug for ClipLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unclipped() {
            f.write_str("ClipLevel(unclipped)")
        } else {
            write!(f, "ClipLevel({})", self.0)
        }
    }
}

impl TryFrom<Option<f64>> for ClipLevel {
    type Error = Error;

    /// `null` in configuration files means unclipped.
    fn try_from(v: Option<f64>) -> Result<Self> {
        match v {
            None => Ok(ClipLevel::unclipped()),
            Some(x) => ClipLevel::new(x),
        }
    }
}

impl From<ClipLevel> for Option<f64> {
    fn from(c: ClipLevel) -> Self {
        (!c.is_unclipped()).then_some(c.0)
    }
}

/// Clips `v` in place; returns `true` when the clip was active.
#[inline]
pub fn clip_in_place(v: &mut [f64], lambda: ClipLevel) -> bool {
    let n = numkit::norm(v);
    if n <= lambda.0 {
        return false;
    }
    let s = lambda.0 / n;
    v.iter_mut().for_each(|x| *x *= s);
    true
}

/// `v` if `‖v‖ <= λ`, otherwise `(λ/‖v‖) v`.
pub fn clip(v: &Vector, lambda: ClipLevel) -> Vector {
    let mut out = v.as_slice().to_vec();
    clip_in_place(&mut out, lambda);
    Vector::from_raw(out)
}

/// `c = min{1, λ / (2‖∇f‖)}`, taken as 1 when the gradient vanishes.
#[inline]
pub fn clip_factor_c(grad_norm: f64, lambda: ClipLevel) -> f64 {
    if grad_norm == 0.0 {
        return 1.0;
    }
    (lambda.0 / (2.0 * grad_norm)).min(1.0)
}

/// `θ = ĝ - c ∇f` with `c = clip_factor_c(‖∇f‖, λ)`.
pub fn theta(g_hat: &Vector, grad: &Vector, lambda: ClipLevel) -> Result<Vector> {
    g_hat.check_dim(grad.dim())?;
    let mut out = vec![0.0; grad.dim()];
    theta_raw(g_hat.as_slice(), grad.as_slice(), lambda, &mut out);
    Vector::new(out)
}

#[inline]
pub(crate) fn theta_raw(g_hat: &[f64], grad: &[f64], lambda: ClipLevel, out: &mut [f64]) {
    let c = clip_factor_c(numkit::norm(grad), lambda);
    for ((o, g), d) in out.iter_mut().zip(g_hat).zip(grad) {
        *o = g - c * d;
    }
}
