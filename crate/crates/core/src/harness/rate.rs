use serde::Serialize;

use super::{sweep_k, ExperimentConfig, GridPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub k_grid: Vec<u64>,
    pub quantiles: Vec<f64>,
    /// Large-`K` plateau subtracted before the log-log fit.
    pub floor: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub raw_slope: f64,
    pub raw_intercept: f64,
    pub raw_r2: f64,
    /// Set when the floored fit is undefined.
    pub diagnostic: Option<String>,
}

struct Line {
    slope: f64,
    intercept: f64,
    r2: f64,
}

const UNDEFINED: Line = Line {
    slope: f64::NAN,
    intercept: f64::NAN,
    r2: f64::NAN,
};

fn least_squares(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Line {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

/// Fits `log(q - floor)` and `log q` against `log K`.
///
/// A nonpositive difference makes the floored fit NaN with a diagnostic; the raw
/// fit is still reported.
pub fn fit_rate(k_grid: &[u64], quantiles: &[f64], floor: f64) -> Result<RateFit> {
    if k_grid.len() != quantiles.len() {
        return Err(Error::InvalidDimension {
            expected: k_grid.len(),
            got: quantiles.len(),
        });
    }
    if k_grid.len() < 2 {
        return Err(Error::Precondition(
            "a rate fit needs at least two points".into(),
        ));
    }
    let xs: Vec<f64> = k_grid.iter().map(|&k| (k as f64).ln()).collect();
    let raw = if quantiles.iter().all(|&q| q > 0.0 && q.is_finite()) {
        least_squares(&xs, &quantiles.iter().map(|q| q.ln()).collect::<Vec<_>>())
    } else {
        UNDEFINED
    };
    let mut diagnostic = None;
    let floored = match quantiles
        .iter()
        .zip(k_grid)
        .find(|(&q, _)| !(q - floor > 0.0 && (q - floor).is_finite()))
    {
        Some((&q, &k)) => {
            let msg = format!("quantile {q} at K = {k} is not above the floor {floor}");
            log::warn!("{msg}");
            diagnostic = Some(msg);
            UNDEFINED
        }
        None => least_squares(
            &xs,
            &quantiles
                .iter()
                .map(|q| (q - floor).ln())
                .collect::<Vec<_>>(),
        ),
    };
    Ok(RateFit {
        k_grid: k_grid.to_vec(),
        quantiles: quantiles.to_vec(),
        floor,
        slope: floored.slope,
        intercept: floored.intercept,
        r2: floored.r2,
        raw_slope: raw.slope,
        raw_intercept: raw.intercept,
        raw_r2: raw.r2,
        diagnostic,
    })
}

/// The grid must have at least 4 values spanning two decades.
pub fn check_rate_grid(grid: &[u64]) -> Result<()> {
    if grid.len() < 4 {
        return Err(Error::Precondition(format!(
            "rate fit needs at least 4 K values, got {}",
            grid.len()
        )));
    }
    let (lo, hi) = (grid[0] as f64, grid[grid.len() - 1] as f64);
    if hi / lo < 100.0 {
        return Err(Error::Precondition(format!(
            "K grid must span two decades, spans {lo}..{hi}"
        )));
    }
    Ok(())
}

/// Fits the `(1-β)`-quantiles of a `K` sweep. The floor is the trial mean of the
/// statistic at the largest `K`.
pub fn fit_points(points: &[GridPoint]) -> Result<RateFit> {
    let grid: Vec<u64> = points.iter().map(|p| p.iterations).collect();
    check_rate_grid(&grid)?;
    let quantiles: Vec<f64> = points.iter().map(|p| p.summary.quantile_value).collect();
    fit_rate(&grid, &quantiles, points[points.len() - 1].mean)
}

/// Runs `T` trials at every `K` of the grid and fits the decay of the quantile.
pub fn rate_fit(config: &ExperimentConfig) -> Result<RateFit> {
    let grid = config
        .k_grid
        .as_ref()
        .ok_or_else(|| Error::Precondition("rate fit needs a K grid".into()))?;
    check_rate_grid(grid)?;
    fit_points(&sweep_k(config)?)
}
