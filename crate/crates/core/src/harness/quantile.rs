use crate::error::{Error, Result};

/// The `⌈level·n⌉`-th smallest value (1-based), without interpolation.
///
/// `level·n` is taken with a `1e-9` tolerance so that products such as `0.7 · 10`
/// that land a rounding error above an integer do not skip an order statistic.
pub fn quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Precondition("quantile of an empty sample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::params(
            "level",
            format!("must lie in (0, 1), got {level}"),
        ));
    }
    let n = values.len();
    let rank = ((level * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut v = values.to_vec();
    let (_, q, _) = v.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*q)
}
