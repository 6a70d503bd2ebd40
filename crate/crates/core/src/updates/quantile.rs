use crate::error::{Error, Result};

/// Nearest-rank quantile without interpolation.
///
/// Sorts ascending and returns the element at 0-based index
/// `ceil(q * (len - 1))`, so `q = 0` is the minimum and `q = 1` the maximum.
pub fn quantile_threshold(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("quantile of an empty vector".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!(
            "quantile level {q} outside [0, 1]"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Numeric("quantile input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * (sorted.len() - 1) as f64).ceil() as usize;
    Ok(sorted[rank.min(sorted.len() - 1)])
}
