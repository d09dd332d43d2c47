//! Forecast accuracy metrics.

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Mean absolute scaled error.
///
/// Test errors are scaled by the in-sample mean absolute error of the
/// (seasonal-)naive method computed on the training series: lag-s
/// differences when `period > 1`, lag-1 otherwise. Values below 1 beat
/// the naive forecast.
pub fn mase(actual: &[f64], forecast: &[f64], insample: &TimeSeries, period: usize) -> Result<f64> {
    if actual.len() != forecast.len() || actual.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} forecasts", actual.len().max(1)),
            actual: format!("{}", forecast.len()),
        });
    }
    let lag = if period > 1 { period } else { 1 };
    let train = insample.values();
    if train.len() <= lag {
        return Err(Error::SeriesTooShort {
            needed: lag + 1,
            have: train.len(),
        });
    }
    let scale = (lag..train.len())
        .map(|t| (train[t] - train[t - lag]).abs())
        .sum::<f64>()
        / (train.len() - lag) as f64;
    if scale == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let mean_abs = actual
        .iter()
        .zip(forecast)
        .map(|(y, f)| (f - y).abs())
        .sum::<f64>()
        / actual.len() as f64;
    Ok(mean_abs / scale)
}

/// Root mean squared error.
pub fn rmse(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    if actual.len() != forecast.len() || actual.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} forecasts", actual.len().max(1)),
            actual: format!("{}", forecast.len()),
        });
    }
    let mse = actual
        .iter()
        .zip(forecast)
        .map(|(y, f)| (f - y) * (f - y))
        .sum::<f64>()
        / actual.len() as f64;
    Ok(mse.sqrt())
}
