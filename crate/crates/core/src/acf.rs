//! Sample autocorrelation and partial autocorrelation functions.

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Sample autocorrelations for lags 0..=max_lag.
///
/// Uses the divide-by-T (biased) convention: r_k is the lag-k
/// autocovariance over T divided by the lag-0 autocovariance over T.
/// `acf[0]` is always 1.
pub fn acf(y: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag < 1 || y.len() <= max_lag {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 1,
            have: y.len(),
        });
    }
    Ok(acf_slice(y.values(), max_lag))
}

pub(crate) fn acf_slice(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for k in 1..=max_lag {
        if c0 == 0.0 {
            out.push(0.0);
            continue;
        }
        let ck: f64 = (k..n).map(|t| centered[t] * centered[t - k]).sum::<f64>() / n as f64;
        out.push(ck / c0);
    }
    out
}

/// Partial autocorrelations for lags 0..=max_lag via the Durbin-Levinson
/// recursion on the sample ACF. `pacf[0]` is 1 by convention and
/// `pacf[1]` equals `acf[1]`.
pub fn pacf(y: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    let rho = acf(y, max_lag)?;
    Ok(pacf_from_acf(&rho))
}

pub(crate) fn pacf_from_acf(rho: &[f64]) -> Vec<f64> {
    let max_lag = rho.len() - 1;
    let mut out = vec![1.0];
    if max_lag == 0 {
        return out;
    }
    // phi[j] holds phi_{k,j+1} for the current order k
    let mut phi = vec![rho[1]];
    out.push(rho[1]);
    for k in 2..=max_lag {
        let num = rho[k]
            - (1..k).map(|j| phi[j - 1] * rho[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * rho[j]).sum::<f64>();
        let phi_kk = if den.abs() < 1e-12 { 0.0 } else { num / den };
        let mut next = vec![0.0; k];
        for j in 1..k {
            next[j - 1] = phi[j - 1] - phi_kk * phi[k - j - 1];
        }
        next[k - 1] = phi_kk;
        phi = next;
        out.push(phi_kk);
    }
    out
}
