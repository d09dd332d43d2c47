//! Information criteria, the Ljung-Box portmanteau test, and normal
//! Q-Q diagnostics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma_ur;

use crate::acf::acf_slice;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// AIC / AICc / BIC for one fitted model.
///
/// Values are comparable only across models with identical differencing
/// orders, because the underlying likelihoods refer to differently
/// differenced series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaSet {
    pub aic: f64,
    pub aicc: f64,
    pub bic: f64,
    /// Parameter count.
    pub k: usize,
    /// Effective sample size.
    pub n: usize,
}

/// aic = -2 logL + 2k; aicc = aic + 2k(k+1)/(n-k-1); bic = -2 logL + k ln n.
pub fn information_criteria(log_likelihood: f64, k: usize, n: usize) -> Result<CriteriaSet> {
    if n == 0 {
        return Err(Error::InsufficientSample { n, k });
    }
    if n <= k + 1 {
        return Err(Error::InsufficientSample { n, k });
    }
    let kf = k as f64;
    let nf = n as f64;
    let aic = -2.0 * log_likelihood + 2.0 * kf;
    let aicc = aic + 2.0 * kf * (kf + 1.0) / (nf - kf - 1.0);
    let bic = -2.0 * log_likelihood + kf * nf.ln();
    Ok(CriteriaSet {
        aic,
        aicc,
        bic,
        k,
        n,
    })
}

/// Result of the Ljung-Box white-noise test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxResult {
    /// Q* statistic.
    pub q_star: f64,
    /// Number of lags tested.
    pub lags_tested: usize,
    /// Chi-squared degrees of freedom: lags - fitted parameter count.
    pub dof: usize,
    pub p_value: f64,
}

/// Survival function of the chi-squared distribution.
fn chi_squared_sf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0)
}

/// Ljung-Box test: Q* = T(T+2) sum_{k=1..l} r_k^2 / (T-k), referred to a
/// chi-squared distribution with l - K degrees of freedom, K being the
/// number of estimated ARMA coefficients.
pub fn ljung_box(residuals: &TimeSeries, lags: usize, fitted_params: usize) -> Result<LjungBoxResult> {
    let n = residuals.len();
    if lags < 1 || n <= lags {
        return Err(Error::InvalidLags(format!(
            "need T > l >= 1 (T = {n}, l = {lags})"
        )));
    }
    if lags <= fitted_params {
        return Err(Error::InvalidLags(format!(
            "need l > K (l = {lags}, K = {fitted_params})"
        )));
    }
    let r = acf_slice(residuals.values(), lags);
    let t = n as f64;
    let mut q = 0.0;
    for (k, &rk) in r.iter().enumerate().skip(1) {
        q += rk * rk / (t - k as f64);
    }
    q *= t * (t + 2.0);
    let dof = lags - fitted_params;
    Ok(LjungBoxResult {
        q_star: q,
        lags_tested: lags,
        dof,
        p_value: chi_squared_sf(q, dof),
    })
}

/// One point of a normal Q-Q diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
}

/// Normal Q-Q points at plotting positions (i - 0.5)/T.
///
/// The sorted sample is centered by its mean and scaled so that a sample
/// falling exactly on the normal plotting positions lands on the identity
/// line. Zero-variance input yields all-zero sample quantiles rather than
/// an error, so a degenerate series never aborts a diagnostic pass.
pub fn qq_points(data: &TimeSeries) -> Result<Vec<QqPoint>> {
    let n = data.len();
    if n < 3 {
        return Err(Error::SeriesTooShort { needed: 3, have: n });
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let theoretical: Vec<f64> = (1..=n)
        .map(|i| normal.inverse_cdf((i as f64 - 0.5) / n as f64))
        .collect();

    let mut sorted = data.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = (sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
    let theo_mean = theoretical.iter().sum::<f64>() / n as f64;
    let theo_sd = (theoretical
        .iter()
        .map(|v| (v - theo_mean) * (v - theo_mean))
        .sum::<f64>()
        / n as f64)
        .sqrt();

    let scale = if sd > 0.0 { theo_sd / sd } else { 0.0 };
    Ok(theoretical
        .into_iter()
        .zip(sorted)
        .map(|(theoretical, x)| QqPoint {
            theoretical,
            sample: (x - mean) * scale,
        })
        .collect())
}
