//! Finite differencing with exact inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Provenance of a differencing pass, retaining the prefixes needed to
/// reconstruct the original series exactly.
///
/// `initials[i]` holds the first `lag` values of the series after `i`
/// applications of (1 − L^lag).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSpec {
    pub lag: usize,
    pub order: usize,
    pub initials: Vec<Vec<f64>>,
}

impl DifferenceSpec {
    /// Length of the series this spec was produced from.
    pub fn original_len(&self, differenced_len: usize) -> usize {
        differenced_len + self.lag * self.order
    }
}

fn diff_once(values: &[f64], lag: usize) -> Vec<f64> {
    (lag..values.len()).map(|t| values[t] - values[t - lag]).collect()
}

/// Apply (1 − L^lag)^order to the series.
///
/// Output length is T − lag·order; the returned spec inverts the
/// operation exactly via [`integrate`].
pub fn difference(y: &TimeSeries, lag: usize, order: usize) -> Result<(TimeSeries, DifferenceSpec)> {
    if lag == 0 {
        return Err(Error::SpecMismatch("difference lag must be >= 1".into()));
    }
    if y.len() <= lag * order {
        return Err(Error::SeriesTooShort {
            needed: lag * order + 1,
            have: y.len(),
        });
    }
    let mut current = y.values().to_vec();
    let mut initials = Vec::with_capacity(order);
    for _ in 0..order {
        initials.push(current[..lag].to_vec());
        current = diff_once(&current, lag);
    }
    let spec = DifferenceSpec {
        lag,
        order,
        initials,
    };
    Ok((y.with_values(current), spec))
}

/// Exact inverse of [`difference`].
pub fn integrate(z: &TimeSeries, spec: &DifferenceSpec) -> Result<TimeSeries> {
    let mut current = z.values().to_vec();
    for initials in spec.initials.iter().rev() {
        if initials.len() != spec.lag {
            return Err(Error::SpecMismatch(format!(
                "initials block of {} values does not match lag {}",
                initials.len(),
                spec.lag
            )));
        }
        let mut rebuilt = Vec::with_capacity(current.len() + spec.lag);
        rebuilt.extend_from_slice(initials);
        for (t, &v) in current.iter().enumerate() {
            let prev = rebuilt[t];
            rebuilt.push(prev + v);
        }
        current = rebuilt;
    }
    Ok(z.with_values(current))
}

/// Differencing provenance for a SARIMA model: seasonal pass (1 − L^s)^D
/// applied first, then the regular pass (1 − L)^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaDiffSpec {
    pub seasonal: Option<DifferenceSpec>,
    pub regular: Option<DifferenceSpec>,
}

/// Apply (1 − L)^d (1 − L^s)^D, seasonal pass first.
pub fn difference_sarima(
    y: &TimeSeries,
    d: usize,
    seasonal_d: usize,
    period: usize,
) -> Result<(TimeSeries, SarimaDiffSpec)> {
    let mut spec = SarimaDiffSpec {
        seasonal: None,
        regular: None,
    };
    let mut current = y.clone();
    if seasonal_d > 0 {
        let (z, s) = difference(&current, period, seasonal_d)?;
        current = z;
        spec.seasonal = Some(s);
    }
    if d > 0 {
        let (z, s) = difference(&current, 1, d)?;
        current = z;
        spec.regular = Some(s);
    }
    Ok((current, spec))
}

/// Exact inverse of [`difference_sarima`].
pub fn integrate_sarima(z: &TimeSeries, spec: &SarimaDiffSpec) -> Result<TimeSeries> {
    let mut current = z.clone();
    if let Some(regular) = &spec.regular {
        current = integrate(&current, regular)?;
    }
    if let Some(seasonal) = &spec.seasonal {
        current = integrate(&current, seasonal)?;
    }
    Ok(current)
}
