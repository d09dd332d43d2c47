//! Seeded SARIMA simulation, used as the estimation and selection oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::diff::{DifferenceSpec, SarimaDiffSpec};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

use super::estimate::max_inverse_root_modulus;
use super::order::{ar_polynomial, ma_polynomial, poly_mul, SarimaCoefficients, SarimaOrder};

/// Simulate `length` observations with zero pre-sample values.
pub fn simulate(
    order: &SarimaOrder,
    coeffs: &SarimaCoefficients,
    length: usize,
    seed: u64,
) -> Result<TimeSeries> {
    simulate_with_initials(order, coeffs, length, seed, None)
}

/// Simulate with an explicit pre-sample prefix of d + D*s observations
/// that seeds the integration of the differencing operators. The prefix
/// becomes the first observations of the output.
pub fn simulate_with_initials(
    order: &SarimaOrder,
    coeffs: &SarimaCoefficients,
    length: usize,
    seed: u64,
    initial: Option<&[f64]>,
) -> Result<TimeSeries> {
    validate(order, coeffs)?;
    let prefix_len = order.d + order.sd * order.s;
    let prefix: Vec<f64> = match initial {
        Some(values) => {
            if values.len() != prefix_len {
                return Err(Error::SpecMismatch(format!(
                    "initial prefix must have d + D*s = {prefix_len} values, got {}",
                    values.len()
                )));
            }
            values.to_vec()
        }
        None => vec![0.0; prefix_len],
    };
    if length <= prefix_len {
        return Err(Error::SeriesTooShort {
            needed: prefix_len + 1,
            have: length,
        });
    }
    let n_core = length - prefix_len;

    let ar_lag = order.p + order.sp * order.s;
    let ma_lag = order.q + order.sq * order.s;
    let burn = 100 + 5 * (ar_lag + ma_lag);

    let ar_poly = poly_mul(
        &ar_polynomial(&coeffs.seasonal_ar, order.s),
        &ar_polynomial(&coeffs.ar, 1),
    );
    let ma_poly = poly_mul(
        &ma_polynomial(&coeffs.seasonal_ma, order.s),
        &ma_polynomial(&coeffs.ma, 1),
    );
    let ar_w: Vec<(usize, f64)> = ar_poly
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c != 0.0)
        .map(|(k, &c)| (k, -c))
        .collect();
    let ma_w: Vec<(usize, f64)> = ma_poly
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c != 0.0)
        .map(|(k, &c)| (k, c))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, coeffs.sigma2.sqrt())
        .map_err(|e| Error::InvalidCoefficients(e.to_string()))?;

    let total = burn + n_core;
    let mut eps = Vec::with_capacity(total);
    let mut w = Vec::with_capacity(total);
    let mu = coeffs.intercept;
    for t in 0..total {
        let e: f64 = normal.sample(&mut rng);
        let mut value = mu + e;
        for &(k, wt) in &ar_w {
            if t >= k {
                value += wt * (w[t - k] - mu);
            }
        }
        for &(k, wt) in &ma_w {
            if t >= k {
                value += wt * eps[t - k];
            }
        }
        eps.push(e);
        w.push(value);
    }
    let core = &w[burn..];

    if prefix_len == 0 {
        return TimeSeries::new(core.to_vec(), order.s);
    }

    // build integration initials by cascading differences of the prefix
    let diff_once = |values: &[f64], lag: usize| -> Vec<f64> {
        (lag..values.len()).map(|t| values[t] - values[t - lag]).collect()
    };
    let mut current = prefix.clone();
    let mut seasonal_initials = Vec::new();
    for _ in 0..order.sd {
        seasonal_initials.push(current[..order.s].to_vec());
        current = diff_once(&current, order.s);
    }
    let mut regular_initials = Vec::new();
    for _ in 0..order.d {
        regular_initials.push(current[..1].to_vec());
        current = diff_once(&current, 1);
    }
    let seasonal = (order.sd > 0).then_some(DifferenceSpec {
        lag: order.s,
        order: order.sd,
        initials: seasonal_initials,
    });
    let regular = (order.d > 0).then_some(DifferenceSpec {
        lag: 1,
        order: order.d,
        initials: regular_initials,
    });
    let spec = SarimaDiffSpec { seasonal, regular };
    let z = TimeSeries::new(core.to_vec(), order.s)?;
    crate::diff::integrate_sarima(&z, &spec)
}

fn validate(order: &SarimaOrder, coeffs: &SarimaCoefficients) -> Result<()> {
    if coeffs.ar.len() != order.p
        || coeffs.ma.len() != order.q
        || coeffs.seasonal_ar.len() != order.sp
        || coeffs.seasonal_ma.len() != order.sq
    {
        return Err(Error::InvalidCoefficients(
            "coefficient counts do not match the order".into(),
        ));
    }
    if coeffs.sigma2 < 0.0 || coeffs.sigma2.is_nan() {
        return Err(Error::InvalidCoefficients("sigma2 must be >= 0".into()));
    }
    let ma_as_ar = |ma: &[f64]| ma.iter().map(|c| -c).collect::<Vec<_>>();
    if max_inverse_root_modulus(&coeffs.ar) >= 1.0
        || max_inverse_root_modulus(&coeffs.seasonal_ar) >= 1.0
        || max_inverse_root_modulus(&ma_as_ar(&coeffs.ma)) >= 1.0
        || max_inverse_root_modulus(&ma_as_ar(&coeffs.seasonal_ma)) >= 1.0
    {
        return Err(Error::InvalidCoefficients(
            "polynomial roots must lie outside the unit circle".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acf::acf;

    #[test]
    fn same_seed_is_deterministic() {
        let order = SarimaOrder::new(1, 0, 1, 0, 1, 0, 12).unwrap();
        let coeffs = SarimaCoefficients {
            ar: vec![0.4],
            ma: vec![0.3],
            sigma2: 2.0,
            ..SarimaCoefficients::zeros(&order)
        };
        let a = simulate(&order, &coeffs, 100, 5).unwrap();
        let b = simulate(&order, &coeffs, 100, 5).unwrap();
        assert_eq!(a.values(), b.values());
        let c = simulate(&order, &coeffs, 100, 6).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn near_zero_noise_repeats_seasonal_pattern() {
        let order = SarimaOrder::new(0, 0, 0, 0, 1, 0, 4).unwrap();
        let coeffs = SarimaCoefficients {
            sigma2: 1e-24,
            ..SarimaCoefficients::zeros(&order)
        };
        let pattern = [3.0, 7.0, 1.0, 9.0];
        let y = simulate_with_initials(&order, &coeffs, 20, 1, Some(&pattern)).unwrap();
        for (t, &v) in y.values().iter().enumerate() {
            assert!(
                (v - pattern[t % 4]).abs() < 1e-6,
                "t={t}: {v} vs {}",
                pattern[t % 4]
            );
        }
    }

    #[test]
    fn ma1_sample_acf_matches_closed_form() {
        let order = SarimaOrder::non_seasonal(0, 0, 1);
        let coeffs = SarimaCoefficients {
            ma: vec![0.6],
            sigma2: 1.0,
            ..SarimaCoefficients::zeros(&order)
        };
        let y = simulate(&order, &coeffs, 20000, 12345).unwrap();
        let r = acf(&y, 2).unwrap();
        assert!(
            (r[1] - 0.4412).abs() <= 0.02,
            "acf[1] = {} vs 0.4412",
            r[1]
        );
    }

    #[test]
    fn explosive_coefficients_rejected() {
        let order = SarimaOrder::non_seasonal(1, 0, 0);
        let coeffs = SarimaCoefficients {
            ar: vec![1.05],
            sigma2: 1.0,
            ..SarimaCoefficients::zeros(&order)
        };
        assert!(matches!(
            simulate(&order, &coeffs, 50, 0),
            Err(Error::InvalidCoefficients(_))
        ));
    }
}
