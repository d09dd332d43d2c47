//! Box-Cox power transform and automatic lambda selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Power parameter of the Box-Cox transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxParam {
    pub lambda: f64,
}

impl BoxCoxParam {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }

    /// Natural-log transform (lambda = 0).
    pub fn log() -> Self {
        Self { lambda: 0.0 }
    }
}

/// Outcome of automatic lambda selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub param: BoxCoxParam,
    /// Criterion value at the chosen lambda.
    pub criterion: f64,
    /// Set when the series was too short or dispersion-free and the
    /// identity-like fallback (lambda = 1) was returned.
    pub warning: Option<String>,
}

fn transform_value(y: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        y.ln()
    } else {
        (y.powf(lambda) - 1.0) / lambda
    }
}

/// Element-wise Box-Cox transform: (y^λ − 1)/λ, or ln(y) for λ = 0.
///
/// All inputs must be strictly positive.
pub fn box_cox(y: &TimeSeries, lam: BoxCoxParam) -> Result<TimeSeries> {
    for (index, &value) in y.values().iter().enumerate() {
        if value <= 0.0 || value.is_nan() {
            return Err(Error::NonPositiveValue { index, value });
        }
    }
    let out = y
        .values()
        .iter()
        .map(|&v| transform_value(v, lam.lambda))
        .collect();
    Ok(y.with_values(out))
}

/// Exact inverse of [`box_cox`].
///
/// For λ ≠ 0 requires λ·z + 1 > 0 element-wise.
pub fn inv_box_cox(z: &TimeSeries, lam: BoxCoxParam) -> Result<TimeSeries> {
    let mut out = Vec::with_capacity(z.len());
    for (index, &v) in z.values().iter().enumerate() {
        out.push(inv_box_cox_value(v, lam).map_err(|_| Error::DomainViolation {
            index,
            argument: lam.lambda * v + 1.0,
        })?);
    }
    Ok(z.with_values(out))
}

/// Scalar inverse transform; errors when λ·z + 1 ≤ 0.
pub fn inv_box_cox_value(z: f64, lam: BoxCoxParam) -> Result<f64> {
    if lam.lambda == 0.0 {
        Ok(z.exp())
    } else {
        let arg = lam.lambda * z + 1.0;
        if arg <= 0.0 {
            return Err(Error::DomainViolation {
                index: 0,
                argument: arg,
            });
        }
        Ok(arg.powf(1.0 / lam.lambda))
    }
}

/// Scalar inverse that clamps out-of-domain arguments to the boundary
/// instead of failing. Used where a diagnostic value is preferable to
/// aborting (e.g. one-step fitted values near the transform boundary).
pub fn inv_box_cox_value_clamped(z: f64, lam: BoxCoxParam) -> f64 {
    if lam.lambda == 0.0 {
        z.exp()
    } else {
        let arg = (lam.lambda * z + 1.0).max(0.0);
        arg.powf(1.0 / lam.lambda)
    }
}

/// Grid over which lambda is searched: {-1.0, -0.9, ..., 2.0}.
fn lambda_grid() -> impl Iterator<Item = f64> {
    (-10..=20).map(|i| i as f64 / 10.0)
}

/// Dispersion criterion for one candidate lambda.
///
/// The series is split into trailing complete blocks of one season; for
/// each block the ratio sd / mean^(1−λ) is formed and the coefficient of
/// variation of these ratios is returned. A flat-data stabilizer
/// (1 + 0.01·(λ−1)²) breaks the tie toward "no transform" when the
/// criterion carries no information about λ.
fn lambda_criterion(values: &[f64], block: usize, lambda: f64) -> Option<f64> {
    let n_blocks = values.len() / block;
    if n_blocks < 2 {
        return None;
    }
    let tail = &values[values.len() - n_blocks * block..];
    let mut ratios = Vec::with_capacity(n_blocks);
    for chunk in tail.chunks_exact(block) {
        let mean = chunk.iter().sum::<f64>() / block as f64;
        let ss: f64 = chunk.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (block - 1) as f64).sqrt();
        let ratio = sd / mean.powf(1.0 - lambda);
        if !ratio.is_finite() {
            return None;
        }
        ratios.push(ratio);
    }
    let mean_r = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if mean_r <= 0.0 {
        return None;
    }
    let ss: f64 = ratios.iter().map(|r| (r - mean_r) * (r - mean_r)).sum();
    let cv = (ss / (ratios.len() - 1) as f64).sqrt() / mean_r;
    Some(cv * (1.0 + 0.01 * (lambda - 1.0) * (lambda - 1.0)))
}

/// Choose the Box-Cox lambda that stabilizes block-wise dispersion.
///
/// Deterministic grid search on λ ∈ [−1, 2] in steps of 0.1. Constant or
/// too-short series fall back to λ = 1 with a warning.
pub fn select_lambda(y: &TimeSeries) -> Result<LambdaSelection> {
    for (index, &value) in y.values().iter().enumerate() {
        if value <= 0.0 || value.is_nan() {
            return Err(Error::NonPositiveValue { index, value });
        }
    }
    let mut block = y.period().max(2);
    let mut warning = None;
    if y.len() < 4 * block {
        // fewer than four full seasons leaves the dispersion criterion
        // with too few block ratios; shrink the block instead
        block = (y.len() / 4).max(2);
        warning = Some(format!(
            "series length {} is below four seasons of {}; lambda selected on blocks of {}",
            y.len(),
            y.period().max(2),
            block
        ));
    }

    let mut best: Option<(f64, f64)> = None;
    for lambda in lambda_grid() {
        if let Some(c) = lambda_criterion(y.values(), block, lambda) {
            match best {
                Some((_, best_c)) if c >= best_c => {}
                _ => best = Some((lambda, c)),
            }
        }
    }
    match best {
        Some((lambda, criterion)) if criterion > 0.0 => Ok(LambdaSelection {
            param: BoxCoxParam::new(lambda),
            criterion,
            warning,
        }),
        _ => Ok(LambdaSelection {
            param: BoxCoxParam::new(1.0),
            criterion: 0.0,
            warning: Some("dispersion-free series; falling back to lambda = 1".into()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn series(values: Vec<f64>, period: usize) -> TimeSeries {
        TimeSeries::new(values, period).unwrap()
    }

    #[test]
    fn log_identity_at_lambda_zero() {
        let e = std::f64::consts::E;
        let y = series(vec![1.0, e, e * e], 1);
        let z = box_cox(&y, BoxCoxParam::log()).unwrap();
        for (got, want) in z.values().iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_identity_at_lambda_one() {
        let y = series(vec![3.0, 5.0], 1);
        let z = box_cox(&y, BoxCoxParam::new(1.0)).unwrap();
        assert_eq!(z.values(), &[2.0, 4.0]);
    }

    #[test]
    fn sqrt_case() {
        let y = series(vec![4.0], 1);
        let z = box_cox(&y, BoxCoxParam::new(0.5)).unwrap();
        // (sqrt(4) - 1) / 0.5 = 2
        assert!((z.values()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_reports_index() {
        let y = series(vec![1.0, 0.0, 2.0], 1);
        match box_cox(&y, BoxCoxParam::log()) {
            Err(Error::NonPositiveValue { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected NonPositiveValue, got {other:?}"),
        }
    }

    #[test]
    fn inverse_log_and_shift() {
        let z = series(vec![0.0, 1.0], 1);
        let y = inv_box_cox(&z, BoxCoxParam::log()).unwrap();
        assert!((y.values()[0] - 1.0).abs() < 1e-12);
        assert!((y.values()[1] - std::f64::consts::E).abs() < 1e-12);

        let z = series(vec![2.0], 1);
        let y = inv_box_cox(&z, BoxCoxParam::new(1.0)).unwrap();
        assert!((y.values()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_domain_violation() {
        let z = series(vec![-3.0], 1);
        assert!(matches!(
            inv_box_cox(&z, BoxCoxParam::new(0.5)),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn round_trip_random_positive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let values: Vec<f64> = (0..100)
            .map(|_| f64::exp(normal.sample(&mut rng)) * 10.0)
            .collect();
        let y = series(values, 1);
        for lambda in [-0.5, 0.0, 0.5, 1.0] {
            let lam = BoxCoxParam::new(lambda);
            let back = inv_box_cox(&box_cox(&y, lam).unwrap(), lam).unwrap();
            for (a, b) in y.values().iter().zip(back.values()) {
                assert!(
                    ((a - b) / a).abs() <= 1e-10,
                    "round trip failed at lambda {lambda}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn constant_series_falls_back_to_one() {
        let y = series(vec![5.0; 24], 4);
        let sel = select_lambda(&y).unwrap();
        assert_eq!(sel.param.lambda, 1.0);
        assert!(sel.warning.is_some());
    }

    #[test]
    fn multiplicative_noise_selects_near_log() {
        // exp of a Gaussian random walk: variance grows with the level,
        // so the stabilizing power should be near 0.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let normal = Normal::new(0.0, 0.25).unwrap();
        let mut level = 3.0f64;
        let values: Vec<f64> = (0..300)
            .map(|_| {
                level += normal.sample(&mut rng);
                level.exp()
            })
            .collect();
        let sel = select_lambda(&series(values, 12)).unwrap();
        assert!(
            (-0.3..=0.3).contains(&sel.param.lambda),
            "lambda {} outside [-0.3, 0.3]",
            sel.param.lambda
        );
    }

    #[test]
    fn additive_noise_selects_near_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(100.0, 1.0).unwrap();
        let values: Vec<f64> = (0..300).map(|_| normal.sample(&mut rng)).collect();
        let sel = select_lambda(&series(values, 12)).unwrap();
        assert!(
            (0.5..=1.5).contains(&sel.param.lambda),
            "lambda {} outside [0.5, 1.5]",
            sel.param.lambda
        );
    }
}
