//! Conditional-sum-of-squares estimation of SARIMA coefficients.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diff::difference_sarima;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

use super::order::{
    check_feasibility, full_ma_polynomial, poly_mul, SarimaCoefficients, SarimaOrder,
};
use super::simplex::nelder_mead;

/// Margin used by the stationarity/invertibility barrier: candidate
/// points whose polynomial roots have modulus <= this are rejected.
const ROOT_MARGIN: f64 = 1.001;

/// A fitted SARIMA model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModel {
    pub order: SarimaOrder,
    pub coeffs: SarimaCoefficients,
    /// Gaussian log-likelihood implied by the CSS residual variance.
    pub log_likelihood: f64,
    /// One-step in-sample errors on the differenced scale, aligned to
    /// the end of the training series.
    pub residuals: TimeSeries,
    pub train_length: usize,
    /// False when the simplex search hit its iteration cap without
    /// meeting the tolerance; the best point found is still reported.
    pub converged: bool,
    pub include_intercept: bool,
}

impl FittedModel {
    /// Number of estimated parameters: ARMA coefficients, optional
    /// intercept, plus the innovation variance.
    pub fn param_count(&self) -> usize {
        self.order.arma_params() + usize::from(self.include_intercept) + 1
    }

    /// Effective sample size: the number of CSS residuals.
    pub fn effective_n(&self) -> usize {
        self.residuals.len()
    }
}

/// Largest inverse-root modulus of 1 - c_1 z - ... - c_p z^p.
///
/// Stationarity (all roots outside the unit circle) is equivalent to
/// this value being below 1.
pub(crate) fn max_inverse_root_modulus(ar_form_coeffs: &[f64]) -> f64 {
    let mut coeffs = ar_form_coeffs.to_vec();
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    let p = coeffs.len();
    if p == 0 {
        return 0.0;
    }
    if p == 1 {
        return coeffs[0].abs();
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, &c) in coeffs.iter().enumerate() {
        companion[(0, j)] = c;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max)
}

/// Inverse roots of 1 - c_1 z - ... - c_p z^p (exact trailing zeros
/// trimmed so padded orders do not fabricate roots at the origin).
fn inverse_roots(ar_form_coeffs: &[f64]) -> Vec<nalgebra::Complex<f64>> {
    let mut coeffs = ar_form_coeffs.to_vec();
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    let p = coeffs.len();
    if p == 0 {
        return vec![];
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, &c) in coeffs.iter().enumerate() {
        companion[(0, j)] = c;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion.complex_eigenvalues().iter().copied().collect()
}

/// AR and MA factors sharing a root are unidentified: the factors cancel
/// and the surplus parameters are free to chase noise. Candidate points
/// whose AR and MA polynomials have inverse roots within this distance
/// of each other (at non-negligible modulus) are rejected.
const COMMON_ROOT_TOL: f64 = 0.15;

fn has_near_common_factor(ar: &[f64], ma_as_ar: &[f64]) -> bool {
    if ar.is_empty() || ma_as_ar.is_empty() {
        return false;
    }
    let ar_roots = inverse_roots(ar);
    let ma_roots = inverse_roots(ma_as_ar);
    for a in &ar_roots {
        if a.norm() <= 0.1 {
            continue;
        }
        for m in &ma_roots {
            if m.norm() <= 0.1 {
                continue;
            }
            if (a - m).norm() < COMMON_ROOT_TOL {
                return true;
            }
        }
    }
    false
}

fn barrier_ok(coeffs: &SarimaCoefficients) -> bool {
    let limit = 1.0 / ROOT_MARGIN;
    let ma_as_ar = |ma: &[f64]| ma.iter().map(|c| -c).collect::<Vec<_>>();
    let ma = ma_as_ar(&coeffs.ma);
    let seasonal_ma = ma_as_ar(&coeffs.seasonal_ma);
    max_inverse_root_modulus(&coeffs.ar) < limit
        && max_inverse_root_modulus(&coeffs.seasonal_ar) < limit
        && max_inverse_root_modulus(&ma) < limit
        && max_inverse_root_modulus(&seasonal_ma) < limit
        && !has_near_common_factor(&coeffs.ar, &ma)
        && !has_near_common_factor(&coeffs.seasonal_ar, &seasonal_ma)
}

/// Sparse (lag, weight) pairs of the ARMA recursion on the differenced
/// series: z_t = sum ar_w * z_{t-k} + eps_t + sum ma_w * eps_{t-k}.
struct Recursion {
    ar: Vec<(usize, f64)>,
    ma: Vec<(usize, f64)>,
}

fn build_recursion(order: &SarimaOrder, coeffs: &SarimaCoefficients) -> Recursion {
    let ar_poly = poly_mul(
        &super::order::ar_polynomial(&coeffs.seasonal_ar, order.s),
        &super::order::ar_polynomial(&coeffs.ar, 1),
    );
    let ma_poly = full_ma_polynomial(order, coeffs);
    let ar = ar_poly
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c != 0.0)
        .map(|(k, &c)| (k, -c))
        .collect();
    let ma = ma_poly
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c != 0.0)
        .map(|(k, &c)| (k, c))
        .collect();
    Recursion { ar, ma }
}

/// One-step residuals of the ARMA recursion, conditioning on the first
/// `start` points (their residuals are fixed at zero).
fn css_residuals(
    z: &[f64],
    order: &SarimaOrder,
    coeffs: &SarimaCoefficients,
    start: usize,
) -> Option<Vec<f64>> {
    let rec = build_recursion(order, coeffs);
    let mu = coeffs.intercept;
    let n = z.len();
    let mut eps = vec![0.0; n];
    for t in start..n {
        let mut pred = mu;
        for &(k, w) in &rec.ar {
            pred += w * (z[t - k] - mu);
        }
        for &(k, w) in &rec.ma {
            if t >= k && t - k >= start {
                pred += w * eps[t - k];
            }
        }
        let e = z[t] - pred;
        if !e.is_finite() {
            return None;
        }
        eps[t] = e;
    }
    Some(eps[start..].to_vec())
}

fn unpack(params: &[f64], order: &SarimaOrder, include_intercept: bool) -> SarimaCoefficients {
    let (p, q, sp, sq) = (order.p, order.q, order.sp, order.sq);
    let mut at = 0;
    let take = |at: &mut usize, n: usize| {
        let out = params[*at..*at + n].to_vec();
        *at += n;
        out
    };
    let ar = take(&mut at, p);
    let ma = take(&mut at, q);
    let seasonal_ar = take(&mut at, sp);
    let seasonal_ma = take(&mut at, sq);
    let intercept = if include_intercept { params[at] } else { 0.0 };
    SarimaCoefficients {
        ar,
        ma,
        seasonal_ar,
        seasonal_ma,
        intercept,
        sigma2: 1.0,
    }
}

/// Starting coefficient vectors for the multi-start search: every
/// coefficient at 0, at +0.1, and at -0.1.
fn coefficient_starts(k: usize) -> Vec<Vec<f64>> {
    if k == 0 {
        return vec![vec![]];
    }
    vec![vec![0.0; k], vec![0.1; k], vec![-0.1; k]]
}

/// Fit a SARIMA model by minimizing the conditional sum of squares on
/// the fully differenced series, conditioning on the model's own first
/// max(p + Ps, q + Qs) points.
///
/// The reported log-likelihood is the Gaussian value implied by the CSS
/// residual variance; it is comparable only across models with the same
/// differencing orders and the same conditioning window.
pub fn fit(y: &TimeSeries, order: &SarimaOrder, include_intercept: bool) -> Result<FittedModel> {
    fit_conditioned(y, order, include_intercept, 0)
}

/// [`fit`] with the conditioning window widened to at least
/// `min_conditioning` points. The automatic search fits every candidate
/// with one shared window so their likelihoods cover the same
/// observations and the information criteria stay comparable.
pub(crate) fn fit_conditioned(
    y: &TimeSeries,
    order: &SarimaOrder,
    include_intercept: bool,
    min_conditioning: usize,
) -> Result<FittedModel> {
    let len = y.len();
    let report = check_feasibility(order, len);
    if !report.feasible_for_fit {
        return Err(Error::InfeasibleOrder {
            order: order.to_string(),
            length: len,
            required: report
                .required_fit_length
                .max(report.max_ma_lag + order.s),
        });
    }
    let (z_series, _) = difference_sarima(y, order.d, order.sd, order.s)?;
    let z = z_series.values().to_vec();
    let n = z.len();
    let start = (order.p + order.sp * order.s)
        .max(order.q + order.sq * order.s)
        .max(min_conditioning);
    if n <= start {
        return Err(Error::InfeasibleOrder {
            order: order.to_string(),
            length: len,
            required: report.required_fit_length + start.saturating_sub(n) + 1,
        });
    }
    let n_resid = n - start;

    let (z_min, z_max) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let scale = z_min.abs().max(z_max.abs()).max(1.0);
    if z_max - z_min <= 1e-12 * scale {
        return Err(Error::DegenerateSeries);
    }

    let z_mean = z.iter().sum::<f64>() / n as f64;
    let z_sd = (z.iter().map(|v| (v - z_mean) * (v - z_mean)).sum::<f64>() / n as f64).sqrt();

    let k_coef = order.arma_params();
    let dim = k_coef + usize::from(include_intercept);

    let (best_params, converged) = if dim == 0 {
        (vec![], true)
    } else if k_coef == 0 {
        // intercept only: the CSS minimizer is the sample mean
        (vec![z_mean], true)
    } else {
        let objective = |params: &[f64]| -> f64 {
            let c = unpack(params, order, include_intercept);
            if !barrier_ok(&c) {
                return f64::INFINITY;
            }
            match css_residuals(&z, order, &c, start) {
                Some(eps) => eps.iter().map(|e| e * e).sum(),
                None => f64::INFINITY,
            }
        };
        let mut steps = vec![0.1; dim];
        if include_intercept {
            steps[dim - 1] = 0.1 * z_sd.max(1e-6);
        }
        let max_iter = 400 * dim;
        let mut best: Option<(Vec<f64>, f64, bool)> = None;
        for coef_start in coefficient_starts(k_coef) {
            let mut start_point = coef_start;
            if include_intercept {
                start_point.push(z_mean);
            }
            let r = nelder_mead(|x| objective(x), &start_point, &steps, max_iter, 1e-10);
            let better = match &best {
                Some((_, v, _)) => r.value < *v,
                None => true,
            };
            if better {
                best = Some((r.point, r.value, r.converged));
            }
        }
        let (point, value, conv) = best.expect("at least one start");
        if !value.is_finite() {
            return Err(Error::InvalidCoefficients(format!(
                "no stationary/invertible point found for order {order}"
            )));
        }
        (point, conv)
    };

    let mut coeffs = unpack(&best_params, order, include_intercept);
    let eps = css_residuals(&z, order, &coeffs, start)
        .ok_or_else(|| Error::InvalidCoefficients("residual recursion diverged".into()))?;
    let ssr: f64 = eps.iter().map(|e| e * e).sum();
    let sigma2 = (ssr / n_resid as f64).max(f64::MIN_POSITIVE);
    coeffs.sigma2 = sigma2;
    let nf = n_resid as f64;
    let log_likelihood = -0.5 * nf * (1.0 + (2.0 * std::f64::consts::PI).ln() + sigma2.ln());

    let residual_start = y.start() + y.len() - n_resid;
    let residuals = TimeSeries::with_start(eps, y.period(), residual_start)?;

    Ok(FittedModel {
        order: *order,
        coeffs,
        log_likelihood,
        residuals,
        train_length: len,
        converged,
        include_intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sarima::simulate::simulate;

    #[test]
    fn root_modulus_checks() {
        // AR(1) with phi = 0.5: inverse root 0.5
        assert!((max_inverse_root_modulus(&[0.5]) - 0.5).abs() < 1e-12);
        // AR(2) phi = (0.75, -0.125): roots 2 and 4, inverse moduli 0.5, 0.25
        let m = max_inverse_root_modulus(&[0.75, -0.125]);
        assert!((m - 0.5).abs() < 1e-9, "m = {m}");
        // unit root
        assert!(max_inverse_root_modulus(&[1.0]) >= 1.0 - 1e-12);
    }

    #[test]
    fn white_noise_mean_and_variance() {
        let order = SarimaOrder::non_seasonal(0, 0, 0);
        let coeffs = SarimaCoefficients {
            intercept: 100.0,
            sigma2: 1.0,
            ..SarimaCoefficients::zeros(&order)
        };
        let y = simulate(&order, &coeffs, 200, 424242).unwrap();
        let model = fit(&y, &order, true).unwrap();
        let sample_mean = y.mean();
        let sample_var = {
            let m = sample_mean;
            y.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64
        };
        assert!(
            (model.coeffs.intercept - sample_mean).abs() <= 0.2,
            "intercept {} vs mean {}",
            model.coeffs.intercept,
            sample_mean
        );
        assert!(
            (model.coeffs.sigma2 - sample_var).abs() <= 0.15 * sample_var,
            "sigma2 {} vs var {}",
            model.coeffs.sigma2,
            sample_var
        );
    }

    #[test]
    fn infeasible_order_rejected() {
        let y = TimeSeries::new(vec![1.0; 60], 52).unwrap();
        let order = SarimaOrder::new(0, 0, 0, 0, 1, 0, 52).unwrap();
        assert!(matches!(
            fit(&y, &order, false),
            Err(Error::InfeasibleOrder { .. })
        ));
    }

    #[test]
    fn constant_series_degenerate() {
        let y = TimeSeries::new(vec![5.0; 40], 1).unwrap();
        let order = SarimaOrder::non_seasonal(1, 0, 0);
        assert!(matches!(fit(&y, &order, true), Err(Error::DegenerateSeries)));
    }

    #[test]
    fn residuals_aligned_to_training_end() {
        let order = SarimaOrder::non_seasonal(1, 0, 0);
        let coeffs = SarimaCoefficients {
            ar: vec![0.5],
            sigma2: 1.0,
            ..SarimaCoefficients::zeros(&order)
        };
        let y = simulate(&order, &coeffs, 120, 7).unwrap();
        let model = fit(&y, &order, false).unwrap();
        assert_eq!(model.effective_n(), 119);
        assert_eq!(model.residuals.start() + model.effective_n(), 120);
    }
}
