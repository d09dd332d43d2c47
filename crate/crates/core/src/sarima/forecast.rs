//! Iterated conditional-expectation forecasts.

use crate::error::{Error, Result};
use crate::series::TimeSeries;

use super::estimate::FittedModel;
use super::order::{check_feasibility, expand_ar_recursion, full_ma_polynomial};

/// h-step-ahead point forecasts on the modeling scale.
///
/// Future innovations are set to zero; past innovations are read from
/// the model residuals, aligned to the end of `history`. The AR
/// recursion uses the expanded lag weights, so differencing is handled
/// implicitly.
pub fn forecast(model: &FittedModel, history: &TimeSeries, h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Ok(vec![]);
    }
    let order = &model.order;
    let report = check_feasibility(order, history.len());
    if !report.feasible_for_forecast {
        return Err(Error::InfeasibleOrder {
            order: order.to_string(),
            length: history.len(),
            required: report.required_forecast_length.max(report.max_ma_lag),
        });
    }

    let ar_weights: Vec<(usize, f64)> = expand_ar_recursion(order, &model.coeffs)
        .into_iter()
        .collect();
    let ma_weights: Vec<(usize, f64)> = full_ma_polynomial(order, &model.coeffs)
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c != 0.0)
        .map(|(k, &c)| (k, c))
        .collect();

    // constant term: a(1) * mu with a the stationary AR polynomial
    let ar_sum: f64 = model.coeffs.ar.iter().sum();
    let sar_sum: f64 = model.coeffs.seasonal_ar.iter().sum();
    let constant = model.coeffs.intercept * (1.0 - ar_sum) * (1.0 - sar_sum);

    let t_end = history.len();
    let n_resid = model.residuals.len();
    let residual_at = |t: isize| -> f64 {
        // residuals cover history indices [t_end - n_resid, t_end)
        if t < 0 || t >= t_end as isize {
            return 0.0;
        }
        let offset = t - (t_end as isize - n_resid as isize);
        if offset < 0 {
            0.0
        } else {
            model.residuals.values()[offset as usize]
        }
    };

    let mut extended = history.values().to_vec();
    for step in 0..h {
        let t = t_end + step;
        let mut value = constant;
        for &(k, w) in &ar_weights {
            value += w * extended[t - k];
        }
        for &(k, w) in &ma_weights {
            let src = t as isize - k as isize;
            if src < t_end as isize {
                value += w * residual_at(src);
            }
        }
        extended.push(value);
    }
    Ok(extended[t_end..].to_vec())
}
