//! SARIMA order representation, feasibility restrictions, and the
//! expansion of the autoregressive side into explicit lag weights.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A (p,d,q)(P,D,Q)^s model order. `sp`, `sd`, `sq` are the seasonal
/// AR, differencing, and MA orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SarimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub sp: usize,
    pub sd: usize,
    pub sq: usize,
    pub s: usize,
}

impl SarimaOrder {
    pub fn new(
        p: usize,
        d: usize,
        q: usize,
        sp: usize,
        sd: usize,
        sq: usize,
        s: usize,
    ) -> Result<Self> {
        if s == 0 {
            return Err(Error::SpecMismatch("seasonal period must be >= 1".into()));
        }
        if s == 1 && (sp > 0 || sd > 0 || sq > 0) {
            return Err(Error::SpecMismatch(
                "seasonal orders require a period greater than 1".into(),
            ));
        }
        Ok(Self {
            p,
            d,
            q,
            sp,
            sd,
            sq,
            s,
        })
    }

    /// Non-seasonal (p,d,q) order.
    pub fn non_seasonal(p: usize, d: usize, q: usize) -> Self {
        Self {
            p,
            d,
            q,
            sp: 0,
            sd: 0,
            sq: 0,
            s: 1,
        }
    }

    /// Number of estimated ARMA coefficients (excluding intercept and variance).
    pub fn arma_params(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }

    /// Largest lag of past observations entering the AR recursion,
    /// including the differencing operators: (D+P)s + p + d.
    pub fn max_ar_lag(&self) -> usize {
        (self.sd + self.sp) * self.s + self.p + self.d
    }

    /// Largest lag of past innovations on the MA side: Qs + q.
    pub fn max_ma_lag(&self) -> usize {
        self.sq * self.s + self.q
    }
}

impl fmt::Display for SarimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{})^{}",
            self.p, self.d, self.q, self.sp, self.sd, self.sq, self.s
        )
    }
}

/// Fitted SARIMA coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaCoefficients {
    /// Non-seasonal AR coefficients (phi).
    pub ar: Vec<f64>,
    /// Non-seasonal MA coefficients (theta).
    pub ma: Vec<f64>,
    /// Seasonal AR coefficients.
    pub seasonal_ar: Vec<f64>,
    /// Seasonal MA coefficients.
    pub seasonal_ma: Vec<f64>,
    /// Mean of the differenced series (0 when no intercept is estimated).
    pub intercept: f64,
    /// Innovation variance.
    pub sigma2: f64,
}

impl SarimaCoefficients {
    pub fn zeros(order: &SarimaOrder) -> Self {
        Self {
            ar: vec![0.0; order.p],
            ma: vec![0.0; order.q],
            seasonal_ar: vec![0.0; order.sp],
            seasonal_ma: vec![0.0; order.sq],
            intercept: 0.0,
            sigma2: 1.0,
        }
    }
}

/// Outcome of the training-length feasibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible_for_fit: bool,
    pub feasible_for_forecast: bool,
    /// AR-side requirement for fitting: (D+P+1)s + p + d.
    pub required_fit_length: usize,
    /// AR-side requirement for forecasting: (D+P)s + p + d.
    pub required_forecast_length: usize,
    pub max_ar_lag: usize,
    pub max_ma_lag: usize,
}

/// Check whether a model of this order can forecast from, and be fitted
/// on, a window of `len` observations.
///
/// Forecasting needs every lagged observation and innovation to exist:
/// (D+P)s + p + d <= len and Qs + q <= len. Fitting additionally needs
/// one full season of computable points, adding s to each AR/MA-side
/// bound.
pub fn check_feasibility(order: &SarimaOrder, len: usize) -> FeasibilityReport {
    let ar_forecast = order.max_ar_lag();
    let ma_forecast = order.max_ma_lag();
    let ar_fit = ar_forecast + order.s;
    let ma_fit = ma_forecast + order.s;
    FeasibilityReport {
        feasible_for_fit: ar_fit <= len && ma_fit <= len,
        feasible_for_forecast: ar_forecast <= len && ma_forecast <= len,
        required_fit_length: ar_fit,
        required_forecast_length: ar_forecast,
        max_ar_lag: ar_forecast,
        max_ma_lag: ma_forecast,
    }
}

/// Multiply two lag polynomials given as coefficient vectors indexed by power.
pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// 1 - sum_i c_i L^(i*stride): the AR convention.
pub(crate) fn ar_polynomial(coeffs: &[f64], stride: usize) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len() * stride + 1];
    out[0] = 1.0;
    for (i, &c) in coeffs.iter().enumerate() {
        out[(i + 1) * stride] = -c;
    }
    out
}

/// 1 + sum_j c_j L^(j*stride): the MA convention.
pub(crate) fn ma_polynomial(coeffs: &[f64], stride: usize) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len() * stride + 1];
    out[0] = 1.0;
    for (j, &c) in coeffs.iter().enumerate() {
        out[(j + 1) * stride] = c;
    }
    out
}

/// (1 - L^lag)^order.
pub(crate) fn difference_polynomial(lag: usize, order: usize) -> Vec<f64> {
    let base = {
        let mut p = vec![0.0; lag + 1];
        p[0] = 1.0;
        p[lag] = -1.0;
        p
    };
    let mut out = vec![1.0];
    for _ in 0..order {
        out = poly_mul(&out, &base);
    }
    out
}

/// Full AR-side polynomial Phi_P(L^s) phi_p(L) (1-L)^d (1-L^s)^D.
pub(crate) fn full_ar_polynomial(order: &SarimaOrder, coeffs: &SarimaCoefficients) -> Vec<f64> {
    let mut poly = poly_mul(
        &ar_polynomial(&coeffs.seasonal_ar, order.s),
        &ar_polynomial(&coeffs.ar, 1),
    );
    poly = poly_mul(&poly, &difference_polynomial(1, order.d));
    poly_mul(&poly, &difference_polynomial(order.s, order.sd))
}

/// Combined MA polynomial Theta_Q(L^s) theta_q(L).
pub(crate) fn full_ma_polynomial(order: &SarimaOrder, coeffs: &SarimaCoefficients) -> Vec<f64> {
    poly_mul(
        &ma_polynomial(&coeffs.seasonal_ma, order.s),
        &ma_polynomial(&coeffs.ma, 1),
    )
}

/// Express the model as y_t = sum_k w_k y_{t-k} + (MA terms) by expanding
/// the AR-side polynomial, differencing operators included.
///
/// Returns the nonzero weights keyed by lag; the largest key equals
/// `max_ar_lag`. When d + D >= 1 the weights sum to 1 (the polynomial
/// vanishes at L = 1).
pub fn expand_ar_recursion(
    order: &SarimaOrder,
    coeffs: &SarimaCoefficients,
) -> BTreeMap<usize, f64> {
    let poly = full_ar_polynomial(order, coeffs);
    let mut weights = BTreeMap::new();
    for (lag, &c) in poly.iter().enumerate().skip(1) {
        if c != 0.0 {
            weights.insert(lag, -c);
        }
    }
    weights
}
