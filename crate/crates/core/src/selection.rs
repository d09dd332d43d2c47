//! Feasibility-constrained automatic SARIMA order search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{information_criteria, CriteriaSet};
use crate::error::{Error, Result};
use crate::sarima::{check_feasibility, FittedModel, SarimaOrder};
use crate::sarima::fit_conditioned;
use crate::series::TimeSeries;
use crate::stationarity::choose_differencing;

/// Ranking criterion for the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcKind {
    Aic,
    Aicc,
    Bic,
}

impl IcKind {
    fn value(&self, c: &CriteriaSet) -> f64 {
        match self {
            IcKind::Aic => c.aic,
            IcKind::Aicc => c.aicc,
            IcKind::Bic => c.bic,
        }
    }
}

/// Bounds and criterion of the order search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_p: usize,
    pub max_q: usize,
    pub max_seasonal_p: usize,
    pub max_seasonal_q: usize,
    pub criterion: IcKind,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_p: 3,
            max_q: 3,
            max_seasonal_p: 1,
            max_seasonal_q: 1,
            criterion: IcKind::Aicc,
        }
    }
}

/// One evaluated candidate order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Candidate {
    pub order: SarimaOrder,
    pub criteria: Option<CriteriaSet>,
    pub converged: bool,
    /// Failure message when the fit errored.
    pub error: Option<String>,
}

/// Outcome of the automatic search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: FittedModel,
    pub best_criteria: CriteriaSet,
    /// Every enumerated candidate, in deterministic enumeration order.
    pub candidates: Vec<Candidate>,
    /// The (d, D) fixed before enumeration.
    pub differencing: (usize, usize),
    pub warnings: Vec<String>,
}

/// Enumerate feasible orders at fixed (d, D), fit each, and rank by the
/// configured criterion. Non-converged fits stay in the candidate list
/// but are excluded from ranking; near-ties within 1e-9 break toward
/// the smaller total order, then lexicographic (p, q, P, Q).
///
/// Candidate fits run concurrently; results are merged in enumeration
/// order, so concurrency never changes the outcome.
pub fn auto_select(y: &TimeSeries, period: usize, config: &SearchConfig) -> Result<SearchResult> {
    let len = y.len();
    let mut warnings = Vec::new();

    let seasonal_allowed = period > 1 && len >= period + 2;
    if period > 1 && !seasonal_allowed {
        warnings.push(format!(
            "length {len} below one season of {period} plus 2; search restricted to non-seasonal orders"
        ));
    }
    let effective_period = if seasonal_allowed { period } else { 1 };

    let choice = choose_differencing(y, effective_period)?;
    if let Some(w) = &choice.warning {
        warnings.push(w.clone());
    }
    let (d, seasonal_d) = (choice.d, choice.seasonal_d);
    let include_intercept = d + seasonal_d == 0;

    let (max_sp, max_sq) = if seasonal_allowed {
        (config.max_seasonal_p, config.max_seasonal_q)
    } else {
        (0, 0)
    };

    let n_diff = len - d - seasonal_d * effective_period;
    let own_start = |order: &SarimaOrder| -> usize {
        (order.p + order.sp * effective_period).max(order.q + order.sq * effective_period)
    };
    let mut orders = Vec::new();
    for p in 0..=config.max_p {
        for q in 0..=config.max_q {
            for sp in 0..=max_sp {
                for sq in 0..=max_sq {
                    let order = SarimaOrder::new(p, d, q, sp, seasonal_d, sq, effective_period)?;
                    if !check_feasibility(&order, len).feasible_for_fit {
                        continue;
                    }
                    // the criterion must be computable: n > k + 1
                    let start = own_start(&order);
                    let k = order.arma_params() + usize::from(include_intercept) + 1;
                    if n_diff <= start || n_diff - start <= k + 1 {
                        continue;
                    }
                    orders.push(order);
                }
            }
        }
    }
    // all candidates share one conditioning window so their likelihoods
    // cover the same observations; drop candidates that leave too small
    // a sample under the shared window (the window then shrinks, so
    // iterate until stable)
    let mut common_start = 0;
    while let Some(max_start) = orders.iter().map(own_start).max() {
        common_start = max_start;
        let before = orders.len();
        orders.retain(|order| {
            let k = order.arma_params() + usize::from(include_intercept) + 1;
            n_diff > common_start && n_diff - common_start > k + 1
        });
        if orders.len() == before {
            break;
        }
    }
    if orders.is_empty() {
        return Err(Error::NoFeasibleModel {
            length: len,
            period,
        });
    }

    let fits: Vec<std::result::Result<FittedModel, Error>> = orders
        .par_iter()
        .map(|order| fit_conditioned(y, order, include_intercept, common_start))
        .collect();

    struct Ranked {
        index: usize,
        value: f64,
        total_order: usize,
        lex: (usize, usize, usize, usize),
    }
    let mut candidates = Vec::with_capacity(orders.len());
    let mut ranked: Vec<Ranked> = Vec::new();
    let mut first_error: Option<Error> = None;
    for (i, (order, outcome)) in orders.iter().zip(&fits).enumerate() {
        match outcome {
            Ok(model) => {
                let criteria =
                    information_criteria(model.log_likelihood, model.param_count(), model.effective_n())
                        .ok();
                let rankable = model.converged
                    && criteria.map(|c| config.criterion.value(&c).is_finite()).unwrap_or(false);
                if rankable {
                    let c = criteria.expect("checked above");
                    ranked.push(Ranked {
                        index: i,
                        value: config.criterion.value(&c),
                        total_order: order.arma_params(),
                        lex: (order.p, order.q, order.sp, order.sq),
                    });
                }
                candidates.push(Candidate {
                    order: *order,
                    criteria,
                    converged: model.converged,
                    error: None,
                });
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e.clone());
                }
                candidates.push(Candidate {
                    order: *order,
                    criteria: None,
                    converged: false,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    if ranked.is_empty() {
        return Err(match first_error {
            Some(Error::DegenerateSeries) => Error::DegenerateSeries,
            Some(other) => other,
            None => Error::NoFeasibleModel {
                length: len,
                period,
            },
        });
    }

    let best_value = ranked
        .iter()
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    let winner = ranked
        .iter()
        .filter(|r| r.value <= best_value + 1e-9)
        .min_by_key(|r| (r.total_order, r.lex))
        .expect("non-empty tie group");

    let best_index = winner.index;
    let best = fits[best_index]
        .as_ref()
        .expect("ranked candidates fitted")
        .clone();
    let best_criteria = candidates[best_index]
        .criteria
        .expect("ranked candidates have criteria");

    Ok(SearchResult {
        best,
        best_criteria,
        candidates,
        differencing: (d, seasonal_d),
        warnings,
    })
}
