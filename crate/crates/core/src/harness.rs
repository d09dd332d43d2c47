//! Holdout evaluation harness: per-node modeling, reconciliation with
//! every requested method, and MASE/RMSE reporting.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{ljung_box, CriteriaSet, LjungBoxResult};
use crate::error::{Error, Result};
use crate::grouping::{aggregate_records, build_summing_matrix, GroupStructure, SeriesKey, WeekRecord};
use crate::metrics::{mase, rmse};
use crate::reconcile::{
    bottom_up, estimate_weights, reconcile, BaseForecasts, ReconciledForecasts, ResidualMatrix,
    WeightKind,
};
use crate::sarima::{forecast, SarimaOrder};
use crate::selection::{auto_select, SearchConfig};
use crate::series::TimeSeries;
use crate::transform::{box_cox, inv_box_cox_value_clamped, select_lambda, BoxCoxParam};

/// Forecast combination methods of the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Baseline,
    BottomUp,
    Ols,
    Wls,
    MintSample,
    MintShrink,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Baseline,
        Method::BottomUp,
        Method::Ols,
        Method::Wls,
        Method::MintSample,
        Method::MintShrink,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Baseline => "Baseline",
            Method::BottomUp => "Bottom-up",
            Method::Ols => "OLS",
            Method::Wls => "WLS",
            Method::MintSample => "MinT-sample",
            Method::MintShrink => "MinT-shrink",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Method::Baseline),
            "bottom-up" | "bottomup" | "bu" => Ok(Method::BottomUp),
            "ols" => Ok(Method::Ols),
            "wls" => Ok(Method::Wls),
            "mint-sample" => Ok(Method::MintSample),
            "mint-shrink" | "mint" => Ok(Method::MintShrink),
            other => Err(Error::SpecMismatch(format!("unknown method '{other}'"))),
        }
    }
}

/// Per-series transformation policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformPolicy {
    None,
    Log,
    Auto,
}

/// Everything the harness needs besides the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobSpec {
    /// Training window length in weeks.
    pub train_len: usize,
    /// Forecast horizon h.
    pub horizon: usize,
    /// Seasonal period s.
    pub period: usize,
    pub methods: Vec<Method>,
    pub transform: TransformPolicy,
    /// Constant added before a positive-data transform (subtracted after
    /// inversion); 0 disables shifting.
    pub shift: f64,
    pub search: SearchConfig,
}

impl JobSpec {
    pub fn validate(&self, weeks: usize) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::SpecMismatch("horizon must be >= 1".into()));
        }
        if self.train_len == 0 {
            return Err(Error::SpecMismatch("training span is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::SpecMismatch("method set is empty".into()));
        }
        if self.train_len + self.horizon > weeks {
            return Err(Error::SeriesTooShort {
                needed: self.train_len + self.horizon,
                have: weeks,
            });
        }
        Ok(())
    }
}

/// Model audit emitted for every node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDiagnostics {
    pub key: String,
    pub transform_lambda: Option<f64>,
    pub differencing: Option<(usize, usize)>,
    pub order: Option<SarimaOrder>,
    pub converged: bool,
    pub criteria: Option<CriteriaSet>,
    pub ljung_box: Option<LjungBoxResult>,
    pub candidates_evaluated: usize,
    /// True when modeling failed and the seasonal-naive fallback produced
    /// this node's forecasts.
    pub fallback: bool,
    pub warnings: Vec<String>,
}

/// One (node, method) result line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub key: String,
    /// Number of bound attributes; 0 is the most aggregated node.
    pub aggregation_rank: usize,
    pub method: String,
    pub mase: Option<f64>,
    pub rmse: f64,
    pub horizon: usize,
    pub fallback: bool,
}

/// The per-node, per-method accuracy table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub train_len: usize,
    pub horizon: usize,
}

impl EvaluationReport {
    /// Rows for the `n` most aggregated nodes, in node order.
    pub fn summary_rows(&self, n: usize) -> Vec<&ReportRow> {
        let mut keys: Vec<(usize, &str)> = Vec::new();
        for row in &self.rows {
            if !keys.iter().any(|(_, k)| *k == row.key.as_str()) {
                keys.push((row.aggregation_rank, &row.key));
            }
        }
        keys.sort_by_key(|(rank, _)| *rank);
        let chosen: Vec<&str> = keys.iter().take(n).map(|(_, k)| *k).collect();
        self.rows
            .iter()
            .filter(|r| chosen.contains(&r.key.as_str()))
            .collect()
    }
}

/// Full output bundle of one evaluation run.
#[derive(Debug, Clone)]
pub struct JobOutput {
    /// Node keys in summing-matrix row order.
    pub node_keys: Vec<SeriesKey>,
    pub node_labels: Vec<String>,
    pub base: BaseForecasts,
    /// Reconciled forecasts per non-baseline method, in configured order.
    pub reconciled: Vec<(Method, ReconciledForecasts)>,
    /// Held-out actuals, nodes x horizon.
    pub actuals: DMatrix<f64>,
    pub report: EvaluationReport,
    pub diagnostics: Vec<NodeDiagnostics>,
}

impl JobOutput {
    /// Forecast matrix of one method (baseline rows are the base forecasts).
    pub fn method_matrix(&self, method: Method) -> Option<&DMatrix<f64>> {
        if method == Method::Baseline {
            return Some(self.base.matrix());
        }
        self.reconciled
            .iter()
            .find(|(m, _)| *m == method)
            .map(|(_, r)| &r.reconciled)
    }
}

struct NodeOutcome {
    forecasts: Vec<f64>,
    residuals_original_scale: Vec<f64>,
    diagnostics: NodeDiagnostics,
    /// Set when the model search itself failed (the node fell back).
    search_error: Option<Error>,
}

fn seasonal_naive_outcome(
    train: &TimeSeries,
    horizon: usize,
    period: usize,
    key: String,
    mut warnings: Vec<String>,
    search_error: Option<Error>,
) -> NodeOutcome {
    let values = train.values();
    let lag = if period > 1 && values.len() > period {
        period
    } else {
        1
    };
    let mut extended = values.to_vec();
    for step in 0..horizon {
        let t = values.len() + step;
        let v = extended[t - lag];
        extended.push(v);
    }
    let residuals: Vec<f64> = (lag..values.len())
        .map(|t| values[t] - values[t - lag])
        .collect();
    warnings.push(format!("seasonal-naive fallback with lag {lag}"));
    NodeOutcome {
        forecasts: extended[values.len()..].to_vec(),
        residuals_original_scale: residuals,
        diagnostics: NodeDiagnostics {
            key,
            transform_lambda: None,
            differencing: None,
            order: None,
            converged: false,
            criteria: None,
            ljung_box: None,
            candidates_evaluated: 0,
            fallback: true,
            warnings,
        },
        search_error,
    }
}

fn model_node(series: &TimeSeries, key_label: String, job: &JobSpec) -> NodeOutcome {
    let train = match series.head(job.train_len) {
        Ok(t) => t,
        Err(e) => {
            // unreachable after JobSpec::validate, but never abort the job
            return seasonal_naive_outcome(
                series,
                job.horizon,
                job.period,
                key_label,
                vec![format!("training split failed: {e}")],
                Some(e),
            );
        }
    };
    let mut warnings = Vec::new();

    // transform stage
    let shifted = if job.shift != 0.0 {
        train.with_values(train.values().iter().map(|v| v + job.shift).collect())
    } else {
        train.clone()
    };
    let lambda: Option<BoxCoxParam> = match job.transform {
        TransformPolicy::None => None,
        TransformPolicy::Log => Some(BoxCoxParam::log()),
        TransformPolicy::Auto => match select_lambda(&shifted) {
            Ok(sel) => {
                if let Some(w) = sel.warning {
                    warnings.push(w);
                }
                Some(sel.param)
            }
            Err(e) => {
                warnings.push(format!("lambda selection failed: {e}"));
                return seasonal_naive_outcome(
                    &train, job.horizon, job.period, key_label, warnings, Some(e),
                );
            }
        },
    };
    let working = match lambda {
        Some(lam) => match box_cox(&shifted, lam) {
            Ok(w) => w,
            Err(e) => {
                warnings.push(format!("transform failed: {e}"));
                return seasonal_naive_outcome(
                    &train, job.horizon, job.period, key_label, warnings, Some(e),
                );
            }
        },
        None => shifted.clone(),
    };

    // identification + estimation stage
    let search = match auto_select(&working, job.period, &job.search) {
        Ok(s) => s,
        Err(e) => {
            warnings.push(format!("model search failed: {e}"));
            return seasonal_naive_outcome(&train, job.horizon, job.period, key_label, warnings, Some(e));
        }
    };
    warnings.extend(search.warnings.iter().cloned());
    let model = &search.best;

    // forecast stage, back onto the original scale
    let transformed_forecasts = match forecast(model, &working, job.horizon) {
        Ok(f) => f,
        Err(e) => {
            warnings.push(format!("forecast failed: {e}"));
            return seasonal_naive_outcome(&train, job.horizon, job.period, key_label, warnings, Some(e));
        }
    };
    let forecasts: Vec<f64> = transformed_forecasts
        .iter()
        .map(|&v| match lambda {
            Some(lam) => inv_box_cox_value_clamped(v, lam) - job.shift,
            None => v - job.shift,
        })
        .collect();

    // one-step in-sample residuals on the original scale: with actual
    // history in the differencing terms, the one-step error on the
    // working scale is the model residual, so the original-scale error
    // is y_t - inv(w_t - eps_t).
    let n_resid = model.residuals.len();
    let offset = job.train_len - n_resid;
    let residuals_original_scale: Vec<f64> = (0..n_resid)
        .map(|j| {
            let t = offset + j;
            let eps = model.residuals.values()[j];
            match lambda {
                Some(lam) => {
                    let fitted_w = working.values()[t] - eps;
                    let fitted = inv_box_cox_value_clamped(fitted_w, lam) - job.shift;
                    train.values()[t] - fitted
                }
                None => eps,
            }
        })
        .collect();

    // residual diagnosis stage
    let lb = {
        let t_resid = model.residuals.len();
        let k = model.order.arma_params();
        let mut lags = if job.period > 1 {
            (2 * job.period).min(t_resid / 5)
        } else {
            10
        };
        lags = lags.max(k + 1);
        if t_resid > lags && lags > k {
            ljung_box(&model.residuals, lags, k).ok()
        } else {
            None
        }
    };

    NodeOutcome {
        forecasts,
        residuals_original_scale,
        diagnostics: NodeDiagnostics {
            key: key_label,
            transform_lambda: lambda.map(|l| l.lambda),
            differencing: Some(search.differencing),
            order: Some(model.order),
            converged: model.converged,
            criteria: Some(search.best_criteria),
            ljung_box: lb,
            candidates_evaluated: search.candidates.len(),
            fallback: false,
            warnings,
        },
        search_error: None,
    }
}

/// Run the full protocol: aggregate records, model every node on the
/// training window, reconcile with every requested method, and score
/// against the holdout.
///
/// A node whose model fails falls back to the seasonal-naive forecast
/// and is flagged; the job itself never aborts on a single node.
pub fn evaluate_job(
    structure: &GroupStructure,
    records: &[WeekRecord],
    weeks: usize,
    job: &JobSpec,
) -> Result<JobOutput> {
    job.validate(weeks)?;
    let series_by_key = aggregate_records(records, structure, weeks, job.period)?;
    let node_keys: Vec<SeriesKey> = structure.nodes().to_vec();
    let node_labels: Vec<String> = node_keys
        .iter()
        .map(|k| k.label(&structure.schema))
        .collect();
    let node_series: Vec<&TimeSeries> = node_keys
        .iter()
        .map(|k| series_by_key.get(k).expect("aggregation covers every node"))
        .collect();

    let outcomes: Vec<NodeOutcome> = node_series
        .par_iter()
        .zip(node_labels.par_iter())
        .map(|(series, label)| model_node(series, label.clone(), job))
        .collect();

    // a uniformly infeasible configuration is a job-level error, not a
    // per-node fallback
    if outcomes.iter().all(|o| o.diagnostics.fallback) {
        if let Some(e) = outcomes.iter().find_map(|o| match &o.search_error {
            Some(Error::NoFeasibleModel { .. }) => o.search_error.clone(),
            _ => None,
        }) {
            return Err(e);
        }
    }

    let h = job.horizon;
    let n = node_keys.len();
    let base = BaseForecasts::new(DMatrix::from_fn(n, h, |i, j| outcomes[i].forecasts[j]));
    let actuals = DMatrix::from_fn(n, h, |i, j| {
        node_series[i].values()[job.train_len + j]
    });

    let s = build_summing_matrix(structure);
    let needs_weights = job
        .methods
        .iter()
        .any(|m| matches!(m, Method::Wls | Method::MintSample | Method::MintShrink));
    let residual_matrix = if needs_weights {
        let per_node: Vec<Vec<f64>> = outcomes
            .iter()
            .map(|o| o.residuals_original_scale.clone())
            .collect();
        Some(ResidualMatrix::from_aligned_tails(&per_node)?)
    } else {
        None
    };

    let mut reconciled = Vec::new();
    for method in &job.methods {
        let result = match method {
            Method::Baseline => continue,
            Method::BottomUp => bottom_up(&base, &s)?,
            Method::Ols => {
                let w = crate::reconcile::WeightSpec::identity(n);
                reconcile(&base, &s, &w)?
            }
            Method::Wls | Method::MintSample | Method::MintShrink => {
                let kind = match method {
                    Method::Wls => WeightKind::Wls,
                    Method::MintSample => WeightKind::MinTSample,
                    _ => WeightKind::MinTShrink,
                };
                let residuals = residual_matrix.as_ref().expect("estimated above");
                let w = estimate_weights(residuals, kind)?;
                reconcile(&base, &s, &w)?
            }
        };
        reconciled.push((*method, result));
    }

    let mut rows = Vec::with_capacity(job.methods.len() * n);
    for method in &job.methods {
        let matrix = if *method == Method::Baseline {
            base.matrix()
        } else {
            &reconciled
                .iter()
                .find(|(m, _)| m == method)
                .expect("computed above")
                .1
                .reconciled
        };
        for i in 0..n {
            let actual: Vec<f64> = (0..h).map(|j| actuals[(i, j)]).collect();
            let fc: Vec<f64> = (0..h).map(|j| matrix[(i, j)]).collect();
            let train = node_series[i].head(job.train_len)?;
            let mase_value = match mase(&actual, &fc, &train, job.period) {
                Ok(v) => Some(v),
                Err(Error::ZeroDenominator) => None,
                Err(e) => return Err(e),
            };
            rows.push(ReportRow {
                key: node_labels[i].clone(),
                aggregation_rank: node_keys[i].bound_count(),
                method: method.to_string(),
                mase: mase_value,
                rmse: rmse(&actual, &fc)?,
                horizon: h,
                fallback: outcomes[i].diagnostics.fallback,
            });
        }
    }

    Ok(JobOutput {
        node_keys,
        node_labels,
        base,
        reconciled,
        actuals,
        report: EvaluationReport {
            rows,
            train_len: job.train_len,
            horizon: h,
        },
        diagnostics: outcomes.into_iter().map(|o| o.diagnostics).collect(),
    })
}
