//! Grouped time-series forecasting with SARIMA models and coherent
//! reconciliation.
//!
//! The crate covers the full pipeline: Box-Cox preprocessing,
//! feasibility-checked SARIMA estimation, automatic order selection,
//! grouped aggregation structures with summing matrices, bottom-up /
//! OLS / WLS / MinT reconciliation, and MASE/RMSE evaluation over a
//! holdout window.

pub mod acf;
pub mod diagnostics;
pub mod diff;
pub mod error;
pub mod grouping;
pub mod harness;
pub mod metrics;
pub mod reconcile;
pub mod sarima;
pub mod selection;
pub mod series;
pub mod stationarity;
pub mod synthetic;
pub mod transform;

pub use error::{Error, Result};
pub use series::TimeSeries;
