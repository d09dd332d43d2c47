//! SARIMA orders, feasibility restrictions, CSS estimation, forecasting,
//! and seeded simulation.

pub(crate) mod estimate;
mod forecast;
mod order;
mod simplex;
mod simulate;

pub use estimate::{fit, FittedModel};
pub(crate) use estimate::fit_conditioned;
pub use forecast::forecast;
pub use order::{
    check_feasibility, expand_ar_recursion, FeasibilityReport, SarimaCoefficients, SarimaOrder,
};
pub use simulate::{simulate, simulate_with_initials};
