//! Coherent forecast reconciliation: bottom-up, OLS, WLS, and MinT.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::SummingMatrix;

/// Stacked h-step base forecasts for all nodes, rows in summing-matrix
/// row order.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseForecasts {
    matrix: DMatrix<f64>,
}

impl BaseForecasts {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let h = rows.first().map(|r| r.len()).unwrap_or(0);
        if n == 0 || h == 0 || rows.iter().any(|r| r.len() != h) {
            return Err(Error::ShapeMismatch {
                expected: "rectangular nodes x horizon matrix".into(),
                actual: format!("{n} rows"),
            });
        }
        Ok(Self {
            matrix: DMatrix::from_fn(n, h, |i, j| rows[i][j]),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.matrix.ncols()
    }
}

/// In-sample one-step residuals, rows = time, columns = nodes in
/// summing-matrix row order. Rows are restricted to timestamps where
/// every node has a residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix {
    matrix: DMatrix<f64>,
}

impl ResidualMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    /// Build from per-node residual series by aligning their tails: the
    /// last `min_len` values of every node are kept.
    pub fn from_aligned_tails(per_node: &[Vec<f64>]) -> Result<Self> {
        let n = per_node.len();
        let min_len = per_node.iter().map(|r| r.len()).min().unwrap_or(0);
        if n == 0 || min_len == 0 {
            return Err(Error::DegenerateResiduals(
                "no common residual rows across nodes".into(),
            ));
        }
        Ok(Self {
            matrix: DMatrix::from_fn(min_len, n, |t, j| {
                let r = &per_node[j];
                r[r.len() - min_len + t]
            }),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn nodes(&self) -> usize {
        self.matrix.ncols()
    }

    /// Uncentered residual covariance (1/T) sum_t e_t e_t'.
    pub fn covariance(&self) -> DMatrix<f64> {
        let t = self.matrix.nrows() as f64;
        (self.matrix.transpose() * &self.matrix) / t
    }
}

/// Weighting scheme of the reconciliation estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    Ols,
    Wls,
    MinTSample,
    MinTShrink,
}

/// A concrete node-by-node weight matrix W.
///
/// Reconciliation output is invariant to scaling W by any positive
/// constant, so only the relative weights matter.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub matrix: DMatrix<f64>,
    /// Shrinkage intensity actually used (MinT-shrink only).
    pub shrink_intensity: Option<f64>,
    pub warnings: Vec<String>,
}

impl WeightSpec {
    pub fn identity(n: usize) -> Self {
        Self {
            kind: WeightKind::Ols,
            matrix: DMatrix::identity(n, n),
            shrink_intensity: None,
            warnings: vec![],
        }
    }
}

/// Shrinkage intensity toward the diagonal target, estimated from the
/// variance of the standardized residual cross-products relative to the
/// squared off-diagonal correlations.
fn shrink_intensity(residuals: &ResidualMatrix, covariance: &DMatrix<f64>) -> f64 {
    let e = residuals.matrix();
    let t = e.nrows();
    let n = e.ncols();
    if t < 2 || n < 2 {
        return 1.0;
    }
    let sd: Vec<f64> = (0..n).map(|j| covariance[(j, j)].sqrt().max(1e-300)).collect();
    // standardized residuals and the sample correlation matrix
    let xs = DMatrix::from_fn(t, n, |i, j| e[(i, j)] / sd[j]);
    let corr = (xs.transpose() * &xs) / t as f64;

    let tf = t as f64;
    let mut numer = 0.0;
    let mut denom = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            // var of the cross-product estimate
            let mut sum_sq = 0.0;
            let mut sum = 0.0;
            for i in 0..t {
                let w = xs[(i, a)] * xs[(i, b)];
                sum_sq += w * w;
                sum += w;
            }
            numer += (sum_sq - sum * sum / tf) / (tf * (tf - 1.0));
            let c = corr[(a, b)];
            denom += c * c;
        }
    }
    if denom <= 0.0 {
        return 1.0;
    }
    (numer / denom).clamp(0.0, 1.0)
}

/// Estimate the weight matrix for one reconciliation method from the
/// in-sample residuals.
///
/// OLS ignores the residuals (identity weights). WLS uses the residual
/// variances (variance scaling). MinT-sample uses the full covariance;
/// MinT-shrink blends it with its diagonal using an estimated intensity.
/// A MinT-sample request with fewer residual rows than nodes upgrades to
/// MinT-shrink with a warning. Zero-variance nodes have their diagonal
/// entries floored.
pub fn estimate_weights(residuals: &ResidualMatrix, kind: WeightKind) -> Result<WeightSpec> {
    let n = residuals.nodes();
    if let WeightKind::Ols = kind {
        return Ok(WeightSpec::identity(n));
    }
    if residuals.len() < 2 {
        return Err(Error::DegenerateResiduals(format!(
            "need at least 2 residual rows, have {}",
            residuals.len()
        )));
    }
    let mut warnings = Vec::new();
    let mut kind = kind;
    if kind == WeightKind::MinTSample && residuals.len() <= n {
        warnings.push(format!(
            "sample covariance with {} rows over {} nodes is singular; upgraded to MinT-shrink",
            residuals.len(),
            n
        ));
        kind = WeightKind::MinTShrink;
    }

    let mut covariance = residuals.covariance();
    // floor degenerate diagonal entries
    let max_diag = (0..n).map(|j| covariance[(j, j)]).fold(0.0, f64::max);
    let floor = if max_diag > 0.0 { 1e-10 * max_diag } else { 1e-12 };
    for j in 0..n {
        if covariance[(j, j)] < floor {
            warnings.push(format!("node {j} has (near-)zero residual variance; floored"));
            covariance[(j, j)] = floor;
        }
    }

    let spec = match kind {
        WeightKind::Ols => unreachable!("handled above"),
        WeightKind::Wls => {
            let mut w = DMatrix::zeros(n, n);
            for j in 0..n {
                w[(j, j)] = covariance[(j, j)];
            }
            WeightSpec {
                kind: WeightKind::Wls,
                matrix: w,
                shrink_intensity: None,
                warnings,
            }
        }
        WeightKind::MinTSample => WeightSpec {
            kind: WeightKind::MinTSample,
            matrix: covariance,
            shrink_intensity: None,
            warnings,
        },
        WeightKind::MinTShrink => {
            let lambda = shrink_intensity(residuals, &covariance);
            let mut w = &covariance * (1.0 - lambda);
            for j in 0..n {
                w[(j, j)] += lambda * covariance[(j, j)];
            }
            WeightSpec {
                kind: WeightKind::MinTShrink,
                matrix: w,
                shrink_intensity: Some(lambda),
                warnings,
            }
        }
    };
    Ok(spec)
}

/// Build a MinT-shrink spec at a forced intensity (1 reproduces WLS).
pub fn shrink_weights_with_intensity(
    residuals: &ResidualMatrix,
    lambda: f64,
) -> Result<WeightSpec> {
    let n = residuals.nodes();
    if residuals.len() < 2 {
        return Err(Error::DegenerateResiduals(format!(
            "need at least 2 residual rows, have {}",
            residuals.len()
        )));
    }
    let covariance = residuals.covariance();
    let mut w = &covariance * (1.0 - lambda);
    for j in 0..n {
        w[(j, j)] += lambda * covariance[(j, j)];
    }
    Ok(WeightSpec {
        kind: WeightKind::MinTShrink,
        matrix: w,
        shrink_intensity: Some(lambda),
        warnings: vec![],
    })
}

/// Reconciled forecasts: the coherent node matrix and the bottom-level
/// estimates it is built from, with ỹ = S·β̃ exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconciledForecasts {
    pub reconciled: DMatrix<f64>,
    pub bottom: DMatrix<f64>,
}

impl ReconciledForecasts {
    /// Largest coherence violation |ỹ − S·β̃| relative to max |ỹ|.
    pub fn coherence_gap(&self, s: &SummingMatrix) -> f64 {
        let rebuilt = s.aggregate(&self.bottom);
        let diff = &self.reconciled - &rebuilt;
        let scale = self
            .reconciled
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
            .max(1.0);
        diff.iter().map(|v| v.abs()).fold(0.0, f64::max) / scale
    }

    pub fn has_negative(&self) -> bool {
        self.reconciled.iter().any(|&v| v < 0.0)
    }
}

fn cholesky_with_jitter(
    matrix: &DMatrix<f64>,
    what: &str,
) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(matrix.clone()) {
        return Ok(c);
    }
    let n = matrix.nrows();
    let jitter = 1e-8 * matrix.trace() / n as f64;
    let mut adjusted = matrix.clone();
    for i in 0..n {
        adjusted[(i, i)] += jitter;
    }
    Cholesky::new(adjusted).ok_or_else(|| {
        Error::SingularSystem(format!(
            "{what} not positive definite even after jitter {jitter:e}"
        ))
    })
}

/// Trace-minimizing reconciliation: ỹ = S (SᵀW⁻¹S)⁻¹ SᵀW⁻¹ ŷ, solved
/// per horizon column via Cholesky factorizations (never an explicit
/// inverse).
pub fn reconcile(
    base: &BaseForecasts,
    s: &SummingMatrix,
    weights: &WeightSpec,
) -> Result<ReconciledForecasts> {
    let n = s.rows();
    if base.nodes() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} forecast rows"),
            actual: format!("{}", base.nodes()),
        });
    }
    if weights.matrix.nrows() != n || weights.matrix.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n}x{n} weight matrix"),
            actual: format!("{}x{}", weights.matrix.nrows(), weights.matrix.ncols()),
        });
    }

    let w_chol = cholesky_with_jitter(&weights.matrix, "weight matrix")?;
    let winv_s = w_chol.solve(s.matrix());
    let winv_y = w_chol.solve(base.matrix());
    let st = s.matrix().transpose();
    let normal = &st * &winv_s;
    let rhs = &st * &winv_y;
    let normal_chol = cholesky_with_jitter(&normal, "S' W^-1 S")?;
    let bottom = normal_chol.solve(&rhs);
    let reconciled = s.aggregate(&bottom);
    Ok(ReconciledForecasts { reconciled, bottom })
}

/// Keep the bottom-level base forecasts and sum them upward, discarding
/// every upper-level base forecast.
pub fn bottom_up(base: &BaseForecasts, s: &SummingMatrix) -> Result<ReconciledForecasts> {
    let n = s.rows();
    let m = s.cols();
    if base.nodes() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} forecast rows"),
            actual: format!("{}", base.nodes()),
        });
    }
    let bottom = base.matrix().rows(n - m, m).into_owned();
    let reconciled = s.aggregate(&bottom);
    Ok(ReconciledForecasts { reconciled, bottom })
}
