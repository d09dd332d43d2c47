//! Regularly spaced time-series container.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regularly spaced series of observations.
///
/// `start` is the offset of the first observation on the job calendar
/// (week index for weekly data), and `period` is the number of
/// observations per season (52 for weekly data with a yearly cycle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    start: usize,
    period: usize,
}

impl TimeSeries {
    /// Build a series with seasonal period `period` starting at calendar index 0.
    pub fn new(values: Vec<f64>, period: usize) -> Result<Self> {
        Self::with_start(values, period, 0)
    }

    /// Build a series anchored at calendar index `start`.
    pub fn with_start(values: Vec<f64>, period: usize, start: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SeriesTooShort { needed: 1, have: 0 });
        }
        if period == 0 {
            return Err(Error::SpecMismatch("period must be >= 1".into()));
        }
        Ok(Self {
            values,
            start,
            period,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Same calendar anchor and period, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            start: self.start,
            period: self.period,
        }
    }

    /// First `n` observations, keeping the anchor.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::SeriesTooShort {
                needed: n.max(1),
                have: self.len(),
            });
        }
        Ok(Self {
            values: self.values[..n].to_vec(),
            start: self.start,
            period: self.period,
        })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample standard deviation (n - 1 denominator); 0 for a single point.
    pub fn std_dev(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    }
}
