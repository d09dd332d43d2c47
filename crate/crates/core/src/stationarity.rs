//! Level-stationarity testing and automatic differencing-order choice.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::series::TimeSeries;

/// KPSS level-stationarity statistic with a Bartlett-kernel long-run
/// variance using the short truncation lag floor(4 (T/100)^(1/4)).
///
/// The null hypothesis is level stationarity; large values reject it.
pub fn kpss_level_statistic(values: &[f64]) -> f64 {
    let n = values.len();
    let t = n as f64;
    let mean = values.iter().sum::<f64>() / t;
    let e: Vec<f64> = values.iter().map(|v| v - mean).collect();

    let mut cumulative = 0.0;
    let mut s_sq_sum = 0.0;
    for &v in &e {
        cumulative += v;
        s_sq_sum += cumulative * cumulative;
    }

    let bandwidth = (4.0 * (t / 100.0).powf(0.25)).floor() as usize;
    let gamma = |j: usize| -> f64 { (j..n).map(|i| e[i] * e[i - j]).sum::<f64>() / t };
    let mut long_run = gamma(0);
    for j in 1..=bandwidth.min(n.saturating_sub(1)) {
        let weight = 1.0 - j as f64 / (bandwidth as f64 + 1.0);
        long_run += 2.0 * weight * gamma(j);
    }
    if long_run <= 0.0 {
        return 0.0;
    }
    s_sq_sum / (t * t * long_run)
}

/// 5% critical value of the level-stationarity KPSS test.
pub const KPSS_LEVEL_CRIT_5PCT: f64 = 0.463;

/// Chosen differencing orders with any soft warning raised on the way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferencingChoice {
    pub d: usize,
    pub seasonal_d: usize,
    pub warning: Option<String>,
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
}

fn diff_values(values: &[f64], lag: usize) -> Vec<f64> {
    (lag..values.len()).map(|t| values[t] - values[t - lag]).collect()
}

/// Decide (d, D) with d, D in {0, 1}.
///
/// D = 1 when one seasonal difference reduces the sample standard
/// deviation and does so at least as well as one first difference
/// would (otherwise the first difference is the better single
/// operator and the seasonal pass is skipped). d = 1 when a KPSS
/// level test rejects at 5% on the possibly seasonally differenced
/// series and a first difference reduces its standard deviation.
pub fn choose_differencing(y: &TimeSeries, period: usize) -> Result<DifferencingChoice> {
    let values = y.values();
    let mut warning = None;

    if values.len() < 8 {
        return Ok(DifferencingChoice {
            d: 0,
            seasonal_d: 0,
            warning: Some(format!(
                "series of {} points too short for differencing tests",
                values.len()
            )),
        });
    }

    let mut seasonal_d = 0;
    if period > 1 {
        if values.len() >= 2 * period + 2 {
            let sd_level = sample_sd(values);
            let sd_seasonal = sample_sd(&diff_values(values, period));
            let sd_first = sample_sd(&diff_values(values, 1));
            if sd_seasonal < sd_level && sd_seasonal <= sd_first {
                seasonal_d = 1;
            }
        } else {
            warning = Some(format!(
                "length {} below two seasons of {period}; seasonal differencing skipped",
                values.len()
            ));
        }
    }

    let base: Vec<f64> = if seasonal_d == 1 {
        diff_values(values, period)
    } else {
        values.to_vec()
    };

    let mut d = 0;
    if base.len() >= 8 {
        let rejects = kpss_level_statistic(&base) > KPSS_LEVEL_CRIT_5PCT;
        let reduces = sample_sd(&diff_values(&base, 1)) < sample_sd(&base);
        if rejects && reduces {
            d = 1;
        }
    }

    Ok(DifferencingChoice {
        d,
        seasonal_d,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn white_noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    }

    #[test]
    fn kpss_accepts_white_noise_and_rejects_random_walk() {
        let mut accept = 0;
        let mut reject = 0;
        for seed in 0..20 {
            let wn = white_noise(300, seed);
            if kpss_level_statistic(&wn) <= KPSS_LEVEL_CRIT_5PCT {
                accept += 1;
            }
            let mut rw = wn.clone();
            for i in 1..rw.len() {
                rw[i] += rw[i - 1];
            }
            if kpss_level_statistic(&rw) > KPSS_LEVEL_CRIT_5PCT {
                reject += 1;
            }
        }
        assert!(accept >= 18, "KPSS false-rejected white noise: {accept}/20 accepted");
        assert!(reject >= 18, "KPSS missed random walks: {reject}/20 rejected");
    }

    #[test]
    fn seasonal_random_walk_gets_seasonal_difference() {
        let s = 12;
        let mut hits = 0;
        for seed in 0..50 {
            let eps = white_noise(240, 100 + seed);
            let mut y = vec![0.0; 240];
            for t in 0..240 {
                y[t] = if t >= s { y[t - s] + eps[t] } else { eps[t] * 3.0 };
            }
            let ts = TimeSeries::new(y, s).unwrap();
            let choice = choose_differencing(&ts, s).unwrap();
            if choice.seasonal_d == 1 {
                hits += 1;
            }
        }
        assert!(hits >= 45, "seasonal D=1 chosen in {hits}/50 runs");
    }

    #[test]
    fn white_noise_needs_no_differencing() {
        let mut hits = 0;
        for seed in 0..50 {
            let ts = TimeSeries::new(white_noise(240, 200 + seed), 12).unwrap();
            let choice = choose_differencing(&ts, 12).unwrap();
            if choice.d == 0 && choice.seasonal_d == 0 {
                hits += 1;
            }
        }
        assert!(hits >= 45, "(0,0) chosen in {hits}/50 runs");
    }

    #[test]
    fn random_walk_gets_first_difference_only() {
        let mut hits = 0;
        for seed in 0..50 {
            let eps = white_noise(240, 300 + seed);
            let mut y = vec![0.0; 240];
            y[0] = eps[0];
            for t in 1..240 {
                y[t] = y[t - 1] + eps[t];
            }
            let ts = TimeSeries::new(y, 12).unwrap();
            let choice = choose_differencing(&ts, 12).unwrap();
            if choice.d == 1 && choice.seasonal_d == 0 {
                hits += 1;
            }
        }
        assert!(hits >= 40, "(1,0) chosen in {hits}/50 runs");
    }

    #[test]
    fn short_series_soft_fallback() {
        let ts = TimeSeries::new(vec![1.0, 2.0, 3.0, 4.0], 12).unwrap();
        let choice = choose_differencing(&ts, 12).unwrap();
        assert_eq!((choice.d, choice.seasonal_d), (0, 0));
        assert!(choice.warning.is_some());
    }
}
