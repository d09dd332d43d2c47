//! Seeded synthetic data generators for demos and benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grouping::{SeriesKey, WeekRecord};

/// Bottom series sharing one seasonal signal plus independent noise.
///
/// Every bottom key gets `level + amplitude*sin(2*pi*w/period) + e` per
/// week with e ~ N(0, noise_sd^2) drawn independently per (key, week).
/// The shared signal makes the aggregates far smoother than any single
/// bottom series.
pub fn correlated_bottom_records(
    bottoms: &[SeriesKey],
    weeks: usize,
    period: usize,
    level: f64,
    amplitude: f64,
    noise_sd: f64,
    seed: u64,
) -> Vec<WeekRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sd).expect("positive noise sd");
    let mut records = Vec::with_capacity(bottoms.len() * weeks);
    for key in bottoms {
        for week in 0..weeks {
            let phase = 2.0 * std::f64::consts::PI * week as f64 / period as f64;
            let quantity = level + amplitude * phase.sin() + normal.sample(&mut rng);
            records.push(WeekRecord {
                week,
                key: key.clone(),
                quantity,
            });
        }
    }
    records
}

/// Positive integer demand with a multiplicative seasonal cycle, suitable
/// for log-transform pipelines. Each bottom gets its own level and phase
/// offset derived from its position.
pub fn seasonal_demand_records(
    bottoms: &[SeriesKey],
    weeks: usize,
    period: usize,
    base_level: f64,
    amplitude: f64,
    noise_sd: f64,
    seed: u64,
) -> Vec<WeekRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sd).expect("positive noise sd");
    let mut records = Vec::with_capacity(bottoms.len() * weeks);
    for (j, key) in bottoms.iter().enumerate() {
        let log_level = base_level.ln() + 0.25 * j as f64;
        let phase_offset = j as f64 * 0.8;
        for week in 0..weeks {
            let phase = 2.0 * std::f64::consts::PI * week as f64 / period as f64 + phase_offset;
            let log_qty = log_level + amplitude * phase.sin() + normal.sample(&mut rng);
            let quantity = log_qty.exp().round().max(1.0);
            records.push(WeekRecord {
                week,
                key: key.clone(),
                quantity,
            });
        }
    }
    records
}
