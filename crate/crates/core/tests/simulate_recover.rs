//! Simulate-recover oracles: the estimator, the automatic search, and
//! the residual diagnostics are checked against data generated from
//! known models with fixed seeds.

use groupcast::diagnostics::ljung_box;
use groupcast::sarima::{fit, simulate, SarimaCoefficients, SarimaOrder};
use groupcast::selection::{auto_select, IcKind, SearchConfig};
use groupcast::TimeSeries;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn ma1_coefficient_recovery() {
    let order = SarimaOrder::non_seasonal(0, 0, 1);
    let truth = SarimaCoefficients {
        ma: vec![0.6],
        sigma2: 1.0,
        ..SarimaCoefficients::zeros(&order)
    };
    let mut hits = 0;
    for seed in 0..50u64 {
        let y = simulate(&order, &truth, 500, 1000 + seed).unwrap();
        let model = fit(&y, &order, true).unwrap();
        let theta = model.coeffs.ma[0];
        if (0.5..=0.7).contains(&theta) {
            hits += 1;
        }
    }
    assert!(hits >= 45, "theta in [0.5, 0.7] for {hits}/50 seeds");
}

#[test]
fn seasonal_ma1_coefficient_recovery() {
    let order = SarimaOrder::new(0, 0, 1, 0, 1, 0, 12).unwrap();
    let truth = SarimaCoefficients {
        ma: vec![0.5],
        sigma2: 1.0,
        ..SarimaCoefficients::zeros(&order)
    };
    let mut hits = 0;
    for seed in 0..50u64 {
        let y = simulate(&order, &truth, 240, 2000 + seed).unwrap();
        let model = fit(&y, &order, false).unwrap();
        let theta = model.coeffs.ma[0];
        if (0.35..=0.65).contains(&theta) {
            hits += 1;
        }
    }
    assert!(hits >= 40, "theta in [0.35, 0.65] for {hits}/50 seeds");
}

/// BIC ranking: consistent for order identification. AIC-family
/// criteria are not, and overselect when the candidate grid is
/// exhaustive.
fn recovery_config() -> SearchConfig {
    SearchConfig {
        criterion: IcKind::Bic,
        ..SearchConfig::default()
    }
}

#[test]
fn auto_select_recovers_seasonal_ma() {
    let order = SarimaOrder::new(0, 0, 1, 0, 1, 0, 12).unwrap();
    let truth = SarimaCoefficients {
        ma: vec![0.5],
        sigma2: 1.0,
        ..SarimaCoefficients::zeros(&order)
    };
    let config = recovery_config();
    let mut exact = 0;
    for seed in 0..50u64 {
        let y = simulate(&order, &truth, 240, 3000 + seed).unwrap();
        let result = auto_select(&y, 12, &config).unwrap();
        if result.best.order == order {
            exact += 1;
        }
        // whenever the generating order was a candidate, the winner's
        // criterion cannot exceed its criterion
        if result.differencing == (0, 1) {
            let generating = result.candidates.iter().find(|c| c.order == order);
            if let (Some(c), true) = (generating, result.best_criteria.bic.is_finite()) {
                if let Some(gc) = c.criteria {
                    assert!(
                        result.best_criteria.bic <= gc.bic + 1e-9,
                        "seed {seed}: winner bic {} above generating {}",
                        result.best_criteria.bic,
                        gc.bic
                    );
                }
            }
        }
    }
    assert!(exact >= 30, "generating order selected in {exact}/50 seeds");
}

#[test]
fn auto_select_keeps_white_noise_simple() {
    let order = SarimaOrder::non_seasonal(0, 0, 0);
    let truth = SarimaCoefficients {
        intercept: 20.0,
        sigma2: 4.0,
        ..SarimaCoefficients::zeros(&order)
    };
    let config = recovery_config();
    let mut nulls = 0;
    for seed in 0..50u64 {
        let y = simulate(&order, &truth, 240, 4000 + seed).unwrap();
        let y = TimeSeries::new(y.values().to_vec(), 12).unwrap();
        let result = auto_select(&y, 12, &config).unwrap();
        let o = result.best.order;
        if o.p == 0 && o.d == 0 && o.q == 0 && o.sp == 0 && o.sd == 0 && o.sq == 0 {
            nulls += 1;
        }
    }
    assert!(nulls >= 30, "white-noise order selected in {nulls}/50 seeds");
}

#[test]
fn ljung_box_monte_carlo_calibration() {
    // 500 white-noise series of length 110, tested at l = 20, K = 0:
    // the rejection rate at 5% must sit near the nominal level
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rejections = 0;
    for _ in 0..500 {
        let values: Vec<f64> = (0..110).map(|_| normal.sample(&mut rng)).collect();
        let ts = TimeSeries::new(values, 1).unwrap();
        let r = ljung_box(&ts, 20, 0).unwrap();
        if r.p_value < 0.05 {
            rejections += 1;
        }
    }
    let fraction = rejections as f64 / 500.0;
    assert!(
        (0.02..=0.09).contains(&fraction),
        "rejection fraction {fraction} outside [0.02, 0.09]"
    );
}

#[test]
fn well_specified_fit_passes_ljung_box() {
    let order = SarimaOrder::non_seasonal(1, 0, 0);
    let truth = SarimaCoefficients {
        ar: vec![0.5],
        sigma2: 1.0,
        ..SarimaCoefficients::zeros(&order)
    };
    let mut passes = 0;
    for seed in 0..50u64 {
        let y = simulate(&order, &truth, 200, 5000 + seed).unwrap();
        let model = fit(&y, &order, true).unwrap();
        let r = ljung_box(&model.residuals, 10, 1).unwrap();
        if r.p_value > 0.05 {
            passes += 1;
        }
    }
    assert!(passes >= 40, "Ljung-Box passed for {passes}/50 fits");
}

#[test]
fn seasonal_ma_memory_limits_forecast_horizon() {
    // a (0,0,1)(0,1,0)^s model reverts to the seasonal-naive forecast
    // beyond the first step: the MA term only affects h = 1
    let order = SarimaOrder::new(0, 0, 1, 0, 1, 0, 12).unwrap();
    let truth = SarimaCoefficients {
        ma: vec![0.5],
        sigma2: 1.0,
        ..SarimaCoefficients::zeros(&order)
    };
    let y = simulate(&order, &truth, 240, 77).unwrap();
    let model = fit(&y, &order, false).unwrap();
    let f = groupcast::sarima::forecast(&model, &y, 6).unwrap();
    let values = y.values();
    for h in 1..6 {
        let expected = values[240 - 12 + h];
        assert!(
            (f[h] - expected).abs() < 1e-9,
            "h = {h}: {} vs seasonal naive {expected}",
            f[h]
        );
    }
    // h = 1 includes the MA correction, so it differs unless theta ~ 0
    assert!((f[0] - values[240 - 12]).abs() > 1e-9 || model.coeffs.ma[0].abs() < 1e-6);
}
