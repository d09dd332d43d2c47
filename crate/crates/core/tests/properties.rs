//! Property tests for the module invariants.

use groupcast::diagnostics::ljung_box;
use groupcast::diff::{difference, integrate};
use groupcast::grouping::{build_structure, build_summing_matrix, AttributeSchema, SeriesKey};
use groupcast::metrics::mase;
use groupcast::reconcile::{bottom_up, reconcile, BaseForecasts, WeightSpec};
use groupcast::sarima::{check_feasibility, expand_ar_recursion, SarimaCoefficients, SarimaOrder};
use groupcast::transform::{box_cox, inv_box_cox, BoxCoxParam};
use groupcast::TimeSeries;

use nalgebra::DMatrix;
use proptest::prelude::*;

fn positive_series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1000.0, 4..60)
}

proptest! {
    #[test]
    fn box_cox_round_trip(values in positive_series(), lambda in -1.0f64..2.0) {
        let y = TimeSeries::new(values, 1).unwrap();
        let lam = BoxCoxParam::new(lambda);
        let z = box_cox(&y, lam).unwrap();
        let back = inv_box_cox(&z, lam).unwrap();
        for (a, b) in y.values().iter().zip(back.values()) {
            prop_assert!(((a - b) / a).abs() <= 1e-10, "{a} vs {b} at lambda {lambda}");
        }
    }

    #[test]
    fn box_cox_zero_is_log(values in positive_series()) {
        let y = TimeSeries::new(values, 1).unwrap();
        let z = box_cox(&y, BoxCoxParam::log()).unwrap();
        for (a, b) in y.values().iter().zip(z.values()) {
            prop_assert_eq!(a.ln(), *b);
        }
    }

    #[test]
    fn difference_integrate_exact_on_counts(
        counts in prop::collection::vec(0i32..100_000, 10..50),
        lag in 1usize..5,
        order in 1usize..3,
    ) {
        // integer-valued series (demand counts) round-trip bit-exactly
        prop_assume!(counts.len() > lag * order);
        let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let y = TimeSeries::new(values, 1).unwrap();
        let (z, spec) = difference(&y, lag, order).unwrap();
        prop_assert_eq!(z.len(), y.len() - lag * order);
        let back = integrate(&z, &spec).unwrap();
        prop_assert_eq!(y.values(), back.values());
    }

    #[test]
    fn difference_integrate_identity_on_floats(
        values in prop::collection::vec(-500.0f64..500.0, 10..50),
        lag in 1usize..5,
        order in 1usize..3,
    ) {
        prop_assume!(values.len() > lag * order);
        let y = TimeSeries::new(values.clone(), 1).unwrap();
        let (z, spec) = difference(&y, lag, order).unwrap();
        let back = integrate(&z, &spec).unwrap();
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale * values.len() as f64;
        for (a, b) in y.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= tol, "{a} vs {b}, tol {tol}");
        }
    }

    #[test]
    fn expansion_weights_sum_to_one_under_differencing(
        phi in -0.6f64..0.6,
        seasonal_phi in -0.6f64..0.6,
        d in 0usize..2,
        seasonal_d in 0usize..2,
    ) {
        prop_assume!(d + seasonal_d >= 1);
        let order = SarimaOrder::new(1, d, 0, 1, seasonal_d, 0, 12).unwrap();
        let coeffs = SarimaCoefficients {
            ar: vec![phi],
            seasonal_ar: vec![seasonal_phi],
            ..SarimaCoefficients::zeros(&order)
        };
        let weights = expand_ar_recursion(&order, &coeffs);
        let total: f64 = weights.values().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "weights sum {total}");
        prop_assert_eq!(*weights.keys().max().unwrap(), order.max_ar_lag());
    }

    #[test]
    fn feasibility_never_relaxed_by_larger_orders(
        p in 0usize..4, d in 0usize..2, q in 0usize..4,
        sp in 0usize..2, sd in 0usize..2, sq in 0usize..2,
        s in 1usize..60, len in 1usize..400, bump in 0usize..6,
    ) {
        let (sp, sd, sq) = if s == 1 { (0, 0, 0) } else { (sp, sd, sq) };
        let order = SarimaOrder::new(p, d, q, sp, sd, sq, s).unwrap();
        let mut bigger = [p, d, q, sp, sd, sq];
        bigger[bump] += 1;
        if s == 1 && bump >= 3 {
            return Ok(());
        }
        let bigger =
            SarimaOrder::new(bigger[0], bigger[1], bigger[2], bigger[3], bigger[4], bigger[5], s)
                .unwrap();
        let a = check_feasibility(&order, len);
        let b = check_feasibility(&bigger, len);
        prop_assert!(!(b.feasible_for_fit && !a.feasible_for_fit));
        prop_assert!(!(b.feasible_for_forecast && !a.feasible_for_forecast));
    }

    #[test]
    fn ljung_box_scale_invariance(
        values in prop::collection::vec(-10.0f64..10.0, 16..80),
        scale in 0.001f64..1000.0,
    ) {
        let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-6);
        let a = ljung_box(&TimeSeries::new(values.clone(), 1).unwrap(), 5, 0).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let b = ljung_box(&TimeSeries::new(scaled, 1).unwrap(), 5, 0).unwrap();
        prop_assert!((a.q_star - b.q_star).abs() <= 1e-6 * a.q_star.max(1.0));
    }

    #[test]
    fn mase_positive_scaling_invariance(
        insample in prop::collection::vec(0.1f64..100.0, 6..30),
        errs in prop::collection::vec(-5.0f64..5.0, 1..8),
        scale in 0.001f64..1000.0,
    ) {
        let train = TimeSeries::new(insample.clone(), 1).unwrap();
        let actual: Vec<f64> = errs.iter().map(|e| 50.0 + e).collect();
        let forecast = vec![50.0; errs.len()];
        let base = mase(&actual, &forecast, &train, 1);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let scaled = mase(
            &actual.iter().map(|v| v * scale).collect::<Vec<_>>(),
            &forecast.iter().map(|v| v * scale).collect::<Vec<_>>(),
            &TimeSeries::new(insample.iter().map(|v| v * scale).collect(), 1).unwrap(),
            1,
        )
        .unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn reconciliation_output_is_coherent(
        bottoms in 2usize..6,
        base_values in prop::collection::vec(0.0f64..200.0, 8..40),
        diag in prop::collection::vec(0.2f64..5.0, 8),
    ) {
        // star structure: root + `bottoms` leaves
        let n = bottoms + 1;
        prop_assume!(base_values.len() >= n);
        let mut s = DMatrix::<f64>::zeros(n, bottoms);
        for j in 0..bottoms {
            s[(0, j)] = 1.0;
            s[(j + 1, j)] = 1.0;
        }
        let s = groupcast::grouping::SummingMatrix::from_matrix(s);
        let base = BaseForecasts::new(DMatrix::from_fn(n, 1, |i, _| base_values[i]));
        let mut w = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            w[(i, i)] = diag[i % diag.len()];
        }
        let weights = WeightSpec {
            kind: groupcast::reconcile::WeightKind::Wls,
            matrix: w,
            shrink_intensity: None,
            warnings: vec![],
        };
        for r in [
            reconcile(&base, &s, &weights).unwrap(),
            bottom_up(&base, &s).unwrap(),
        ] {
            prop_assert!(r.coherence_gap(&s) <= 1e-8);
        }
    }

    #[test]
    fn structure_round_trips_through_serialization(
        n_vals1 in 2usize..4,
        n_vals2 in 2usize..4,
    ) {
        let schema = AttributeSchema::new(vec![
            ("a".into(), (0..n_vals1).map(|v| format!("x{v}")).collect()),
            ("b".into(), (0..n_vals2).map(|v| format!("y{v}")).collect()),
        ])
        .unwrap();
        let mut bottoms = Vec::new();
        for i in 0..n_vals1 {
            for j in 0..n_vals2 {
                bottoms.push(
                    SeriesKey::from_pairs(
                        &schema,
                        &[("a", &format!("x{i}")), ("b", &format!("y{j}"))],
                    )
                    .unwrap(),
                );
            }
        }
        let levels = vec![vec!["a".to_string()], vec!["b".to_string()]];
        let structure = build_structure(&schema, &levels, &bottoms).unwrap();
        let json = serde_json::to_string(&structure).unwrap();
        let back: groupcast::grouping::GroupStructure = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(structure.nodes(), back.nodes());
        let s1 = build_summing_matrix(&structure);
        let s2 = build_summing_matrix(&back);
        prop_assert_eq!(s1.matrix(), s2.matrix());
    }
}
