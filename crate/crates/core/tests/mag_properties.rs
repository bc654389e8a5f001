use std::f64::consts::{PI, TAU};

use glove_core::mag::{
    calibrate, decode_angle, simulate_field, unwrap_stream, CalibrationOptions, CalibrationState,
    FieldModel, MagSample,
};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    // (-pi, pi]
    (-PI..PI).prop_map(|t| -t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn noiseless_round_trip(theta in angle(), b0 in 0.01f64..100.0, ox in -50.0f64..50.0, oy in -50.0f64..50.0) {
        let model = FieldModel::new(b0, ox, oy);
        let s = simulate_field(theta, &model, 0).unwrap();
        let calib = CalibrationState::from_parameters(ox, oy, b0);
        let got = decode_angle(0, &s, &calib).unwrap().theta;
        // Offsets large relative to b0 cost digits in the subtraction.
        let tol = 1e-12 * (1.0 + (ox.abs() + oy.abs()) / b0);
        let diff = (got - theta + PI).rem_euclid(TAU) - PI;
        prop_assert!(diff.abs() <= tol, "theta {theta} got {got}");
    }

    #[test]
    fn ratio_cancellation(dx in -10.0f64..10.0, dy in -10.0f64..10.0, c in 1e-3f64..1e3) {
        prop_assume!(dx.abs() > 1e-3 || dy.abs() > 1e-3);
        let calib = CalibrationState::from_parameters(0.0, 0.0, 1e-6);
        let a = decode_angle(1, &MagSample::new(dx, dy, 0.0), &calib).unwrap().theta;
        let b = decode_angle(1, &MagSample::new(c * dx, c * dy, 0.0), &calib).unwrap().theta;
        let diff = (a - b + PI).rem_euclid(TAU) - PI;
        prop_assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn calibration_recovers_offsets(b0 in 0.1f64..10.0, ox in -5.0f64..5.0, oy in -5.0f64..5.0) {
        // A sweep through the four axis extrema plus intermediate angles.
        let model = FieldModel::new(b0, ox, oy);
        let sweep: Vec<MagSample> = (0..16)
            .map(|i| {
                let t = i as f64 * TAU / 16.0;
                let (bx, by) = model.ideal(t);
                MagSample::new(bx, by, i as f64)
            })
            .collect();
        let opts = CalibrationOptions { expected_b0: b0, ..Default::default() };
        let c = calibrate(&sweep, &opts).unwrap();
        prop_assert!((c.ox - ox).abs() <= 1e-12 * (1.0 + ox.abs() + b0));
        prop_assert!((c.oy - oy).abs() <= 1e-12 * (1.0 + oy.abs() + b0));
        prop_assert!((c.b0 - b0).abs() <= 1e-12 * (1.0 + b0));
    }

    #[test]
    fn unwrap_preserves_residues(angles in prop::collection::vec(angle(), 1..200)) {
        let u = unwrap_stream(&angles);
        prop_assert_eq!(u.len(), angles.len());
        for (a, b) in angles.iter().zip(&u) {
            let r = (b - a) / TAU;
            prop_assert!((r - r.round()).abs() < 1e-12);
        }
        for w in u.windows(2) {
            prop_assert!((w[1] - w[0]).abs() <= PI + 1e-12);
        }
    }
}
