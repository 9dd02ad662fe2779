use ironface::weights::{
    check_initial_condition, check_unitarity, check_yang_baxter, classify, corner_index, corners_of, face_weight_table,
    vertex_weights, WeightClass,
};
use ironface::{IronfaceError, Regime, RegimeKind};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn regime_strategy() -> impl Strategy<Value = Regime> {
    prop_oneof![
        (0.2f64..2.9).prop_map(|g| Regime::critical(g).unwrap()),
        (0.2f64..2.5).prop_map(|g| Regime::massive(g).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn yang_baxter_holds(regime in regime_strategy(), a in -0.45f64..0.45, b in -0.45f64..0.45, ia in -0.5f64..0.5, ib in -0.5f64..0.5) {
        let s = regime.gamma.min(PI - regime.gamma);
        let r = check_yang_baxter(Complex64::new(a * s, ia), Complex64::new(b * s, ib), &regime).unwrap();
        prop_assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn unitarity_holds(regime in regime_strategy(), a in -0.45f64..0.45, ia in -0.5f64..0.5) {
        let s = regime.gamma.min(PI - regime.gamma);
        let (r, _) = check_unitarity(Complex64::new(a * s, ia), &regime).unwrap();
        prop_assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn delta_matches_weights(regime in regime_strategy(), a in -0.4f64..0.4) {
        let w = vertex_weights(Complex64::new(a * regime.gamma.min(PI - regime.gamma), 0.0), &regime).unwrap();
        let err = (w.delta() - Complex64::new(regime.delta(), 0.0)).norm();
        prop_assert!(err < 1e-12 * regime.delta().abs().max(1.0), "error {err}");
    }
}

#[test]
fn initial_condition_both_regimes() {
    for d in [-0.7, 0.0, 0.5, 2.0] {
        assert!(check_initial_condition(&Regime::from_delta(d).unwrap()).unwrap() < 1e-14);
    }
}

#[test]
fn regime_from_delta() {
    assert_eq!(Regime::from_delta(0.5).unwrap().kind, RegimeKind::Critical);
    assert_eq!(Regime::from_delta(1.5).unwrap().kind, RegimeKind::Massive);
    assert!(matches!(Regime::from_delta(1.0), Err(IronfaceError::InvalidParameter(_))));
    assert!(Regime::from_delta(-1.5).is_err());
    assert!((Regime::from_delta(0.0).unwrap().gamma - PI / 2.0).abs() < 1e-15);
}

#[test]
fn corner_roundtrip_and_classes() {
    for i in 0..16 {
        let [a, b, c, d] = corners_of(i);
        assert_eq!(corner_index(a, b, c, d), i);
    }
    let regime = Regime::from_delta(0.3).unwrap();
    let t = face_weight_table(Complex64::new(0.2, 0.0), &regime, None).unwrap();
    // each of the four classes appears on four corner configurations
    assert_eq!(t.class_counts(), [4, 4, 4, 4]);
    assert_eq!(classify(1, 1, 1, 1), WeightClass::A);
}

#[test]
fn rotated_weight_is_a_quarter_turn() {
    let regime = Regime::from_delta(0.3).unwrap();
    let t = face_weight_table(Complex64::new(0.2, 0.1), &regime, None).unwrap();
    for i in 0..16 {
        let [a, b, c, d] = corners_of(i);
        assert_eq!(t.w_bar(a, b, c, d), t.w(b, c, d, a));
    }
}
