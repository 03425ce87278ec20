use proptest::prelude::*;
use sections_core::profiles::{
    check_product_conditions, check_radial_conditions, closed_form_xi, modulus_report, modulus_xi, Condition,
    ConvexProfile, RadialProfile,
};

fn families() -> Vec<ConvexProfile> {
    vec![
        ConvexProfile::gaussian(),
        ConvexProfile::cosh(),
        ConvexProfile::power(1.5).unwrap(),
        ConvexProfile::power(3.0).unwrap(),
        ConvexProfile::power(4.0).unwrap(),
    ]
}

#[test]
fn derivative_examples() {
    assert_eq!(ConvexProfile::power(2.0).unwrap().eval(3.0, 0).unwrap(), 9.0);
    assert_eq!(ConvexProfile::cosh().eval(0.0, 3).unwrap(), 0.0);
    assert!((ConvexProfile::power(4.0).unwrap().eval(2.0, 2).unwrap() - 48.0).abs() < 1e-12);
}

#[test]
fn xi_is_monotone_on_a_grid() {
    let rs = [0.25, 0.5, 1.0, 1.5, 2.0];
    let ts = [2.0, 4.0, 8.0, 16.0, 32.0];
    for g in families() {
        let table: Vec<Vec<f64>> = rs
            .iter()
            .map(|&r| ts.iter().map(|&t| modulus_xi(&g, r, t).unwrap()).collect())
            .collect();
        for (i, row) in table.iter().enumerate() {
            for j in 1..ts.len() {
                assert!(row[j] <= row[j - 1] * (1.0 + 1e-9), "{} not decreasing in t at r = {}", g.label(), rs[i]);
            }
        }
        for j in 0..ts.len() {
            for i in 1..rs.len() {
                assert!(
                    table[i][j] >= table[i - 1][j] * (1.0 - 1e-9),
                    "{} not increasing in r at t = {}",
                    g.label(),
                    ts[j]
                );
            }
        }
    }
}

#[test]
fn gaussian_modulus_vanishes() {
    let g = ConvexProfile::gaussian();
    for (r, t) in [(0.5, 1.0), (3.0, 40.0), (10.0, 0.1)] {
        assert_eq!(modulus_xi(&g, r, t).unwrap(), 0.0);
    }
}

#[test]
fn quartic_modulus_example() {
    let g = ConvexProfile::power(4.0).unwrap();
    let rep = modulus_report(&g, 1.0, 10.0).unwrap();
    let closed = closed_form_xi(&g, 1.0, 10.0).unwrap();
    assert!((rep.xi / closed - 1.0).abs() < 1e-3, "{} vs {closed}", rep.xi);
    // The quoted value 5.78e-3 carries three significant digits.
    assert!((rep.xi / 5.78e-3 - 1.0).abs() < 5e-3);
    assert!(rep.xi <= rep.bound_power.unwrap());
    assert!((rep.r_max.unwrap() - 25.0).abs() < 1e-12);
}

#[test]
fn cosh_modulus_order_of_magnitude() {
    let xi = modulus_xi(&ConvexProfile::cosh(), 1.0, 5.0).unwrap();
    let reference = (-2.5f64).exp();
    assert!(xi > reference / 2.0 && xi < reference * 2.0, "{xi}");
}

#[test]
fn product_condition_examples() {
    let quartic = ConvexProfile::power(4.0).unwrap();
    let grid: Vec<f64> = (1..=20).map(|k| k as f64).collect();
    let ok = check_product_conditions(&[quartic.clone(), quartic.clone()], 2.0, 0.5, 0.5, &grid).unwrap();
    assert!(ok.passed());
    let mixed = [ConvexProfile::power(2.0).unwrap(), quartic];
    let far: Vec<f64> = (1..=10).map(|k| 10.0 * k as f64).collect();
    let bad = check_product_conditions(&mixed, 2.0, 0.5, 5.0, &far).unwrap();
    assert!(bad.violations(Condition::B1) > 0);
    assert_eq!(bad.first_violation().unwrap().condition, Condition::B1);
}

#[test]
fn radial_condition_examples() {
    let grid = [2.0, 4.0, 8.0, 16.0];
    assert!(check_radial_conditions(&RadialProfile::power(4.0).unwrap(), 1.0, &grid).unwrap().passed());
    assert!(check_radial_conditions(&RadialProfile::half_square(), 1.0, &grid).unwrap().passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn builtin_derivatives_match_differences(t in -6.0f64..6.0) {
        let t = if t.abs() < 0.05 { t + 0.1 } else { t };
        for g in families() {
            prop_assert!(g.check_finite_differences(&[t], 1e-5).is_ok(), "{} at {}", g.label(), t);
        }
    }

    #[test]
    fn radial_derivatives_match_differences(t in 0.5f64..8.0) {
        for rho in [RadialProfile::power(4.0).unwrap(), RadialProfile::half_square(), RadialProfile::exp()] {
            prop_assert!(rho.check_finite_differences(&[t], 1e-5).is_ok(), "{} at {}", rho.label(), t);
        }
    }

    #[test]
    fn power_envelope_holds(p in 2.5f64..6.0, t in 2.0f64..30.0, frac in 0.05f64..1.0) {
        let g = ConvexProfile::power(p).unwrap();
        let r = frac * t.powf(p / 2.0) / 4.0;
        let xi = modulus_xi(&g, r, t).unwrap();
        prop_assert!(xi * t.powf(p / 2.0) <= 2.0 * (1.0 + 1e-9), "p = {}, t = {}, r = {}: {}", p, t, r, xi);
    }
}
