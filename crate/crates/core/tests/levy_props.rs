mod common;

use common::{arb_cdf, brute_condition_a, brute_levy, brute_levy_to_h0, h};
use probmetric::delta_plus::{leq, StepCdf};
use probmetric::levy_metric::{condition_a, levy_distance, levy_to_h0, LevyConfig, LevyError};
use proptest::prelude::*;

fn cfg() -> LevyConfig {
    LevyConfig::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn metric_axioms(f in arb_cdf(), g in arb_cdf(), k in arb_cdf()) {
        let c = cfg();
        let fg = levy_distance(&f, &g, &c);
        prop_assert_eq!(fg, levy_distance(&g, &f, &c));
        prop_assert_eq!(fg == 0.0, f == g);
        prop_assert!((0.0..=1.0).contains(&fg));
        let fk = levy_distance(&f, &k, &c);
        let kg = levy_distance(&k, &g, &c);
        prop_assert!(fg <= fk + kg + 3e-10, "{fg} > {fk} + {kg}");
    }

    #[test]
    fn probe_is_monotone(f in arb_cdf(), g in arb_cdf(), a in 0.001..1.0_f64, b in 0.001..1.0_f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if condition_a(&f, &g, lo).unwrap() {
            prop_assert!(condition_a(&f, &g, hi).unwrap());
        }
    }

    #[test]
    fn probe_matches_dense_check(f in arb_cdf(), g in arb_cdf(), hh in 0.01..1.0_f64) {
        prop_assert_eq!(condition_a(&f, &g, hh).unwrap(), brute_condition_a(&f, &g, hh));
    }

    #[test]
    fn distance_to_h0_is_exact(f in arb_cdf()) {
        let exact = levy_to_h0(&f);
        let via_bisection = levy_distance(&f, &StepCdf::h0(), &cfg());
        prop_assert!((exact - via_bisection).abs() <= 2e-10);
        prop_assert!((exact - brute_levy_to_h0(&f)).abs() <= 1e-5 + 1e-12);
    }

    #[test]
    fn distance_to_h0_is_antitone(f in arb_cdf(), g in arb_cdf()) {
        let upper = probmetric::delta_plus::sup2(&f, &g);
        prop_assert!(leq(&f, &upper));
        prop_assert!(levy_to_h0(&upper) <= levy_to_h0(&f) + 2e-10);
        if leq(&f, &g) {
            prop_assert!(levy_to_h0(&g) <= levy_to_h0(&f) + 2e-10);
        }
    }

    #[test]
    fn neighborhood_lemma(f in arb_cdf(), t in 0.0..1.2_f64) {
        let d = levy_to_h0(&f);
        let near_jump = (1.0 - t).abs() < 1e-6
            || f.breaks().iter().any(|&(a, v)| (a - t).abs() < 1e-6 || (1.0 - v - t).abs() < 1e-6);
        prop_assume!((d - t).abs() > 1e-6 && !near_jump);
        prop_assert_eq!(f.evaluate(t) > 1.0 - t, d < t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bisection_matches_brute_force(f in arb_cdf(), g in arb_cdf()) {
        let d = levy_distance(&f, &g, &cfg());
        let b = brute_levy(&f, &g);
        prop_assert!((d - b).abs() <= 2e-4, "levy {d} vs brute {b}");
    }
}

#[test]
fn heaviside_closed_form() {
    let c = cfg();
    for (a, b) in [(0.2, 0.7), (0.0, 1.0), (0.0, 0.3), (1.5, 1.9), (0.1, 1.8)] {
        let d = levy_distance(&h(a), &h(b), &c);
        assert!((d - (b - a).abs().min(1.0)).abs() <= 2e-10, "{a} {b} {d}");
    }
    // Beyond t = 1/h the condition is not examined, which caps the distance
    // between distant jumps by 1/min(a, b).
    let d = levy_distance(&h(5.0), &h(7.0), &c);
    assert!((d - 0.2).abs() <= 2e-10);
    let d = levy_distance(&StepCdf::h_inf(), &StepCdf::h0(), &c);
    assert!((d - 1.0).abs() <= 1e-10);
}

#[test]
fn probe_examples() {
    assert!(condition_a(&h(0.2), &h(0.7), 0.4).unwrap());
    assert!(!condition_a(&h(0.7), &h(0.2), 0.4).unwrap());
    assert!(condition_a(&StepCdf::h_inf(), &StepCdf::h0(), 1.0).unwrap());
    assert_eq!(
        condition_a(&h(0.0), &h(1.0), 0.0),
        Err(LevyError::ProbeOutOfRange(0.0))
    );
    assert_eq!(
        condition_a(&h(0.0), &h(1.0), 1.5),
        Err(LevyError::ProbeOutOfRange(1.5))
    );
}

#[test]
fn config_validation() {
    assert!(LevyConfig::new(1e-10, 60).is_ok());
    assert!(matches!(LevyConfig::new(0.0, 60), Err(LevyError::InvalidTolerance(_))));
    assert!(matches!(
        LevyConfig::new(1e-10, 10),
        Err(LevyError::TooFewIterations { .. })
    ));
}
