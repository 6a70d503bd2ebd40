use catsoft::updates::{
    atsoft_statistics, catsoft_step, quantile_threshold, soft_update, tsoft_update, AtSoftConfig,
    AtSoftState, ParamSubset, TSoftState,
};
use proptest::prelude::*;

const EPS: f64 = 1e-5;

fn subset(values: Vec<f64>) -> ParamSubset {
    ParamSubset::new("p", values).unwrap()
}

/// (main, target, sigma_sq) of a common length.
fn triple(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1..=max_len).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0..100.0f64, n),
            prop::collection::vec(-100.0..100.0f64, n),
            prop::collection::vec(1e-10..1e2f64, n),
        )
    })
}

fn config() -> impl Strategy<Value = AtSoftConfig> {
    (1e-3..=1.0f64, 0.1..10.0f64, 0.0..=1.0f64, 0.0..=1.0f64)
        .prop_map(|(tau, nu_lower, lambda, q)| AtSoftConfig::catsoft(tau, nu_lower, lambda, q))
}

proptest! {
    #[test]
    fn rates_stay_in_bounds((m, t, s) in triple(16), cfg in config(), extra in 0.0..20.0f64) {
        let state = AtSoftState { target: t, sigma_sq: s, nu_tilde: cfg.nu_lower + extra };
        let stats = atsoft_statistics(&subset(m), &state, &cfg).unwrap();
        let r = stats.report;
        prop_assert!(r.tau1 > 0.0 && r.tau1 <= cfg.tau, "tau1 = {}", r.tau1);
        prop_assert!(r.tau2 > 0.0 && r.tau2 <= cfg.tau, "tau2 = {}", r.tau2);
        prop_assert!(r.tau_c >= 0.0 && r.tau_c <= cfg.lambda * cfg.tau, "tau_c = {}", r.tau_c);
    }

    #[test]
    fn floors_hold_over_a_stream(
        stream in prop::collection::vec(prop::collection::vec(-50.0..50.0f64, 6), 1..40),
        cfg in config(),
    ) {
        let mut main = subset(stream[0].clone());
        let mut state = AtSoftState::new(&main, &cfg).unwrap();
        for values in &stream {
            main.values.clone_from(values);
            catsoft_step(&mut main, &mut state, &cfg).unwrap();
            prop_assert!(state.nu_tilde >= cfg.nu_lower, "nu_tilde = {}", state.nu_tilde);
            for &s in &state.sigma_sq {
                prop_assert!(s >= cfg.epsilon * cfg.epsilon, "sigma_sq = {s}");
            }
        }
    }

    #[test]
    fn zero_deviation_gives_full_rate(values in prop::collection::vec(-10.0..10.0f64, 1..20), cfg in config()) {
        let main = subset(values);
        let state = AtSoftState::new(&main, &cfg).unwrap();
        let r = atsoft_statistics(&main, &state, &cfg).unwrap().report;
        prop_assert!(((r.tau1 - cfg.tau) / cfg.tau).abs() <= 1e-12);
        prop_assert_eq!(r.tau_c, 0.0);
    }

    #[test]
    fn robustness_decreases_in_d(nu in 0.1..10.0f64, s in 1e-4..10.0f64) {
        let cfg = AtSoftConfig::atsoft(0.1, 0.1);
        let mut previous = f64::INFINITY;
        for k in 0..50 {
            // one element, so D = dev² / s
            let d = 0.01 * 1.3f64.powi(k);
            let dev = (d * s).sqrt();
            let state = AtSoftState { target: vec![0.0], sigma_sq: vec![s], nu_tilde: nu };
            let tau1 = atsoft_statistics(&subset(vec![dev]), &state, &cfg).unwrap().report.tau1;
            prop_assert!(tau1 < previous, "tau1 not decreasing at D = {d}");
            previous = tau1;
        }
    }

    #[test]
    fn q_one_selects_the_argmax((m, t, s) in triple(24)) {
        let cfg = AtSoftConfig::catsoft(0.1, 1.0, 1.0, 1.0);
        let mut main = subset(m);
        let mut state = AtSoftState { target: t, sigma_sq: s, nu_tilde: 1.5 };
        let stats = atsoft_statistics(&main, &state, &cfg).unwrap();
        let max = stats.delta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expected: Vec<usize> = (0..stats.delta.len()).filter(|&j| stats.delta[j] == max).collect();
        let report = catsoft_step(&mut main, &mut state, &cfg).unwrap();
        prop_assert_eq!(report.consolidated_indices, expected);
    }

    #[test]
    fn equal_pair_is_a_fixed_point(values in prop::collection::vec(-10.0..10.0f64, 1..20), cfg in config()) {
        let mut main = subset(values.clone());
        let mut state = AtSoftState::new(&main, &cfg).unwrap();
        for _ in 0..5 {
            catsoft_step(&mut main, &mut state, &cfg).unwrap();
        }
        prop_assert_eq!(&main.values, &values);
        prop_assert_eq!(&state.target, &values);
    }

    #[test]
    fn updates_are_deterministic((m, t, s) in triple(12), cfg in config()) {
        let run = || {
            let mut main = subset(m.clone());
            let mut state = AtSoftState { target: t.clone(), sigma_sq: s.clone(), nu_tilde: cfg.nu_lower + 0.5 };
            let report = catsoft_step(&mut main, &mut state, &cfg).unwrap();
            (main, state, report)
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.0, b.0);
        prop_assert_eq!(a.1, b.1);
        prop_assert_eq!(a.2, b.2);
    }

    #[test]
    fn huge_nu_tsoft_matches_soft(
        init in prop::collection::vec(-1.0..1.0f64, 4),
        next in prop::collection::vec(-1.0..1.0f64, 4),
        tau in 0.01..=1.0f64,
    ) {
        let main0 = subset(init);
        let mut state = TSoftState::new(&main0, tau, EPS).unwrap();
        // scale so that Δ²/σ² stays within 10³
        state.sigma_sq = 1.0;
        let main1 = subset(next);
        let r = tsoft_update(&main1, &mut state, tau, 1e9).unwrap();
        prop_assert!((r.tau1 - tau).abs() <= 1e-6, "tau_i = {} vs {tau}", r.tau1);

        let mut soft = main0.values.clone();
        soft_update(&main1, &mut soft, tau).unwrap();
        for (a, b) in soft.iter().zip(&state.target) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn quantile_is_an_element(values in prop::collection::vec(-1e3..1e3f64, 1..50), q in 0.0..=1.0f64) {
        let th = quantile_threshold(&values, q).unwrap();
        prop_assert!(values.contains(&th));
        let at_least = values.iter().filter(|&&v| v >= th).count();
        prop_assert!(at_least >= 1);
    }
}
