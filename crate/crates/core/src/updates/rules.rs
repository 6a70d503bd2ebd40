use serde::{Deserialize, Serialize};

use super::{
    check_same_len, check_tau, deviation_mean, mean_sq_deviation, ParamSubset, UpdateReport,
};
use crate::error::{config_err, ensure_finite, Error, Result};

/// Periodic copy of main into target.
///
/// Copies every subset when `step % period == 0` and returns whether it did.
pub fn hard_update(
    main: &[ParamSubset],
    targets: &mut [ParamSubset],
    period: u64,
    step: u64,
) -> Result<bool> {
    if period == 0 {
        return Err(config_err("period", "must be positive"));
    }
    if main.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} main subsets but {} targets",
            main.len(),
            targets.len()
        )));
    }
    for (m, t) in main.iter().zip(targets.iter()) {
        if m.id != t.id {
            return Err(Error::Shape(format!(
                "subset `{}` paired with `{}`",
                m.id, t.id
            )));
        }
        check_same_len(&m.id, &m.values, &t.values)?;
    }
    if !step.is_multiple_of(period) {
        return Ok(false);
    }
    for (m, t) in main.iter().zip(targets.iter_mut()) {
        t.values.copy_from_slice(&m.values);
    }
    Ok(true)
}

/// Exponential moving average: `target <- (1 - tau) target + tau main`.
pub fn soft_update(main: &ParamSubset, target: &mut [f64], tau: f64) -> Result<()> {
    check_tau(tau)?;
    check_same_len(&main.id, &main.values, target)?;
    for (t, m) in target.iter_mut().zip(&main.values) {
        *t += tau * (m - *t);
    }
    Ok(())
}

/// State of the fixed-ν T-soft rule for one subset. The scale is a single
/// scalar shared by all elements of the subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSoftState {
    pub target: Vec<f64>,
    pub sigma_sq: f64,
    /// Accumulated weight `W`.
    pub w: f64,
}

impl TSoftState {
    /// `target = main`, `W = (1 - tau) / tau`, `sigma = epsilon`.
    pub fn new(main: &ParamSubset, tau: f64, epsilon: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(epsilon > 0.0) {
            return Err(config_err("epsilon", "must be positive"));
        }
        main.validate()?;
        Ok(Self {
            target: main.values.clone(),
            sigma_sq: epsilon * epsilon,
            w: (1.0 - tau) / tau,
        })
    }
}

/// One T-soft step. All three state fields are computed from the pre-step
/// values and replaced together.
pub fn tsoft_update(
    main: &ParamSubset,
    state: &mut TSoftState,
    tau: f64,
    nu: f64,
) -> Result<UpdateReport> {
    check_tau(tau)?;
    if !(nu > 0.0) {
        return Err(config_err("nu", format!("must be positive, got {nu}")));
    }
    check_same_len(&main.id, &main.values, &state.target)?;
    ensure_finite(&main.id, &main.values)?;
    if !(state.sigma_sq > 0.0 && state.w > 0.0) {
        return Err(Error::Numeric(format!("T-soft state of `{}`", main.id)));
    }

    let delta_sq = mean_sq_deviation(&main.values, &state.target);
    let normalized = delta_sq / state.sigma_sq;
    let weight = (nu + 1.0) / (nu + normalized);
    let tau_loc = weight / (state.w + weight);
    let tau_scale = tau * weight * nu / (nu + 1.0);

    let target: Vec<f64> = state
        .target
        .iter()
        .zip(&main.values)
        .map(|(t, m)| t + tau_loc * (m - t))
        .collect();
    let sigma_sq = state.sigma_sq + tau_scale * (delta_sq - state.sigma_sq);
    let w = (1.0 - tau) * (state.w + weight);
    ensure_finite(&main.id, &target)?;
    ensure_finite(&main.id, &[sigma_sq, w])?;

    state.target = target;
    state.sigma_sq = sigma_sq;
    state.w = w;

    let weight_bar = (nu + 1.0) / nu;
    Ok(UpdateReport {
        subset_id: main.id.clone(),
        d: normalized,
        w1: weight,
        w2: weight,
        w1_bar: weight_bar,
        w2_bar: weight_bar,
        tau1: tau_loc,
        tau2: tau_scale,
        tau_c: 0.0,
        consolidated_indices: Vec::new(),
        deviation_mean: deviation_mean(&main.values, &state.target),
        robustness: 1.0 - weight / weight_bar,
        nu_tilde: None,
    })
}

pub(crate) fn soft_report(
    main: &ParamSubset,
    target: &mut [f64],
    tau: f64,
) -> Result<UpdateReport> {
    let d = mean_sq_deviation(&main.values, target);
    soft_update(main, target, tau)?;
    let mut report = UpdateReport::plain(&main.id, d, tau);
    report.deviation_mean = deviation_mean(&main.values, target);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subset(values: &[f64]) -> ParamSubset {
        ParamSubset::new("p", values.to_vec()).unwrap()
    }

    #[test]
    fn soft_affine_combination() {
        let mut target = vec![0.0];
        soft_update(&subset(&[1.0]), &mut target, 0.1).unwrap();
        assert_eq!(target[0], 0.1);
    }

    #[test]
    fn soft_tau_one_copies() {
        let mut target = vec![-3.0, 4.0];
        soft_update(&subset(&[1.5, 2.5]), &mut target, 1.0).unwrap();
        assert_eq!(target, vec![1.5, 2.5]);
    }

    #[test]
    fn soft_geometric_recursion() {
        let main = subset(&[1.0]);
        let mut target = vec![0.0];
        for _ in 0..10 {
            soft_update(&main, &mut target, 0.1).unwrap();
        }
        // 1 - 0.9^10
        assert!((target[0] - 0.651_321_559_9).abs() < 1e-9);
    }

    #[test]
    fn soft_rejects_bad_tau() {
        let mut target = vec![0.0];
        for tau in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                soft_update(&subset(&[1.0]), &mut target, tau),
                Err(Error::Config { field: "tau", .. })
            ));
        }
    }

    #[test]
    fn soft_rejects_shape_mismatch() {
        let mut target = vec![0.0, 0.0];
        assert!(matches!(
            soft_update(&subset(&[1.0]), &mut target, 0.5),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn hard_period_one_always_copies() {
        let main = vec![subset(&[1.0, 2.0])];
        let mut targets = vec![subset(&[0.0, 0.0])];
        for step in 0..4 {
            assert!(hard_update(&main, &mut targets, 1, step).unwrap());
            assert_eq!(targets[0].values, main[0].values);
        }
    }

    #[test]
    fn hard_off_period_is_noop() {
        let main = vec![subset(&[1.0])];
        let mut targets = vec![subset(&[0.0])];
        assert!(!hard_update(&main, &mut targets, 5, 3).unwrap());
        assert_eq!(targets[0].values[0], 0.0);
    }

    #[test]
    fn hard_counter_simulation() {
        let main = vec![subset(&[1.0])];
        let mut targets = vec![subset(&[0.0])];
        let mut copied_at = Vec::new();
        for step in 0..10 {
            if hard_update(&main, &mut targets, 5, step).unwrap() {
                copied_at.push(step);
            }
            assert_eq!(targets[0].values[0], 1.0);
        }
        assert_eq!(copied_at, vec![0, 5]);
    }

    #[test]
    fn hard_shape_error() {
        let main = vec![subset(&[1.0, 2.0])];
        let mut targets = vec![subset(&[0.0])];
        assert!(matches!(
            hard_update(&main, &mut targets, 1, 0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn tsoft_initialization() {
        let state = TSoftState::new(&subset(&[1.0, 2.0]), 0.1, 1e-5).unwrap();
        assert_eq!(state.target, vec![1.0, 2.0]);
        assert!((state.w - 9.0).abs() < 1e-12);
        assert!((state.sigma_sq - 1e-10).abs() < 1e-24);
    }

    #[test]
    fn tsoft_unit_normalized_deviation_gives_tau() {
        // Δ² = σ² makes w = 1 and τ_i = 1 / (W + 1) = τ.
        let mut state = TSoftState {
            target: vec![0.0],
            sigma_sq: 4.0,
            w: 9.0,
        };
        let report = tsoft_update(&subset(&[2.0]), &mut state, 0.1, 3.0).unwrap();
        assert!((report.w1 - 1.0).abs() < 1e-15);
        assert!((report.tau1 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn tsoft_heavy_deviation_scalar_case() {
        // ν = 1, W = 9, Δ²σ⁻² = 99.
        let mut state = TSoftState {
            target: vec![0.0],
            sigma_sq: 1.0,
            w: 9.0,
        };
        let report = tsoft_update(&subset(&[99f64.sqrt()]), &mut state, 0.1, 1.0).unwrap();
        assert!((report.w1 - 0.02).abs() < 1e-14);
        assert!((report.tau1 - 0.02 / 9.02).abs() < 1e-14);
        assert!((report.tau2 - 0.001).abs() < 1e-15);
        assert!((state.w - 8.118).abs() < 1e-12);
        assert!((report.tau1 - 0.002_217_3).abs() < 1e-7);
    }

    #[test]
    fn tsoft_fixed_point() {
        let main = subset(&[0.3, -0.7]);
        let mut state = TSoftState::new(&main, 0.1, 1e-5).unwrap();
        let report = tsoft_update(&main, &mut state, 0.1, 1.0).unwrap();
        assert_eq!(report.w1, 2.0);
        assert_eq!(state.target, main.values);
        assert_eq!(report.deviation_mean, 0.0);
    }

    #[test]
    fn tsoft_rejects_bad_inputs() {
        let main = subset(&[1.0]);
        let mut state = TSoftState::new(&main, 0.1, 1e-5).unwrap();
        assert!(matches!(
            tsoft_update(&main, &mut state, 0.1, 0.0),
            Err(Error::Config { field: "nu", .. })
        ));
        let bad = ParamSubset {
            id: "p".into(),
            values: vec![f64::INFINITY],
        };
        assert!(matches!(
            tsoft_update(&bad, &mut state, 0.1, 1.0),
            Err(Error::Numeric(_))
        ));
    }
}
