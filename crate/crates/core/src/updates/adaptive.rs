//! Adaptive T-soft (AT-soft) and consolidated adaptive T-soft (CAT-soft).
//!
//! The subset is modelled as a diagonal student-t sample with location θ̄
//! (the target), per-element scale σ² and normalised degrees of freedom
//! ν̃ = ν / d. Each step:
//!
//! ```text
//! Δ_j  = (θ_j - θ̄_j)² / σ²_j          D  = mean_j Δ_j
//! w1   = (ν̃ + 1) / (ν̃ + D)            w2 = w1 - ln w1
//! w̄1   = (ν̃ + 1) / ν̃                  w̄2 = max(w̄1 - ln w̄1, 87.3365)
//! τ1   = τ w1 / w̄1                     τ2 = τ w2 / w̄2
//! σ²'_j = Δ_j σ²_j + max(ε², (Δ_j - D) σ²_j / ν̃)
//! ν̃'   = ((ν̃ + 2)/(ν̃ + 1) + ν̃) (ν̃ - ν̲) / (ν̃ w2) + ν̲ + ε
//! θ̄ <- (1-τ1) θ̄ + τ1 θ,  σ² <- (1-τ1) σ² + τ1 σ²',  ν̃ <- (1-τ2) ν̃ + τ2 ν̃'
//! ```
//!
//! The convex combinations are evaluated as `a + τ (b - a)`, which is exact
//! when `a == b`, so θ = θ̄ stays a fixed point bit for bit.
//!
//! CAT-soft then pulls the outlying elements of the *main* subset back
//! towards the target: `τc = λ τ (1 - w1/w̄1)`, applied to every `j` with
//! `Δ_j >= Q(Δ; q)`, where `Δ` is the value computed before θ̄ moved.

use serde::{Deserialize, Serialize};

use super::{
    check_same_len, check_tau, deviation_mean, quantile_threshold, ParamSubset, UpdateReport,
};
use crate::error::{config_err, ensure_finite, Error, Result};

/// Floor of w̄2: `-ln` of the smallest positive normal f32. Kept verbatim
/// even though all state is f64.
pub const W2_BAR_FLOOR: f64 = 87.3365;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtSoftConfig {
    pub tau: f64,
    /// Lower bound ν̲ of ν̃ (maximum noise robustness).
    pub nu_lower: f64,
    pub epsilon: f64,
    /// Consolidation strength λ.
    pub lambda: f64,
    /// Quantile level selecting the consolidated elements.
    pub q: f64,
    pub consolidation: bool,
}

impl Default for AtSoftConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            nu_lower: 1.0,
            epsilon: super::DEFAULT_EPSILON,
            lambda: 1.0,
            q: 1.0,
            consolidation: false,
        }
    }
}

impl AtSoftConfig {
    pub fn atsoft(tau: f64, nu_lower: f64) -> Self {
        Self {
            tau,
            nu_lower,
            ..Self::default()
        }
    }

    pub fn catsoft(tau: f64, nu_lower: f64, lambda: f64, q: f64) -> Self {
        Self {
            tau,
            nu_lower,
            lambda,
            q,
            consolidation: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if !(self.nu_lower > 0.0 && self.nu_lower.is_finite()) {
            return Err(config_err(
                "nu_lower",
                format!("must be positive, got {}", self.nu_lower),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(config_err(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(config_err(
                "lambda",
                format!("must lie in [0, 1], got {}", self.lambda),
            ));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(config_err(
                "q",
                format!("must lie in [0, 1], got {}", self.q),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtSoftState {
    pub target: Vec<f64>,
    /// Per-element scale σ².
    pub sigma_sq: Vec<f64>,
    pub nu_tilde: f64,
}

impl AtSoftState {
    /// `target = main`, `σ = ε`, `ν̃ = ν̲`.
    pub fn new(main: &ParamSubset, cfg: &AtSoftConfig) -> Result<Self> {
        cfg.validate()?;
        main.validate()?;
        Ok(Self {
            target: main.values.clone(),
            sigma_sq: vec![cfg.epsilon * cfg.epsilon; main.len()],
            nu_tilde: cfg.nu_lower,
        })
    }

    fn check(&self, main: &ParamSubset) -> Result<()> {
        check_same_len(&main.id, &main.values, &self.target)?;
        check_same_len(&main.id, &main.values, &self.sigma_sq)?;
        if self.sigma_sq.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Numeric(format!(
                "sigma_sq of `{}` must be positive",
                main.id
            )));
        }
        if !(self.nu_tilde > 0.0 && self.nu_tilde.is_finite()) {
            return Err(Error::Numeric(format!("nu_tilde of `{}`", main.id)));
        }
        Ok(())
    }
}

/// Output of [`atsoft_statistics`]: the report plus the per-element
/// normalised squared deviations Δ, cached for the apply and consolidation
/// stages of the same step.
#[derive(Debug, Clone, PartialEq)]
pub struct AtSoftStatistics {
    pub report: UpdateReport,
    pub delta: Vec<f64>,
}

/// Computes Δ, D, w1, w2, their bounds and the rates τ1, τ2 (and τc when
/// consolidation is enabled) without touching the state. The report's
/// `deviation_mean` is the pre-update deviation here.
pub fn atsoft_statistics(
    main: &ParamSubset,
    state: &AtSoftState,
    cfg: &AtSoftConfig,
) -> Result<AtSoftStatistics> {
    cfg.validate()?;
    state.check(main)?;
    ensure_finite(&main.id, &main.values)?;

    let delta: Vec<f64> = main
        .values
        .iter()
        .zip(&state.target)
        .zip(&state.sigma_sq)
        .map(|((m, t), s)| (m - t) * (m - t) / s)
        .collect();
    let d = delta.iter().sum::<f64>() / delta.len() as f64;
    let nu = state.nu_tilde;

    let w1 = (nu + 1.0) / (nu + d);
    let w2 = w1 - w1.ln();
    let w1_bar = (nu + 1.0) / nu;
    let w2_bar = (w1_bar - w1_bar.ln()).max(W2_BAR_FLOOR);
    let tau1 = cfg.tau * w1 / w1_bar;
    let tau2 = cfg.tau * w2 / w2_bar;
    let robustness = 1.0 - w1 / w1_bar;
    let tau_c = if cfg.consolidation {
        cfg.lambda * cfg.tau * robustness
    } else {
        0.0
    };
    if !(d.is_finite() && w1.is_finite() && w2.is_finite()) {
        return Err(Error::Numeric(format!("statistics of `{}`", main.id)));
    }

    Ok(AtSoftStatistics {
        report: UpdateReport {
            subset_id: main.id.clone(),
            d,
            w1,
            w2,
            w1_bar,
            w2_bar,
            tau1,
            tau2,
            tau_c,
            consolidated_indices: Vec::new(),
            deviation_mean: deviation_mean(&main.values, &state.target),
            robustness,
            nu_tilde: Some(nu),
        },
        delta,
    })
}

/// Moves θ̄, σ² and ν̃ using the statistics of the same step. Every new value
/// is computed from the pre-step state.
pub fn atsoft_apply(
    main: &ParamSubset,
    state: &mut AtSoftState,
    cfg: &AtSoftConfig,
    stats: &AtSoftStatistics,
) -> Result<()> {
    state.check(main)?;
    if stats.delta.len() != main.len() {
        return Err(Error::Contract(format!(
            "statistics for `{}` cover {} elements, subset has {}",
            main.id,
            stats.delta.len(),
            main.len()
        )));
    }
    let r = &stats.report;
    let nu = state.nu_tilde;
    let eps_sq = cfg.epsilon * cfg.epsilon;

    let nu_amount = ((nu + 2.0) / (nu + 1.0) + nu) * (nu - cfg.nu_lower) / (nu * r.w2)
        + cfg.nu_lower
        + cfg.epsilon;

    let mut target = Vec::with_capacity(main.len());
    let mut sigma_sq = Vec::with_capacity(main.len());
    for j in 0..main.len() {
        let s = state.sigma_sq[j];
        let dj = stats.delta[j];
        let sigma_amount = dj * s + (eps_sq).max((dj - r.d) * s / nu);
        target.push(state.target[j] + r.tau1 * (main.values[j] - state.target[j]));
        // the max only absorbs rounding: both endpoints are >= ε²
        sigma_sq.push((s + r.tau1 * (sigma_amount - s)).max(eps_sq));
    }
    let nu_tilde = nu + r.tau2 * (nu_amount - nu);

    ensure_finite(&main.id, &target)?;
    ensure_finite(&main.id, &sigma_sq)?;
    ensure_finite(&main.id, &[nu_tilde])?;
    state.target = target;
    state.sigma_sq = sigma_sq;
    state.nu_tilde = nu_tilde;
    Ok(())
}

/// Pulls the elements of `main` whose Δ reaches the q-quantile towards the
/// target with ratio τc. Returns the consolidated indices (ascending). The
/// target is read only.
pub fn consolidate(
    main: &mut ParamSubset,
    state: &AtSoftState,
    cfg: &AtSoftConfig,
    stats: &AtSoftStatistics,
) -> Result<Vec<usize>> {
    check_same_len(&main.id, &main.values, &state.target)?;
    let tau_c = cfg.lambda * cfg.tau * (1.0 - stats.report.w1 / stats.report.w1_bar);
    let threshold = quantile_threshold(&stats.delta, cfg.q)?;
    let selected: Vec<usize> = stats
        .delta
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= threshold)
        .map(|(j, _)| j)
        .collect();
    for &j in &selected {
        main.values[j] += tau_c * (state.target[j] - main.values[j]);
    }
    Ok(selected)
}

/// Full CAT-soft step (plain AT-soft when `cfg.consolidation` is false).
/// The returned report carries the post-step deviation.
pub fn catsoft_step(
    main: &mut ParamSubset,
    state: &mut AtSoftState,
    cfg: &AtSoftConfig,
) -> Result<UpdateReport> {
    let stats = atsoft_statistics(main, state, cfg)?;
    atsoft_apply(main, state, cfg, &stats)?;
    let mut report = stats.report.clone();
    if cfg.consolidation {
        report.consolidated_indices = consolidate(main, state, cfg, &stats)?;
    }
    report.nu_tilde = Some(state.nu_tilde);
    report.deviation_mean = deviation_mean(&main.values, &state.target);
    Ok(report)
}
