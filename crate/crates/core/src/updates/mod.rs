//! Target-network update rules.
//!
//! Every rule operates on one [`ParamSubset`] at a time (one weight matrix or
//! one bias vector) and keeps its own per-subset state. [`TargetTracker`]
//! holds the states for a whole network and dispatches on [`UpdateRule`].

mod adaptive;
mod quantile;
mod rules;
mod tracker;

pub use adaptive::{
    atsoft_apply, atsoft_statistics, catsoft_step, consolidate, AtSoftConfig, AtSoftState,
    AtSoftStatistics, W2_BAR_FLOOR,
};
pub use quantile::quantile_threshold;
pub use rules::{hard_update, soft_update, tsoft_update, TSoftState};
pub use tracker::{SubsetSnapshot, SubsetState, TargetTracker, TrackerSnapshot, UpdateRule};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Default stabiliser ε shared by all rules.
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// One flat parameter group with a stable identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSubset {
    pub id: String,
    pub values: Vec<f64>,
}

impl ParamSubset {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let subset = Self {
            id: id.into(),
            values,
        };
        subset.validate()?;
        Ok(subset)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Shape(format!("subset `{}` is empty", self.id)));
        }
        ensure_finite(&format!("subset `{}`", self.id), &self.values)
    }
}

/// Per-step diagnostics of one subset update.
///
/// For AT/CAT-soft the fields follow the adaptive student-t formulation
/// directly. The simpler rules fill them with their natural analogues:
/// soft and hard report `w1 = w1_bar = w2 = w2_bar = 1` and the effective
/// rate as `tau1`/`tau2`; T-soft reports its weight `w` as `w1`/`w2`, the
/// zero-deviation bound `(nu+1)/nu` as `w1_bar`/`w2_bar`, the location rate
/// `w/(W+w)` as `tau1` and the scale rate as `tau2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub subset_id: String,
    /// Pseudo-distance (AT/CAT-soft), normalised squared deviation (T-soft)
    /// or mean squared deviation (soft, hard), measured before the update.
    pub d: f64,
    pub w1: f64,
    pub w2: f64,
    pub w1_bar: f64,
    pub w2_bar: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau_c: f64,
    pub consolidated_indices: Vec<usize>,
    /// Mean |θ − θ̄| after the target update and any consolidation.
    pub deviation_mean: f64,
    /// `1 - w1 / w1_bar`.
    pub robustness: f64,
    /// ν̃ after the update, for the adaptive rules.
    pub nu_tilde: Option<f64>,
}

impl UpdateReport {
    pub(crate) fn plain(subset_id: &str, d: f64, rate: f64) -> Self {
        Self {
            subset_id: subset_id.to_string(),
            d,
            w1: 1.0,
            w2: 1.0,
            w1_bar: 1.0,
            w2_bar: 1.0,
            tau1: rate,
            tau2: rate,
            tau_c: 0.0,
            consolidated_indices: Vec::new(),
            deviation_mean: 0.0,
            robustness: 0.0,
            nu_tilde: None,
        }
    }
}

pub(crate) fn check_same_len(id: &str, main: &[f64], target: &[f64]) -> Result<()> {
    if main.len() != target.len() {
        return Err(Error::Shape(format!(
            "subset `{id}`: main has {} values, target has {}",
            main.len(),
            target.len()
        )));
    }
    if main.is_empty() {
        return Err(Error::Shape(format!("subset `{id}` is empty")));
    }
    Ok(())
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(crate::error::config_err(
            "tau",
            format!("must lie in (0, 1], got {tau}"),
        ))
    }
}

/// Mean absolute deviation between main and target values.
pub fn deviation_mean(main: &[f64], target: &[f64]) -> f64 {
    let total: f64 = main.iter().zip(target).map(|(m, t)| (m - t).abs()).sum();
    total / main.len() as f64
}

pub(crate) fn mean_sq_deviation(main: &[f64], target: &[f64]) -> f64 {
    let total: f64 = main
        .iter()
        .zip(target)
        .map(|(m, t)| (m - t) * (m - t))
        .sum();
    total / main.len() as f64
}
