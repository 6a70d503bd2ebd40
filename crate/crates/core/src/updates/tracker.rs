use std::fmt;

use serde::{Deserialize, Serialize};

use super::adaptive::{catsoft_step, AtSoftConfig, AtSoftState};
use super::rules::{hard_update, soft_report, tsoft_update, TSoftState};
use super::{
    check_tau, deviation_mean, mean_sq_deviation, ParamSubset, UpdateReport, DEFAULT_EPSILON,
};
use crate::error::{config_err, Error, Result};

/// Rule selection plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum UpdateRule {
    Hard {
        period: u64,
    },
    Soft {
        tau: f64,
    },
    TSoft {
        tau: f64,
        nu: f64,
        epsilon: f64,
    },
    /// AT-soft, or CAT-soft when `consolidation` is set.
    Adaptive(AtSoftConfig),
}

impl UpdateRule {
    pub fn hard(period: u64) -> Self {
        Self::Hard { period }
    }

    pub fn soft(tau: f64) -> Self {
        Self::Soft { tau }
    }

    pub fn tsoft(tau: f64, nu: f64) -> Self {
        Self::TSoft {
            tau,
            nu,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn atsoft(tau: f64, nu_lower: f64) -> Self {
        Self::Adaptive(AtSoftConfig::atsoft(tau, nu_lower))
    }

    pub fn catsoft(tau: f64, nu_lower: f64, lambda: f64, q: f64) -> Self {
        Self::Adaptive(AtSoftConfig::catsoft(tau, nu_lower, lambda, q))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Hard { .. } => "hard",
            Self::Soft { .. } => "soft",
            Self::TSoft { .. } => "tsoft",
            Self::Adaptive(cfg) if cfg.consolidation => "catsoft",
            Self::Adaptive(_) => "atsoft",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Hard { period } => {
                if period == 0 {
                    return Err(config_err("period", "must be positive"));
                }
                Ok(())
            }
            Self::Soft { tau } => check_tau(tau),
            Self::TSoft { tau, nu, epsilon } => {
                check_tau(tau)?;
                if !(nu > 0.0) {
                    return Err(config_err("nu", format!("must be positive, got {nu}")));
                }
                if !(epsilon > 0.0) {
                    return Err(config_err(
                        "epsilon",
                        format!("must be positive, got {epsilon}"),
                    ));
                }
                Ok(())
            }
            Self::Adaptive(cfg) => cfg.validate(),
        }
    }
}

impl fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hard { period } => write!(f, "hard(period={period})"),
            Self::Soft { tau } => write!(f, "soft(tau={tau})"),
            Self::TSoft { tau, nu, .. } => write!(f, "tsoft(tau={tau}, nu={nu})"),
            Self::Adaptive(c) if c.consolidation => write!(
                f,
                "catsoft(tau={}, nu_lower={}, lambda={}, q={})",
                c.tau, c.nu_lower, c.lambda, c.q
            ),
            Self::Adaptive(c) => write!(f, "atsoft(tau={}, nu_lower={})", c.tau, c.nu_lower),
        }
    }
}

/// Persistent statistics of one subset.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetState {
    /// Hard and soft rules only keep the target.
    Plain {
        target: Vec<f64>,
    },
    TSoft(TSoftState),
    Adaptive(AtSoftState),
}

impl SubsetState {
    pub fn target(&self) -> &[f64] {
        match self {
            Self::Plain { target } => target,
            Self::TSoft(s) => &s.target,
            Self::Adaptive(s) => &s.target,
        }
    }
}

/// Target network state for a list of parameter subsets, one independent
/// tracker per subset.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTracker {
    rule: UpdateRule,
    step: u64,
    ids: Vec<String>,
    states: Vec<SubsetState>,
}

impl TargetTracker {
    /// Initialises every subset's state from the current main parameters.
    pub fn new(rule: UpdateRule, main: &[ParamSubset]) -> Result<Self> {
        rule.validate()?;
        let mut ids = Vec::with_capacity(main.len());
        let mut states = Vec::with_capacity(main.len());
        for subset in main {
            subset.validate()?;
            if ids.contains(&subset.id) {
                return Err(Error::Shape(format!("duplicate subset id `{}`", subset.id)));
            }
            ids.push(subset.id.clone());
            states.push(match rule {
                UpdateRule::Hard { .. } | UpdateRule::Soft { .. } => SubsetState::Plain {
                    target: subset.values.clone(),
                },
                UpdateRule::TSoft { tau, epsilon, .. } => {
                    SubsetState::TSoft(TSoftState::new(subset, tau, epsilon)?)
                }
                UpdateRule::Adaptive(cfg) => SubsetState::Adaptive(AtSoftState::new(subset, &cfg)?),
            });
        }
        Ok(Self {
            rule,
            step: 0,
            ids,
            states,
        })
    }

    pub fn rule(&self) -> &UpdateRule {
        &self.rule
    }

    /// Number of completed updates.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn states(&self) -> impl Iterator<Item = (&str, &SubsetState)> {
        self.ids.iter().map(String::as_str).zip(&self.states)
    }

    pub fn target(&self, id: &str) -> Option<&[f64]> {
        self.ids
            .iter()
            .position(|i| i == id)
            .map(|k| self.states[k].target())
    }

    pub fn targets(&self) -> Vec<ParamSubset> {
        self.states()
            .map(|(id, s)| ParamSubset {
                id: id.to_string(),
                values: s.target().to_vec(),
            })
            .collect()
    }

    /// Applies the rule to every subset. CAT-soft may write consolidated
    /// values back into `main`.
    pub fn update(&mut self, main: &mut [ParamSubset]) -> Result<Vec<UpdateReport>> {
        if main.len() != self.ids.len() {
            return Err(Error::Shape(format!(
                "tracker holds {} subsets, got {}",
                self.ids.len(),
                main.len()
            )));
        }
        for (m, id) in main.iter().zip(&self.ids) {
            if &m.id != id {
                return Err(Error::MissingSubset(id.clone()));
            }
        }

        let reports = match self.rule {
            UpdateRule::Hard { period } => self.hard_step(main, period)?,
            UpdateRule::Soft { tau } => {
                let mut reports = Vec::with_capacity(main.len());
                for (m, state) in main.iter().zip(self.states.iter_mut()) {
                    let SubsetState::Plain { target } = state else {
                        return Err(Error::Contract("soft rule with non-plain state".into()));
                    };
                    reports.push(soft_report(m, target, tau)?);
                }
                reports
            }
            UpdateRule::TSoft { tau, nu, .. } => {
                let mut reports = Vec::with_capacity(main.len());
                for (m, state) in main.iter().zip(self.states.iter_mut()) {
                    let SubsetState::TSoft(s) = state else {
                        return Err(Error::Contract("T-soft rule with foreign state".into()));
                    };
                    reports.push(tsoft_update(m, s, tau, nu)?);
                }
                reports
            }
            UpdateRule::Adaptive(cfg) => {
                let mut reports = Vec::with_capacity(main.len());
                for (m, state) in main.iter_mut().zip(self.states.iter_mut()) {
                    let SubsetState::Adaptive(s) = state else {
                        return Err(Error::Contract("adaptive rule with foreign state".into()));
                    };
                    reports.push(catsoft_step(m, s, &cfg)?);
                }
                reports
            }
        };
        self.step += 1;
        Ok(reports)
    }

    fn hard_step(&mut self, main: &[ParamSubset], period: u64) -> Result<Vec<UpdateReport>> {
        let mut targets = self.targets();
        let before: Vec<f64> = main
            .iter()
            .zip(&targets)
            .map(|(m, t)| mean_sq_deviation(&m.values, &t.values))
            .collect();
        let copied = hard_update(main, &mut targets, period, self.step)?;
        let rate = if copied { 1.0 } else { 0.0 };
        let mut reports = Vec::with_capacity(main.len());
        for ((m, t), (state, d)) in main
            .iter()
            .zip(targets)
            .zip(self.states.iter_mut().zip(before))
        {
            let mut report = UpdateReport::plain(&m.id, d, rate);
            report.deviation_mean = deviation_mean(&m.values, &t.values);
            *state = SubsetState::Plain { target: t.values };
            reports.push(report);
        }
        Ok(reports)
    }

    pub fn snapshot(&self) -> TrackerSnapshot {
        let subsets = self
            .states()
            .map(|(id, state)| match state {
                SubsetState::Plain { target } => SubsetSnapshot {
                    id: id.to_string(),
                    target: target.clone(),
                    sigma_sq: None,
                    w: None,
                    nu_tilde: None,
                },
                SubsetState::TSoft(s) => SubsetSnapshot {
                    id: id.to_string(),
                    target: s.target.clone(),
                    sigma_sq: Some(SigmaSq::Scalar(s.sigma_sq)),
                    w: Some(s.w),
                    nu_tilde: None,
                },
                SubsetState::Adaptive(s) => SubsetSnapshot {
                    id: id.to_string(),
                    target: s.target.clone(),
                    sigma_sq: Some(SigmaSq::PerElement(s.sigma_sq.clone())),
                    w: None,
                    nu_tilde: Some(s.nu_tilde),
                },
            })
            .collect();
        TrackerSnapshot {
            rule: self.rule,
            step: self.step,
            subsets,
        }
    }

    pub fn from_snapshot(snapshot: TrackerSnapshot) -> Result<Self> {
        snapshot.rule.validate()?;
        let mut ids = Vec::with_capacity(snapshot.subsets.len());
        let mut states = Vec::with_capacity(snapshot.subsets.len());
        for s in snapshot.subsets {
            let missing = |field: &str| {
                Error::Argument(format!(
                    "snapshot of `{}` lacks `{field}` for {}",
                    s.id,
                    snapshot.rule.name()
                ))
            };
            if s.target.is_empty() {
                return Err(Error::Shape(format!(
                    "snapshot of `{}` has an empty target",
                    s.id
                )));
            }
            let state = match snapshot.rule {
                UpdateRule::Hard { .. } | UpdateRule::Soft { .. } => SubsetState::Plain {
                    target: s.target.clone(),
                },
                UpdateRule::TSoft { .. } => match (&s.sigma_sq, s.w) {
                    (Some(SigmaSq::Scalar(sigma_sq)), Some(w)) => SubsetState::TSoft(TSoftState {
                        target: s.target.clone(),
                        sigma_sq: *sigma_sq,
                        w,
                    }),
                    _ => return Err(missing("sigma_sq (scalar) / w")),
                },
                UpdateRule::Adaptive(_) => match (&s.sigma_sq, s.nu_tilde) {
                    (Some(SigmaSq::PerElement(sigma_sq)), Some(nu_tilde)) => {
                        if sigma_sq.len() != s.target.len() {
                            return Err(Error::Shape(format!(
                                "snapshot of `{}`: sigma_sq length {} != target length {}",
                                s.id,
                                sigma_sq.len(),
                                s.target.len()
                            )));
                        }
                        SubsetState::Adaptive(AtSoftState {
                            target: s.target.clone(),
                            sigma_sq: sigma_sq.clone(),
                            nu_tilde,
                        })
                    }
                    _ => return Err(missing("sigma_sq (vector) / nu_tilde")),
                },
            };
            ids.push(s.id);
            states.push(state);
        }
        Ok(Self {
            rule: snapshot.rule,
            step: snapshot.step,
            ids,
            states,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.snapshot()).expect("snapshot serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snapshot: TrackerSnapshot =
            serde_json::from_str(text).map_err(|e| Error::Argument(format!("snapshot: {e}")))?;
        Self::from_snapshot(snapshot)
    }
}

/// Serialised tracker state for checkpoint and resume.
///
/// ```json
/// {
///   "rule": {"rule": "adaptive" | "hard" | "soft" | "tsoft", ...hyperparameters},
///   "step": 42,
///   "subsets": [
///     {"id": "l0.weight", "target": [..], "sigma_sq": [..], "nu_tilde": 1.0}
///   ]
/// }
/// ```
///
/// `sigma_sq` is a scalar and `w` is present for T-soft; `sigma_sq` is a
/// vector and `nu_tilde` is present for AT/CAT-soft (the CAT-soft rule is
/// serialised as `"rule": "adaptive"` with `"consolidation": true`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerSnapshot {
    pub rule: UpdateRule,
    pub step: u64,
    pub subsets: Vec<SubsetSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSnapshot {
    pub id: String,
    pub target: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_sq: Option<SigmaSq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSq {
    Scalar(f64),
    PerElement(Vec<f64>),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> Vec<ParamSubset> {
        vec![
            ParamSubset::new("l0.weight", vec![0.1, -0.2, 0.3, 0.4]).unwrap(),
            ParamSubset::new("l0.bias", vec![0.0, 1.0]).unwrap(),
        ]
    }

    fn perturb(main: &mut [ParamSubset], k: usize) {
        for (i, s) in main.iter_mut().enumerate() {
            for (j, v) in s.values.iter_mut().enumerate() {
                *v += 0.01 * ((k * 7 + i * 3 + j) % 5) as f64 - 0.02;
            }
        }
    }

    #[test]
    fn hard_period_one_tracks_exactly() {
        let mut main = net();
        let mut tracker = TargetTracker::new(UpdateRule::hard(1), &main).unwrap();
        for k in 0..5 {
            perturb(&mut main, k);
            tracker.update(&mut main).unwrap();
            assert_eq!(tracker.targets(), main);
        }
    }

    #[test]
    fn every_rule_snapshot_round_trips() {
        for rule in [
            UpdateRule::hard(3),
            UpdateRule::soft(0.1),
            UpdateRule::tsoft(0.1, 1.0),
            UpdateRule::atsoft(0.1, 1.0),
            UpdateRule::catsoft(0.1, 1.0, 1.0, 1.0),
        ] {
            let mut main = net();
            let mut tracker = TargetTracker::new(rule, &main).unwrap();
            for k in 0..3 {
                perturb(&mut main, k);
                tracker.update(&mut main).unwrap();
            }
            let restored = TargetTracker::from_json(&tracker.to_json()).unwrap();
            assert_eq!(restored, tracker, "{rule}");

            let mut a = main.clone();
            let mut b = main.clone();
            perturb(&mut a, 9);
            perturb(&mut b, 9);
            let mut t2 = restored;
            assert_eq!(tracker.update(&mut a).unwrap(), t2.update(&mut b).unwrap());
        }
    }

    #[test]
    fn snapshot_field_names() {
        let main = net();
        let tracker = TargetTracker::new(UpdateRule::catsoft(0.1, 1.0, 1.0, 1.0), &main).unwrap();
        let v: serde_json::Value = serde_json::from_str(&tracker.to_json()).unwrap();
        assert_eq!(v["rule"]["rule"], "adaptive");
        assert_eq!(v["rule"]["consolidation"], true);
        assert_eq!(v["subsets"][0]["id"], "l0.weight");
        assert_eq!(v["subsets"][0]["nu_tilde"], 1.0);
        assert_eq!(v["subsets"][1]["sigma_sq"].as_array().unwrap().len(), 2);

        let tsoft = TargetTracker::new(UpdateRule::tsoft(0.1, 1.0), &main).unwrap();
        let v: serde_json::Value = serde_json::from_str(&tsoft.to_json()).unwrap();
        assert!(v["subsets"][0]["sigma_sq"].is_number());
        assert!((v["subsets"][0]["w"].as_f64().unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_subsets() {
        let main = net();
        let mut tracker = TargetTracker::new(UpdateRule::soft(0.1), &main).unwrap();
        let mut other = vec![main[1].clone(), main[0].clone()];
        assert!(tracker.update(&mut other).is_err());
        let mut short = vec![main[0].clone()];
        assert!(matches!(tracker.update(&mut short), Err(Error::Shape(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let main = vec![net()[0].clone(), net()[0].clone()];
        assert!(TargetTracker::new(UpdateRule::soft(0.1), &main).is_err());
    }

    #[test]
    fn incomplete_snapshot_rejected() {
        let text = r#"{"rule":{"rule":"tsoft","tau":0.1,"nu":1.0,"epsilon":1e-5},"step":0,
            "subsets":[{"id":"a","target":[1.0]}]}"#;
        assert!(matches!(
            TargetTracker::from_json(text),
            Err(Error::Argument(_))
        ));
    }
}
