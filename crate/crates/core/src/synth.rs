//! Synthetic main-parameter streams and tracking metrics.
//!
//! A stream is a noisy, outlier-contaminated trajectory of one parameter
//! subset. Feeding it to a [`TargetTracker`] as the "main" network measures
//! how well each rule follows the clean trajectory while ignoring outliers.
//!
//! Time convention: index 0 of a stream is the initialisation snapshot the
//! tracker copies; indices `1..=horizon` are the update steps. Step records,
//! CSV rows and metric series are indexed by update step.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::rng;
use crate::updates::{ParamSubset, SubsetState, TargetTracker, UpdateRule};

/// Clean trajectory shared by every element of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Trajectory {
    Constant {
        value: f64,
    },
    /// 0 up to and including index `at`, then `to`.
    Step {
        at: u64,
        to: f64,
    },
    /// `slope * t`.
    Ramp {
        slope: f64,
    },
    /// `amplitude * sin(2π t / period)`.
    Sinusoid {
        amplitude: f64,
        period: f64,
    },
}

impl Trajectory {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Step { at, to } => {
                if t > at {
                    to
                } else {
                    0.0
                }
            }
            Self::Ramp { slope } => slope * t as f64,
            Self::Sinusoid { amplitude, period } => {
                amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub dim: usize,
    pub horizon: u64,
    pub trajectory: Trajectory,
    pub noise_std: f64,
    pub outlier_prob: f64,
    pub outlier_scale: f64,
    /// Fraction of elements carrying a persistent offset ("sticky" outliers).
    pub sticky_fraction: f64,
    pub sticky_offset: f64,
    pub seed: u64,
}

impl StreamSpec {
    /// The canonical outlier stream: 100 elements around 0, noise 0.01,
    /// 10% outliers of magnitude 100, 5000 steps.
    pub fn canonical(seed: u64) -> Self {
        Self {
            dim: 100,
            horizon: 5000,
            trajectory: Trajectory::Constant { value: 0.0 },
            noise_std: 0.01,
            outlier_prob: 0.1,
            outlier_scale: 100.0,
            sticky_fraction: 0.0,
            sticky_offset: 0.0,
            seed,
        }
    }

    pub fn clean(seed: u64) -> Self {
        Self {
            outlier_prob: 0.0,
            ..Self::canonical(seed)
        }
    }

    /// 5% of the elements permanently offset by +10 from step 1 on, on top
    /// of the clean canonical stream.
    pub fn sticky(seed: u64) -> Self {
        Self {
            sticky_fraction: 0.05,
            sticky_offset: 10.0,
            ..Self::clean(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(config_err("dim", "must be positive"));
        }
        if self.horizon == 0 {
            return Err(config_err("horizon", "must be positive"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(config_err("noise_std", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return Err(config_err("outlier_prob", "must lie in [0, 1]"));
        }
        if !(self.outlier_scale >= 0.0 && self.outlier_scale.is_finite()) {
            return Err(config_err("outlier_scale", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.sticky_fraction) {
            return Err(config_err("sticky_fraction", "must lie in [0, 1]"));
        }
        if !self.sticky_offset.is_finite() {
            return Err(config_err("sticky_offset", "must be finite"));
        }
        if let Trajectory::Sinusoid { period, .. } = self.trajectory {
            if !(period > 0.0) {
                return Err(config_err("period", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn burn_in(&self) -> usize {
        (self.horizon / 10) as usize
    }
}

/// A realised stream: `horizon + 1` snapshots and the clean base value at
/// each index.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub spec: StreamSpec,
    pub values: Vec<ParamSubset>,
    pub base: Vec<f64>,
}

/// Draws the stream. Per element and step, in this order: one standard
/// normal (noise), one uniform (outlier trigger), one bool (outlier sign).
/// Sticky elements are chosen once up front by a seeded shuffle.
pub fn generate_stream(spec: &StreamSpec) -> Result<Stream> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, rng::STREAM_SYNTH);
    let mut order: Vec<usize> = (0..spec.dim).collect();
    order.shuffle(&mut rng);
    let n_sticky = (spec.sticky_fraction * spec.dim as f64).round() as usize;
    let mut offset = vec![0.0; spec.dim];
    for &j in &order[..n_sticky] {
        offset[j] = spec.sticky_offset;
    }

    let steps = spec.horizon as usize + 1;
    let mut values = Vec::with_capacity(steps);
    let mut base = Vec::with_capacity(steps);
    for t in 0..steps {
        let b = spec.trajectory.at(t as u64);
        let row: Vec<f64> = offset
            .iter()
            .map(|&off| {
                let z: f64 = rng.sample(StandardNormal);
                let u: f64 = rng.random();
                let positive: bool = rng.random();
                let outlier = if u < spec.outlier_prob {
                    if positive {
                        spec.outlier_scale
                    } else {
                        -spec.outlier_scale
                    }
                } else {
                    0.0
                };
                // sticky offsets start after the init snapshot, so the
                // target begins on the clean value
                let off = if t == 0 { 0.0 } else { off };
                b + off + spec.noise_std * z + outlier
            })
            .collect();
        values.push(ParamSubset {
            id: "stream".to_string(),
            values: row,
        });
        base.push(b);
    }
    Ok(Stream {
        spec: spec.clone(),
        values,
        base,
    })
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub deviation_mean: f64,
    pub robustness: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau_c: f64,
    pub nu_tilde: Option<f64>,
    /// Root-mean-square of `target - base` over elements.
    pub tracking_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMetrics {
    pub rule: String,
    /// RMS of `target - base` over steps after the burn-in and over elements.
    pub tracking_rmse: f64,
    /// Post-burn-in per-step mean |θ - θ̄|.
    pub deviation_mean_series: Vec<f64>,
    /// Post-burn-in per-step `1 - w1 / w1_bar`.
    pub robustness_series: Vec<f64>,
    pub final_sigma_sq: Vec<f64>,
    pub final_nu_tilde: Option<f64>,
    /// Every update step, burn-in included.
    pub records: Vec<StepRecord>,
}

pub const CSV_HEADER: &str =
    "step,deviation_mean,robustness,tau1,tau2,tau_c,nu_tilde,tracking_error";

/// Runs one rule over a stream. The tracker is initialised from index 0;
/// consolidation acts on a copy of each step's value, and the consolidated
/// value is what the deviation metric sees.
pub fn run_tracker(stream: &Stream, rule: &UpdateRule) -> Result<TrackMetrics> {
    let (first, rest) = stream
        .values
        .split_first()
        .ok_or_else(|| Error::Argument("empty stream".into()))?;
    let mut tracker = TargetTracker::new(*rule, std::slice::from_ref(first))?;
    let mut records = Vec::with_capacity(rest.len());
    for (k, value) in rest.iter().enumerate() {
        let step = k as u64 + 1;
        let mut main = [value.clone()];
        let report = tracker.update(&mut main)?.remove(0);
        let base = stream.base[step as usize];
        let target = tracker.target(&value.id).expect("tracked subset");
        let sq: f64 = target.iter().map(|t| (t - base) * (t - base)).sum();
        records.push(StepRecord {
            step,
            deviation_mean: report.deviation_mean,
            robustness: report.robustness,
            tau1: report.tau1,
            tau2: report.tau2,
            tau_c: report.tau_c,
            nu_tilde: report.nu_tilde,
            tracking_error: (sq / target.len() as f64).sqrt(),
        });
    }

    let burn_in = stream.spec.burn_in().min(records.len());
    let kept = &records[burn_in..];
    let tracking_rmse = if kept.is_empty() {
        0.0
    } else {
        (kept
            .iter()
            .map(|r| r.tracking_error * r.tracking_error)
            .sum::<f64>()
            / kept.len() as f64)
            .sqrt()
    };
    let (_, state) = tracker.states().next().expect("one subset");
    let (final_sigma_sq, final_nu_tilde) = match state {
        SubsetState::Plain { .. } => (Vec::new(), None),
        SubsetState::TSoft(s) => (vec![s.sigma_sq], None),
        SubsetState::Adaptive(s) => (s.sigma_sq.clone(), Some(s.nu_tilde)),
    };
    Ok(TrackMetrics {
        rule: rule.name().to_string(),
        tracking_rmse,
        deviation_mean_series: kept.iter().map(|r| r.deviation_mean).collect(),
        robustness_series: kept.iter().map(|r| r.robustness).collect(),
        final_sigma_sq,
        final_nu_tilde,
        records,
    })
}

/// Runs every rule on the same stream realisation.
pub fn compare_rules(spec: &StreamSpec, rules: &[UpdateRule]) -> Result<Vec<TrackMetrics>> {
    if rules.is_empty() {
        return Err(Error::Argument("no rules to compare".into()));
    }
    let stream = generate_stream(spec)?;
    rules
        .iter()
        .map(|rule| run_tracker(&stream, rule))
        .collect()
}

pub fn write_csv<W: Write>(mut out: W, records: &[StepRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let nu = r.nu_tilde.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.step, r.deviation_mean, r.robustness, r.tau1, r.tau2, r.tau_c, nu, r.tracking_error
        )?;
    }
    Ok(())
}

/// Mean of the first `n` records' deviation (steps `1..=n`).
pub fn early_deviation(metrics: &TrackMetrics, n: usize) -> f64 {
    let head = &metrics.records[..n.min(metrics.records.len())];
    head.iter().map(|r| r.deviation_mean).sum::<f64>() / head.len() as f64
}
