//! Desk-scale actor-critic with target networks for both value and policy.
//!
//! Per environment step (on-policy, no replay buffer):
//!
//! ```text
//! a ~ b(· | s; θ̄π)                         behaviour = target policy
//! y = r + γ V(s'; θ̄V)   (y = r if terminal)
//! L_V = ½ (y - V(s; θV))²
//! L_π = -(y - V(s; θV)) · π(a|s; θπ) / b(a|s; θ̄π)
//! SGD on θV and θπ, then the configured update rule moves θ̄V and θ̄π
//! (CAT-soft may pull outlying entries of θV / θπ back towards the targets).
//! ```

pub mod env;

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::nn::{log_prob_with, GaussianPolicy, Gradients, Mlp};
use crate::rng;
use crate::updates::{ParamSubset, TargetTracker, UpdateReport, UpdateRule};
pub use env::{env_step, Env, EnvKind, EnvSpec, StepOutcome};

/// Importance ratios are clamped to this range; a clamped ratio carries no
/// gradient.
pub const RATIO_MIN: f64 = 1e-3;
pub const RATIO_MAX: f64 = 1e3;
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub gamma: f64,
    /// Step size of the value network.
    pub learning_rate: f64,
    /// The policy steps with `learning_rate * policy_lr_scale`; an actor
    /// slower than its critic keeps the single-sample updates stable.
    pub policy_lr_scale: f64,
    pub episodes: u32,
    /// Hidden layer widths shared by the value and policy networks.
    pub hidden: Vec<usize>,
    pub value_rule: UpdateRule,
    pub policy_rule: UpdateRule,
    pub eval_episodes: u32,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 1e-3,
            policy_lr_scale: 0.1,
            episodes: 300,
            hidden: vec![32, 32],
            value_rule: UpdateRule::soft(0.1),
            policy_rule: UpdateRule::soft(0.1),
            eval_episodes: 100,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn with_rule(rule: UpdateRule) -> Self {
        Self {
            value_rule: rule,
            policy_rule: rule,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(config_err(
                "gamma",
                format!("must lie in [0, 1), got {}", self.gamma),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(config_err("learning_rate", "must be non-negative"));
        }
        if !(self.policy_lr_scale >= 0.0 && self.policy_lr_scale.is_finite()) {
            return Err(config_err("policy_lr_scale", "must be non-negative"));
        }
        if self.hidden.contains(&0) {
            return Err(config_err("hidden", "layer widths must be positive"));
        }
        self.value_rule.validate()?;
        self.policy_rule.validate()
    }
}

/// `y = r + γ v_next` unless the transition is terminal.
pub fn td_target(r: f64, v_next_target: f64, gamma: f64, terminal: bool) -> f64 {
    if terminal {
        r
    } else {
        r + gamma * v_next_target
    }
}

/// TD targets for a batch, computed from the target value network only.
pub fn td_targets(batch: &[Transition], value_target: &Mlp, gamma: f64) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            let v_next = if t.terminal {
                0.0
            } else {
                value_target.forward(&t.s_next)?[0]
            };
            Ok(td_target(t.r, v_next, gamma, t.terminal))
        })
        .collect()
}

/// Mean over the batch of `½ (y - V(s))²` and its gradient with respect to
/// the main value network; `y` is a constant.
pub fn critic_loss_grad(
    batch: &[Transition],
    value: &Mlp,
    value_target: &Mlp,
    gamma: f64,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Argument("empty batch".into()));
    }
    let ys = td_targets(batch, value_target, gamma)?;
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(value.params());
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(ys) {
        let (v, cache) = value.forward_cached(&t.s)?;
        let err = y - v[0];
        loss += 0.5 * err * err / n;
        grads.add_scaled(&value.backward(&cache, &[-err / n])?, 1.0)?;
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorLoss {
    pub loss: f64,
    pub grads: Gradients,
    /// Samples dropped because the behaviour density underflowed.
    pub skipped: usize,
}

/// Mean over the batch of `-(y - V(s)) · π(a|s) / b(a|s)` and its gradient
/// with respect to the main policy (network and `log_std`). The advantage
/// and `b` are constants.
pub fn actor_loss_grad(
    batch: &[Transition],
    policy: &GaussianPolicy,
    target_policy: &GaussianPolicy,
    value: &Mlp,
    value_target: &Mlp,
    gamma: f64,
) -> Result<ActorLoss> {
    if batch.is_empty() {
        return Err(Error::Argument("empty batch".into()));
    }
    let ys = td_targets(batch, value_target, gamma)?;
    let min_log = f64::MIN_POSITIVE.ln();

    let mut kept = Vec::with_capacity(batch.len());
    let mut skipped = 0;
    for (t, y) in batch.iter().zip(ys) {
        let log_b = target_policy.log_prob(&t.s, &t.a)?;
        if log_b < min_log {
            skipped += 1;
            continue;
        }
        kept.push((t, y, log_b));
    }

    let mut net_grads = Gradients::zeros_like(policy.net.params());
    let mut log_std_grad = vec![0.0; policy.act_dim()];
    let mut loss = 0.0;
    if !kept.is_empty() {
        let n = kept.len() as f64;
        let log_std = &policy.log_std.values;
        for (t, y, log_b) in kept {
            let advantage = y - value.forward(&t.s)?[0];
            let (mean, cache, slope) = policy.mean_cached(&t.s)?;
            let log_pi = log_prob_with(&mean, log_std, &t.a);
            let raw = (log_pi - log_b).exp();
            let ratio = raw.clamp(RATIO_MIN, RATIO_MAX);
            loss -= advantage * ratio / n;
            if raw != ratio {
                continue;
            }
            // d(-A r)/dμ_k = -A r (a_k - μ_k) / σ_k², times dμ/dz for the net;
            // d/dlogσ_k = -A r (z_k² - 1)
            let scale = -advantage * ratio / n;
            let mut upstream = Vec::with_capacity(mean.len());
            for k in 0..mean.len() {
                let var = (2.0 * log_std[k]).exp();
                let diff = t.a[k] - mean[k];
                upstream.push(scale * diff / var * slope[k]);
                log_std_grad[k] += scale * (diff * diff / var - 1.0);
            }
            net_grads.add_scaled(&policy.net.backward(&cache, &upstream)?, 1.0)?;
        }
    }
    net_grads.0.push(ParamSubset {
        id: crate::nn::LOG_STD_ID.to_string(),
        values: log_std_grad,
    });
    Ok(ActorLoss {
        loss,
        grads: net_grads,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: u32,
    pub episode_return: f64,
    pub mean_deviation_v: f64,
    pub mean_deviation_pi: f64,
    pub mean_robustness: f64,
    pub diverged: bool,
}

pub const TRAIN_CSV_HEADER: &str =
    "episode,return,mean_deviation_V,mean_deviation_pi,mean_robustness,divergence_flag";

pub fn write_train_csv<W: Write>(mut out: W, curve: &[EpisodeLog]) -> io::Result<()> {
    writeln!(out, "{TRAIN_CSV_HEADER}")?;
    for e in curve {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.episode,
            e.episode_return,
            e.mean_deviation_v,
            e.mean_deviation_pi,
            e.mean_robustness,
            u8::from(e.diverged)
        )?;
    }
    Ok(())
}

/// Mean |θ - θ̄| over all parameters of a network, from per-subset reports.
pub fn network_deviation(reports: &[UpdateReport], params: &[ParamSubset]) -> f64 {
    let total: usize = params.iter().map(ParamSubset::len).sum();
    reports
        .iter()
        .zip(params)
        .map(|(r, p)| r.deviation_mean * p.len() as f64)
        .sum::<f64>()
        / total as f64
}

/// Everything a finished (or aborted) run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub curve: Vec<EpisodeLog>,
    pub value: Mlp,
    pub policy: GaussianPolicy,
    pub value_target: Mlp,
    pub policy_target: GaussianPolicy,
    /// Global step at which the divergence guard fired.
    pub diverged_at: Option<u64>,
    pub skipped_samples: usize,
}

/// Per-step hook receiving the value and policy reports.
pub trait StepObserver {
    fn on_step(&mut self, step: u64, value: &[UpdateReport], policy: &[UpdateReport]);
}

impl StepObserver for () {
    fn on_step(&mut self, _: u64, _: &[UpdateReport], _: &[UpdateReport]) {}
}

impl<F: FnMut(u64, &[UpdateReport], &[UpdateReport])> StepObserver for F {
    fn on_step(&mut self, step: u64, value: &[UpdateReport], policy: &[UpdateReport]) {
        self(step, value, policy)
    }
}

/// Freshly initialised value and policy networks for a seed.
pub fn init_networks(cfg: &TrainerConfig, spec: &EnvSpec) -> Result<(Mlp, GaussianPolicy)> {
    let mut init = rng::stream(cfg.seed, rng::STREAM_NET_INIT);
    let mut value_sizes = vec![spec.obs_dim()];
    value_sizes.extend(&cfg.hidden);
    value_sizes.push(1);
    let mut policy_sizes = vec![spec.obs_dim()];
    policy_sizes.extend(&cfg.hidden);
    policy_sizes.push(spec.act_dim());
    let value = Mlp::new(&value_sizes, &mut init)?;
    let policy = GaussianPolicy::new(Mlp::new(&policy_sizes, &mut init)?, spec.action_bound())?;
    Ok((value, policy))
}

pub fn train(cfg: &TrainerConfig, spec: &EnvSpec) -> Result<TrainOutcome> {
    train_observed(cfg, spec, &mut ())
}

pub fn train_observed(
    cfg: &TrainerConfig,
    spec: &EnvSpec,
    observer: &mut dyn StepObserver,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    spec.validate()?;
    let (mut value, mut policy) = init_networks(cfg, spec)?;
    let mut value_tracker = TargetTracker::new(cfg.value_rule, value.params())?;
    let mut policy_tracker = TargetTracker::new(cfg.policy_rule, &policy.params())?;
    let mut value_target = value.clone();
    let mut policy_target = policy.clone();

    let mut env = Env::new(spec.clone(), rng::stream(cfg.seed, rng::STREAM_ENV))?;
    let mut act_rng = rng::stream(cfg.seed, rng::STREAM_ACTION);
    let bound = spec.action_bound();
    let value_params = value.params().len();

    let mut curve = Vec::with_capacity(cfg.episodes as usize);
    let mut global_step = 0u64;
    let mut skipped_samples = 0;
    let mut diverged_at = None;

    'episodes: for episode in 0..cfg.episodes {
        let mut obs = env.reset();
        let (mut ret, mut dev_v, mut dev_pi, mut robust, mut steps) = (0.0, 0.0, 0.0, 0.0, 0u32);
        loop {
            let mean = policy_target.mean(&obs)?;
            let action: Vec<f64> = mean
                .iter()
                .zip(policy_target.std())
                .map(|(m, s)| {
                    let z: f64 = act_rng.sample(StandardNormal);
                    m + s * z
                })
                .collect();
            let clipped: Vec<f64> = action.iter().map(|a| a.clamp(-bound, bound)).collect();
            let out = env.step(&clipped)?;
            ret += out.reward;
            let batch = [Transition {
                s: obs,
                a: action,
                r: out.reward,
                s_next: out.obs.clone(),
                terminal: out.terminal,
            }];

            let (_, value_grads) = critic_loss_grad(&batch, &value, &value_target, cfg.gamma)?;
            let actor = actor_loss_grad(
                &batch,
                &policy,
                &policy_target,
                &value,
                &value_target,
                cfg.gamma,
            )?;
            skipped_samples += actor.skipped;
            value.sgd_step(&value_grads, cfg.learning_rate)?;
            policy.sgd_step(&actor.grads, cfg.learning_rate * cfg.policy_lr_scale)?;

            let mut v_params = value.params().to_vec();
            let v_reports = value_tracker.update(&mut v_params)?;
            value.set_params(&v_params)?;
            value_target.set_params(&value_tracker.targets())?;

            let mut p_params = policy.params();
            let p_reports = policy_tracker.update(&mut p_params)?;
            policy.set_params(&p_params)?;
            policy_target.set_params(&policy_tracker.targets())?;

            observer.on_step(global_step, &v_reports, &p_reports);
            dev_v += network_deviation(&v_reports, &v_params);
            dev_pi += network_deviation(&p_reports, &p_params);
            robust += v_reports
                .iter()
                .chain(&p_reports)
                .map(|r| r.robustness)
                .sum::<f64>()
                / (value_params + p_params.len()) as f64;
            steps += 1;
            global_step += 1;

            let worst = value
                .max_abs_param()
                .max(policy.max_abs_param())
                .max(value_target.max_abs_param())
                .max(policy_target.max_abs_param());
            if !(worst <= DIVERGENCE_LIMIT) {
                diverged_at = Some(global_step);
                curve.push(EpisodeLog {
                    episode,
                    episode_return: ret,
                    mean_deviation_v: dev_v / steps as f64,
                    mean_deviation_pi: dev_pi / steps as f64,
                    mean_robustness: robust / steps as f64,
                    diverged: true,
                });
                break 'episodes;
            }
            obs = out.obs;
            if out.terminal || out.truncated {
                break;
            }
        }
        curve.push(EpisodeLog {
            episode,
            episode_return: ret,
            mean_deviation_v: dev_v / steps as f64,
            mean_deviation_pi: dev_pi / steps as f64,
            mean_robustness: robust / steps as f64,
            diverged: false,
        });
    }

    Ok(TrainOutcome {
        curve,
        value,
        policy,
        value_target,
        policy_target,
        diverged_at,
        skipped_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mean: f64,
    /// Sample standard deviation (0 for a single episode).
    pub std: f64,
    pub returns: Vec<f64>,
}

/// Rollouts with the deterministic mean action of the given policy.
pub fn evaluate(
    policy: &GaussianPolicy,
    spec: &EnvSpec,
    episodes: u32,
    seed: u64,
) -> Result<EvalStats> {
    if episodes == 0 {
        return Err(Error::Argument(
            "evaluation needs at least one episode".into(),
        ));
    }
    let mut env = Env::new(spec.clone(), rng::stream(seed, rng::STREAM_EVAL))?;
    let bound = spec.action_bound();
    let mut returns = Vec::with_capacity(episodes as usize);
    for _ in 0..episodes {
        let mut obs = env.reset();
        let mut ret = 0.0;
        loop {
            let action: Vec<f64> = policy
                .mean(&obs)?
                .iter()
                .map(|a| a.clamp(-bound, bound))
                .collect();
            let out = env.step(&action)?;
            ret += out.reward;
            obs = out.obs;
            if out.terminal || out.truncated {
                break;
            }
        }
        returns.push(ret);
    }
    let (mean, std) = mean_std(&returns);
    Ok(EvalStats { mean, std, returns })
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// The untrained policy of a seed, evaluated with the same protocol: the
/// frozen random-policy baseline a trained run is paired against.
pub fn random_policy_baseline(
    cfg: &TrainerConfig,
    spec: &EnvSpec,
    episodes: u32,
) -> Result<EvalStats> {
    let (_, policy) = init_networks(cfg, spec)?;
    evaluate(&policy, spec, episodes, cfg.seed)
}
