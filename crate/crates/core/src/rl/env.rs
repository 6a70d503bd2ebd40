//! Toy continuous-control environments with noisy observations.
//!
//! `point_mass`: state `(x, v)`, action `a` clipped to `[-1, 1]`,
//! `x' = x + 0.05 v`, `v' = v + 0.05 a`, reward `-(x² + 0.1 a²)` evaluated
//! at the pre-step state. The episode fails (terminal) when `|x'| > 10`.
//! Initial `x` is uniform in `±init_range`, `v = 0`.
//!
//! `pendulum`: rigid pendulum swing-up (g = 10, m = l = 1, dt = 0.05).
//! State `(θ, θ̇)` with θ = 0 upright, torque clipped to `[-2, 2]`,
//! `θ̇' = clip(θ̇ + (3g/2l · sin θ + 3/(m l²) · u) dt, ±8)`, `θ' = θ + θ̇' dt`,
//! reward `-(wrap(θ)² + 0.1 θ̇² + 0.001 u²)`. Observation
//! `(cos θ, sin θ, θ̇)`. Initial θ uniform in `±init_range · π`, θ̇ uniform
//! in `±1`. Never terminal.
//!
//! Both environments end (truncate) after `max_steps`. Truncation is not
//! terminal: the TD target still bootstraps there.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

const DT: f64 = 0.05;
const POINT_MASS_LIMIT: f64 = 10.0;
const PENDULUM_G: f64 = 10.0;
const PENDULUM_MAX_SPEED: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    PointMass,
    Pendulum,
}

impl EnvKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PointMass => "point_mass",
            Self::Pendulum => "pendulum",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point_mass" => Ok(Self::PointMass),
            "pendulum" => Ok(Self::Pendulum),
            other => Err(config_err("env", format!("unknown environment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// Standard deviation of the white noise added to every observation.
    pub obs_noise_std: f64,
    pub max_steps: u32,
    /// Half-width of the initial position range (point mass) or fraction
    /// of π for the initial angle (pendulum).
    pub init_range: f64,
}

impl EnvSpec {
    pub fn point_mass() -> Self {
        Self {
            kind: EnvKind::PointMass,
            obs_noise_std: 0.001,
            max_steps: 200,
            init_range: 1.0,
        }
    }

    pub fn pendulum() -> Self {
        Self {
            kind: EnvKind::Pendulum,
            obs_noise_std: 0.001,
            max_steps: 200,
            init_range: 1.0,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self.kind {
            EnvKind::PointMass => 2,
            EnvKind::Pendulum => 3,
        }
    }

    pub fn act_dim(&self) -> usize {
        1
    }

    pub fn action_bound(&self) -> f64 {
        match self.kind {
            EnvKind::PointMass => 1.0,
            EnvKind::Pendulum => 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.obs_noise_std >= 0.0 && self.obs_noise_std.is_finite()) {
            return Err(config_err("obs_noise_std", "must be non-negative"));
        }
        if self.max_steps == 0 {
            return Err(config_err("max_steps", "must be positive"));
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return Err(config_err("init_range", "must be non-negative"));
        }
        Ok(())
    }
}

/// Result of one deterministic transition of the true state.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

/// Noise-free dynamics. The action is clipped to the environment bounds.
pub fn env_step(kind: EnvKind, state: &[f64], action: &[f64]) -> Result<Dynamics> {
    if action.len() != 1 || state.len() != 2 {
        return Err(Error::Shape(format!(
            "{} expects a 2-d state and 1-d action",
            kind.name()
        )));
    }
    if !action[0].is_finite() {
        return Err(Error::Numeric("action".into()));
    }
    match kind {
        EnvKind::PointMass => {
            let a = action[0].clamp(-1.0, 1.0);
            let (x, v) = (state[0], state[1]);
            let next = vec![x + DT * v, v + DT * a];
            Ok(Dynamics {
                terminal: next[0].abs() > POINT_MASS_LIMIT,
                reward: -(x * x + 0.1 * a * a),
                next_state: next,
            })
        }
        EnvKind::Pendulum => {
            let u = action[0].clamp(-2.0, 2.0);
            let (th, thdot) = (state[0], state[1]);
            let wrapped = wrap_angle(th);
            let reward = -(wrapped * wrapped + 0.1 * thdot * thdot + 0.001 * u * u);
            let new_thdot = (thdot + (1.5 * PENDULUM_G * th.sin() + 3.0 * u) * DT)
                .clamp(-PENDULUM_MAX_SPEED, PENDULUM_MAX_SPEED);
            Ok(Dynamics {
                next_state: vec![th + new_thdot * DT, new_thdot],
                reward,
                terminal: false,
            })
        }
    }
}

fn wrap_angle(th: f64) -> f64 {
    use std::f64::consts::PI;
    (th + PI).rem_euclid(2.0 * PI) - PI
}

/// Clean observation of a true state.
pub fn observe(kind: EnvKind, state: &[f64]) -> Vec<f64> {
    match kind {
        EnvKind::PointMass => state.to_vec(),
        EnvKind::Pendulum => vec![state[0].cos(), state[0].sin(), state[1]],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
    /// Hit `max_steps` without failing.
    pub truncated: bool,
}

/// Stateful episode runner; owns the observation-noise generator.
#[derive(Debug, Clone)]
pub struct Env {
    spec: EnvSpec,
    state: Vec<f64>,
    t: u32,
    rng: ChaCha8Rng,
}

impl Env {
    pub fn new(spec: EnvSpec, rng: ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            state: vec![0.0, 0.0],
            t: 0,
            rng,
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Samples an initial state and returns its noisy observation.
    pub fn reset(&mut self) -> Vec<f64> {
        let r = self.spec.init_range;
        self.state = match self.spec.kind {
            EnvKind::PointMass => {
                let x = if r > 0.0 {
                    self.rng.random_range(-r..=r)
                } else {
                    0.0
                };
                vec![x, 0.0]
            }
            EnvKind::Pendulum => {
                let span = r * std::f64::consts::PI;
                let th = if span > 0.0 {
                    self.rng.random_range(-span..=span)
                } else {
                    0.0
                };
                vec![th, self.rng.random_range(-1.0..=1.0)]
            }
        };
        self.t = 0;
        self.noisy_obs()
    }

    /// Starts an episode from a given true state.
    pub fn reset_to(&mut self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != 2 {
            return Err(Error::Shape("state must have 2 entries".into()));
        }
        self.state = state.to_vec();
        self.t = 0;
        Ok(self.noisy_obs())
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        let dyn_out = env_step(self.spec.kind, &self.state, action)?;
        self.state = dyn_out.next_state;
        self.t += 1;
        Ok(StepOutcome {
            obs: self.noisy_obs(),
            reward: dyn_out.reward,
            terminal: dyn_out.terminal,
            truncated: !dyn_out.terminal && self.t >= self.spec.max_steps,
        })
    }

    fn noisy_obs(&mut self) -> Vec<f64> {
        let std = self.spec.obs_noise_std;
        observe(self.spec.kind, &self.state)
            .into_iter()
            .map(|v| {
                let z: f64 = self.rng.sample(StandardNormal);
                v + std * z
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn point_mass_equilibrium() {
        let d = env_step(EnvKind::PointMass, &[0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(d.next_state, vec![0.0, 0.0]);
        assert_eq!(d.reward, 0.0);
        assert!(!d.terminal);
    }

    #[test]
    fn point_mass_arithmetic() {
        let d = env_step(EnvKind::PointMass, &[1.0, 0.0], &[0.0]).unwrap();
        assert_eq!(d.next_state, vec![1.0, 0.0]);
        assert_eq!(d.reward, -1.0);
        let d = env_step(EnvKind::PointMass, &[0.0, 2.0], &[5.0]).unwrap();
        assert_eq!(d.next_state, vec![0.1, 2.05]);
        assert!((d.reward + 0.1).abs() < 1e-15);
    }

    #[test]
    fn point_mass_fails_outside_limit() {
        let d = env_step(EnvKind::PointMass, &[9.99, 1.0], &[0.0]).unwrap();
        assert!(d.terminal);
    }

    #[test]
    fn non_finite_action_rejected() {
        assert!(matches!(
            env_step(EnvKind::PointMass, &[0.0, 0.0], &[f64::NAN]),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn pendulum_upright_is_equilibrium() {
        let d = env_step(EnvKind::Pendulum, &[0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(d.next_state, vec![0.0, 0.0]);
        assert_eq!(d.reward, 0.0);
        let hanging = env_step(EnvKind::Pendulum, &[std::f64::consts::PI, 0.0], &[0.0]).unwrap();
        assert!((hanging.reward + std::f64::consts::PI.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn observation_noise_has_requested_scale() {
        let mut spec = EnvSpec::point_mass();
        spec.max_steps = u32::MAX;
        let mut env = Env::new(spec, rng::stream(7, rng::STREAM_ENV)).unwrap();
        let mut obs = env.reset_to(&[0.0, 0.0]).unwrap();
        let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0.0);
        for _ in 0..50_000 {
            for v in &obs {
                sum += v;
                sum_sq += v * v;
                n += 1.0;
            }
            obs = env.step(&[0.0]).unwrap().obs;
        }
        let mean = sum / n;
        let std = (sum_sq / n - mean * mean).sqrt();
        assert!((std - 0.001).abs() < 0.0002, "std {std}");
    }

    #[test]
    fn truncates_at_max_steps() {
        let mut spec = EnvSpec::point_mass();
        spec.max_steps = 3;
        let mut env = Env::new(spec, rng::stream(0, rng::STREAM_ENV)).unwrap();
        env.reset();
        assert!(!env.step(&[0.0]).unwrap().truncated);
        assert!(!env.step(&[0.0]).unwrap().truncated);
        let last = env.step(&[0.0]).unwrap();
        assert!(last.truncated && !last.terminal);
    }
}
