//! Run configuration: defaults, then `key = value` config file, then flags.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::rl::{EnvKind, EnvSpec, TrainerConfig};
use crate::rng::RNG_ALGORITHM;
use crate::synth::{StreamSpec, Trajectory};
use crate::updates::{AtSoftConfig, UpdateRule, DEFAULT_EPSILON};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("config file line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Compare,
    Train,
    Evaluate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Synth => "synth",
            Self::Compare => "compare",
            Self::Train => "train",
            Self::Evaluate => "evaluate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Hard,
    Soft,
    TSoft,
    AtSoft,
    CatSoft,
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Hard => "hard",
            Self::Soft => "soft",
            Self::TSoft => "tsoft",
            Self::AtSoft => "atsoft",
            Self::CatSoft => "catsoft",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hard" => Self::Hard,
            "soft" => Self::Soft,
            "tsoft" => Self::TSoft,
            "atsoft" => Self::AtSoft,
            "catsoft" => Self::CatSoft,
            _ => return None,
        })
    }
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub rule: RuleKind,
    /// Rules run by `compare`.
    pub rules: Vec<RuleKind>,
    pub tau: f64,
    pub nu: f64,
    pub nu_lower: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub q: f64,
    pub period: u64,
    pub dim: usize,
    pub horizon: u64,
    pub trajectory: Trajectory,
    pub noise_std: f64,
    pub outlier_prob: f64,
    pub outlier_scale: f64,
    pub sticky_fraction: f64,
    pub sticky_offset: f64,
    pub env: EnvKind,
    pub obs_noise_std: f64,
    pub max_steps: u32,
    pub init_range: f64,
    pub episodes: u32,
    pub eval_episodes: u32,
    pub learning_rate: f64,
    pub policy_lr_scale: f64,
    pub gamma: f64,
    pub hidden: Vec<usize>,
    pub step_log: bool,
    /// Policy checkpoint evaluated by `evaluate`; the untrained policy of
    /// each seed when absent.
    pub policy: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

/// Every key accepted in a config file, in echo order.
pub const KEYS: &[&str] = &[
    "rule",
    "rules",
    "tau",
    "nu",
    "nu_lower",
    "epsilon",
    "lambda",
    "q",
    "period",
    "dim",
    "horizon",
    "trajectory",
    "noise_std",
    "outlier_prob",
    "outlier_scale",
    "sticky_fraction",
    "sticky_offset",
    "env",
    "obs_noise_std",
    "max_steps",
    "init_range",
    "episodes",
    "eval_episodes",
    "learning_rate",
    "policy_lr_scale",
    "gamma",
    "hidden",
    "step_log",
    "policy",
    "seeds",
    "out",
];

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let stream = StreamSpec::canonical(0);
        let env = EnvSpec::point_mass();
        let trainer = TrainerConfig::default();
        Self {
            command,
            rule: RuleKind::CatSoft,
            rules: vec![
                RuleKind::Soft,
                RuleKind::TSoft,
                RuleKind::AtSoft,
                RuleKind::CatSoft,
            ],
            tau: 0.1,
            nu: 1.0,
            nu_lower: 1.0,
            epsilon: DEFAULT_EPSILON,
            lambda: 1.0,
            q: 1.0,
            period: 10,
            dim: stream.dim,
            horizon: stream.horizon,
            trajectory: stream.trajectory,
            noise_std: stream.noise_std,
            outlier_prob: stream.outlier_prob,
            outlier_scale: stream.outlier_scale,
            sticky_fraction: stream.sticky_fraction,
            sticky_offset: stream.sticky_offset,
            env: env.kind,
            obs_noise_std: env.obs_noise_std,
            max_steps: env.max_steps,
            init_range: env.init_range,
            episodes: trainer.episodes,
            eval_episodes: trainer.eval_episodes,
            learning_rate: trainer.learning_rate,
            policy_lr_scale: trainer.policy_lr_scale,
            gamma: trainer.gamma,
            hidden: trainer.hidden,
            step_log: false,
            policy: None,
            seeds: vec![0],
            out: PathBuf::from("runs"),
        }
    }

    /// Sets one key from its textual value, validating the range.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "rule" => self.rule = parse_rule(k, value)?,
            "rules" => {
                self.rules = split_list(value)
                    .map(|r| parse_rule(k, r))
                    .collect::<Result<_, _>>()?;
                if self.rules.is_empty() {
                    return Err(ConfigError::invalid(k, "needs at least one rule"));
                }
            }
            "tau" => self.tau = ranged(k, value, |v| v > 0.0 && v <= 1.0, "must lie in (0, 1]")?,
            "nu" => self.nu = ranged(k, value, |v| v > 0.0, "must be positive")?,
            "nu_lower" => self.nu_lower = ranged(k, value, |v| v > 0.0, "must be positive")?,
            "epsilon" => self.epsilon = ranged(k, value, |v| v > 0.0, "must be positive")?,
            "lambda" => {
                self.lambda = ranged(k, value, |v| (0.0..=1.0).contains(&v), "must lie in [0, 1]")?
            }
            "q" => self.q = ranged(k, value, |v| (0.0..=1.0).contains(&v), "must lie in [0, 1]")?,
            "period" => self.period = positive_int(k, value)?,
            "dim" => self.dim = positive_int(k, value)? as usize,
            "horizon" => self.horizon = positive_int(k, value)?,
            "trajectory" => self.trajectory = parse_trajectory(value)?,
            "noise_std" => self.noise_std = ranged(k, value, |v| v >= 0.0, "must be non-negative")?,
            "outlier_prob" => {
                self.outlier_prob =
                    ranged(k, value, |v| (0.0..=1.0).contains(&v), "must lie in [0, 1]")?
            }
            "outlier_scale" => {
                self.outlier_scale = ranged(k, value, |v| v >= 0.0, "must be non-negative")?
            }
            "sticky_fraction" => {
                self.sticky_fraction =
                    ranged(k, value, |v| (0.0..=1.0).contains(&v), "must lie in [0, 1]")?
            }
            "sticky_offset" => self.sticky_offset = ranged(k, value, |_| true, "")?,
            "env" => {
                self.env = value.parse().map_err(|_| {
                    ConfigError::invalid(k, format!("unknown environment `{value}`"))
                })?
            }
            "obs_noise_std" => {
                self.obs_noise_std = ranged(k, value, |v| v >= 0.0, "must be non-negative")?
            }
            "max_steps" => {
                self.max_steps = u32::try_from(positive_int(k, value)?)
                    .map_err(|_| ConfigError::invalid(k, "too large"))?
            }
            "init_range" => {
                self.init_range = ranged(k, value, |v| v >= 0.0, "must be non-negative")?
            }
            "episodes" => self.episodes = int(k, value)?,
            "eval_episodes" => {
                self.eval_episodes = u32::try_from(positive_int(k, value)?)
                    .map_err(|_| ConfigError::invalid(k, "too large"))?
            }
            "learning_rate" => {
                self.learning_rate = ranged(k, value, |v| v >= 0.0, "must be non-negative")?
            }
            "policy_lr_scale" => {
                self.policy_lr_scale = ranged(k, value, |v| v >= 0.0, "must be non-negative")?
            }
            "gamma" => {
                self.gamma = ranged(k, value, |v| (0.0..1.0).contains(&v), "must lie in [0, 1)")?
            }
            "hidden" => {
                self.hidden = split_list(value)
                    .map(|h| match h.parse::<usize>() {
                        Ok(n) if n > 0 => Ok(n),
                        _ => Err(ConfigError::invalid(
                            k,
                            format!("`{h}` is not a positive width"),
                        )),
                    })
                    .collect::<Result<_, _>>()?
            }
            "step_log" => {
                self.step_log = value
                    .parse()
                    .map_err(|_| ConfigError::invalid(k, "expected true or false"))?
            }
            "policy" => self.policy = (!value.is_empty()).then(|| PathBuf::from(value)),
            "seeds" | "seed" => {
                self.seeds = split_list(value)
                    .map(|s| {
                        s.parse::<u64>().map_err(|_| {
                            ConfigError::invalid("seeds", format!("`{s}` is not a seed"))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                if self.seeds.is_empty() {
                    return Err(ConfigError::invalid("seeds", "needs at least one seed"));
                }
            }
            "out" => self.out = PathBuf::from(value),
            _ => return Err(ConfigError::UnknownKey(key)),
        }
        Ok(())
    }

    /// Applies a `key = value` file. `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    message: format!("expected key=value, got `{line}`"),
                });
            };
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn update_rule(&self, kind: RuleKind) -> UpdateRule {
        match kind {
            RuleKind::Hard => UpdateRule::hard(self.period),
            RuleKind::Soft => UpdateRule::soft(self.tau),
            RuleKind::TSoft => UpdateRule::TSoft {
                tau: self.tau,
                nu: self.nu,
                epsilon: self.epsilon,
            },
            RuleKind::AtSoft | RuleKind::CatSoft => UpdateRule::Adaptive(AtSoftConfig {
                tau: self.tau,
                nu_lower: self.nu_lower,
                epsilon: self.epsilon,
                lambda: self.lambda,
                q: self.q,
                consolidation: kind == RuleKind::CatSoft,
            }),
        }
    }

    pub fn stream_spec(&self, seed: u64) -> StreamSpec {
        StreamSpec {
            dim: self.dim,
            horizon: self.horizon,
            trajectory: self.trajectory,
            noise_std: self.noise_std,
            outlier_prob: self.outlier_prob,
            outlier_scale: self.outlier_scale,
            sticky_fraction: self.sticky_fraction,
            sticky_offset: self.sticky_offset,
            seed,
        }
    }

    pub fn env_spec(&self) -> EnvSpec {
        EnvSpec {
            kind: self.env,
            obs_noise_std: self.obs_noise_std,
            max_steps: self.max_steps,
            init_range: self.init_range,
        }
    }

    pub fn trainer_config(&self, seed: u64) -> TrainerConfig {
        let rule = self.update_rule(self.rule);
        TrainerConfig {
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            policy_lr_scale: self.policy_lr_scale,
            episodes: self.episodes,
            hidden: self.hidden.clone(),
            value_rule: rule,
            policy_rule: rule,
            eval_episodes: self.eval_episodes,
            seed,
        }
    }

    /// Resolved configuration as `key=value` lines; feeding it back through
    /// [`RunConfig::apply_file_text`] reproduces the configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# command={}", self.command.name());
        let _ = writeln!(s, "# rng={RNG_ALGORITHM}");
        for key in KEYS {
            let _ = writeln!(s, "{key}={}", self.value_of(key));
        }
        s
    }

    fn value_of(&self, key: &str) -> String {
        let join = |v: Vec<String>| v.join(",");
        match key {
            "rule" => self.rule.name().into(),
            "rules" => join(self.rules.iter().map(|r| r.name().to_string()).collect()),
            "tau" => self.tau.to_string(),
            "nu" => self.nu.to_string(),
            "nu_lower" => self.nu_lower.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "lambda" => self.lambda.to_string(),
            "q" => self.q.to_string(),
            "period" => self.period.to_string(),
            "dim" => self.dim.to_string(),
            "horizon" => self.horizon.to_string(),
            "trajectory" => trajectory_text(&self.trajectory),
            "noise_std" => self.noise_std.to_string(),
            "outlier_prob" => self.outlier_prob.to_string(),
            "outlier_scale" => self.outlier_scale.to_string(),
            "sticky_fraction" => self.sticky_fraction.to_string(),
            "sticky_offset" => self.sticky_offset.to_string(),
            "env" => self.env.name().into(),
            "obs_noise_std" => self.obs_noise_std.to_string(),
            "max_steps" => self.max_steps.to_string(),
            "init_range" => self.init_range.to_string(),
            "episodes" => self.episodes.to_string(),
            "eval_episodes" => self.eval_episodes.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "policy_lr_scale" => self.policy_lr_scale.to_string(),
            "gamma" => self.gamma.to_string(),
            "hidden" => join(self.hidden.iter().map(ToString::to_string).collect()),
            "step_log" => self.step_log.to_string(),
            "policy" => self
                .policy
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "seeds" => join(self.seeds.iter().map(ToString::to_string).collect()),
            "out" => self.out.display().to_string(),
            _ => unreachable!("key list and echo out of sync: {key}"),
        }
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_rule(field: &str, value: &str) -> Result<RuleKind, ConfigError> {
    RuleKind::parse(value).ok_or_else(|| {
        ConfigError::invalid(
            field,
            format!("`{value}` is not one of hard|soft|tsoft|atsoft|catsoft"),
        )
    })
}

fn ranged(
    field: &str,
    value: &str,
    ok: impl Fn(f64) -> bool,
    message: &str,
) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| ConfigError::invalid(field, format!("`{value}` is not a number")))?;
    if !v.is_finite() || !ok(v) {
        return Err(ConfigError::invalid(field, format!("{value} {message}")));
    }
    Ok(v)
}

fn int(field: &str, value: &str) -> Result<u32, ConfigError> {
    value.parse().map_err(|_| {
        ConfigError::invalid(field, format!("`{value}` is not a non-negative integer"))
    })
}

fn positive_int(field: &str, value: &str) -> Result<u64, ConfigError> {
    match value.parse::<u64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(ConfigError::invalid(
            field,
            format!("`{value}` is not a positive integer"),
        )),
    }
}

/// `constant:C`, `step:AT:TO`, `ramp:SLOPE` or `sinusoid:AMPLITUDE:PERIOD`.
fn parse_trajectory(value: &str) -> Result<Trajectory, ConfigError> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ConfigError::invalid("trajectory", format!("`{s}` is not a number")))
    };
    match parts.as_slice() {
        ["constant", c] => Ok(Trajectory::Constant { value: num(c)? }),
        ["step", at, to] => Ok(Trajectory::Step {
            at: at.parse().map_err(|_| {
                ConfigError::invalid("trajectory", format!("`{at}` is not a step index"))
            })?,
            to: num(to)?,
        }),
        ["ramp", slope] => Ok(Trajectory::Ramp { slope: num(slope)? }),
        ["sinusoid", a, p] => {
            let period = num(p)?;
            if period <= 0.0 {
                return Err(ConfigError::invalid(
                    "trajectory",
                    "sinusoid period must be positive",
                ));
            }
            Ok(Trajectory::Sinusoid {
                amplitude: num(a)?,
                period,
            })
        }
        _ => Err(ConfigError::invalid(
            "trajectory",
            format!("`{value}` is not constant:C | step:AT:TO | ramp:SLOPE | sinusoid:AMP:PERIOD"),
        )),
    }
}

fn trajectory_text(t: &Trajectory) -> String {
    match *t {
        Trajectory::Constant { value } => format!("constant:{value}"),
        Trajectory::Step { at, to } => format!("step:{at}:{to}"),
        Trajectory::Ramp { slope } => format!("ramp:{slope}"),
        Trajectory::Sinusoid { amplitude, period } => format!("sinusoid:{amplitude}:{period}"),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "catsoft",
    version,
    about = "Noise-robust target-network update rules"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Track one synthetic stream with one rule.
    Synth(Flags),
    /// Run several rules on the same synthetic stream.
    Compare(Flags),
    /// Train the actor-critic on a toy environment.
    Train(Flags),
    /// Evaluate a policy checkpoint (or the untrained policy).
    Evaluate(Flags),
}

/// Flags shared by every command. Each one overrides the same key from
/// `--config`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// Config file with key=value lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// hard | soft | tsoft | atsoft | catsoft
    #[arg(long)]
    pub rule: Option<String>,
    /// Comma-separated rules for `compare`.
    #[arg(long)]
    pub rules: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub nu_lower: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    /// Copy period of the hard rule.
    #[arg(long)]
    pub period: Option<String>,
    /// Comma-separated seeds.
    #[arg(long, alias = "seeds")]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Any other config key, as KEY=VALUE (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Flags {
    fn pairs(&self) -> Result<Vec<(String, String)>, ConfigError> {
        let mut pairs = Vec::new();
        let named = [
            ("rule", &self.rule),
            ("rules", &self.rules),
            ("tau", &self.tau),
            ("nu", &self.nu),
            ("nu_lower", &self.nu_lower),
            ("epsilon", &self.epsilon),
            ("lambda", &self.lambda),
            ("q", &self.q),
            ("period", &self.period),
            ("seeds", &self.seed),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                pairs.push((key.to_string(), v.clone()));
            }
        }
        if let Some(out) = &self.out {
            pairs.push(("out".into(), out.display().to_string()));
        }
        for item in &self.set {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                ConfigError::Usage(format!("--set expects KEY=VALUE, got `{item}`"))
            })?;
            pairs.push((k.to_string(), v.to_string()));
        }
        Ok(pairs)
    }
}

/// Resolves a configuration from defaults, optional file text and flags.
pub fn resolve(
    command: Command,
    file_text: Option<&str>,
    flags: &Flags,
) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(text) = file_text {
        cfg.apply_file_text(text)?;
    }
    for (k, v) in flags.pairs()? {
        cfg.set(&k, &v)?;
    }
    Ok(cfg)
}

/// Parses command-line arguments (program name first), reading `--config`
/// from disk when given.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| ConfigError::Usage(e.to_string()))?;
    let (command, flags) = match cli.command {
        CliCommand::Synth(f) => (Command::Synth, f),
        CliCommand::Compare(f) => (Command::Compare, f),
        CliCommand::Train(f) => (Command::Train, f),
        CliCommand::Evaluate(f) => (Command::Evaluate, f),
    };
    let text = match &flags.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?),
        None => None,
    };
    resolve(command, text.as_deref(), &flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let cfg = parse_config(["catsoft", "synth"]).unwrap();
        assert_eq!(cfg.command, Command::Synth);
        assert_eq!(cfg.rule, RuleKind::CatSoft);
        assert_eq!(
            (cfg.tau, cfg.nu, cfg.nu_lower, cfg.lambda, cfg.q),
            (0.1, 1.0, 1.0, 1.0, 1.0)
        );
        assert_eq!(cfg.epsilon, 1e-5);
        assert_eq!(
            cfg.update_rule(RuleKind::TSoft),
            UpdateRule::tsoft(0.1, 1.0)
        );
        assert_eq!(
            cfg.update_rule(RuleKind::AtSoft),
            UpdateRule::atsoft(0.1, 1.0)
        );
        assert_eq!(
            cfg.update_rule(RuleKind::CatSoft),
            UpdateRule::catsoft(0.1, 1.0, 1.0, 1.0)
        );
        assert_eq!(cfg.gamma, 0.99);
        assert_eq!(cfg.learning_rate, 1e-3);
        assert_eq!(cfg.obs_noise_std, 0.001);
    }

    #[test]
    fn out_of_range_q_names_the_field() {
        let err = parse_config(["catsoft", "synth", "--q", "1.5"]).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "q"));
        assert!(err.to_string().contains("`q`"));
    }

    #[test]
    fn flag_overrides_file() {
        let flags = Flags {
            tau: Some("0.1".into()),
            ..Flags::default()
        };
        let cfg = resolve(Command::Synth, Some("tau = 0.2\nnu=3 # comment\n"), &flags).unwrap();
        assert_eq!(cfg.tau, 0.1);
        assert_eq!(cfg.nu, 3.0);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = resolve(Command::Synth, Some("taux=0.1"), &Flags::default()).unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("taux".into()));
        let flags = Flags {
            set: vec!["bogus=1".into()],
            ..Flags::default()
        };
        assert!(matches!(
            resolve(Command::Train, None, &flags),
            Err(ConfigError::UnknownKey(_))
        ));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = resolve(Command::Synth, Some("# header\njunk\n"), &Flags::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn echo_round_trips() {
        let flags = Flags {
            rule: Some("tsoft".into()),
            seed: Some("3,4".into()),
            set: vec!["trajectory=sinusoid:2:50".into(), "hidden=16,8".into()],
            ..Flags::default()
        };
        let cfg = resolve(Command::Compare, None, &flags).unwrap();
        let again = resolve(Command::Compare, Some(&cfg.echo()), &Flags::default()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn list_values() {
        let flags = Flags {
            rules: Some("soft, catsoft".into()),
            seed: Some("0,1,2".into()),
            ..Flags::default()
        };
        let cfg = resolve(Command::Compare, None, &flags).unwrap();
        assert_eq!(cfg.rules, vec![RuleKind::Soft, RuleKind::CatSoft]);
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
    }
}
