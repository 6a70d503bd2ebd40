//! `catsoft` command-line driver.
//!
//! Output layout of `--out DIR`:
//!
//! | command    | per seed                                                   | aggregate      |
//! |------------|------------------------------------------------------------|----------------|
//! | `synth`    | `synth_{rule}_seed{S}.csv`                                 | `summary.csv`  |
//! | `compare`  | `compare_{rule}_seed{S}.csv` for every rule                | `summary.csv`  |
//! | `train`    | `train_{rule}_seed{S}.csv`, `policy_{rule}_seed{S}.json`, `eval_{rule}_seed{S}.json` | `summary.csv` |
//! | `evaluate` | `eval_seed{S}.json`                                        | `summary.csv`  |
//!
//! Every directory also gets `config.resolved`, the echoed configuration.

mod config;

pub use config::{
    parse_config, resolve, Cli, CliCommand, Command, ConfigError, Flags, RuleKind, RunConfig,
};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::nn::GaussianPolicy;
use crate::rl::{self, mean_std};
use crate::synth::{self, TrackMetrics};
use crate::updates::{UpdateReport, UpdateRule};

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStatus {
    pub files: Vec<PathBuf>,
    /// Summary rows: rule name, metric name, per-seed values.
    pub summary: Vec<SummaryRow>,
    pub diverged: bool,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.diverged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub rule: String,
    pub metric: &'static str,
    pub values: Vec<f64>,
}

pub const SUMMARY_HEADER: &str = "rule,metric,seeds,mean,std";

#[derive(Debug, Serialize)]
struct EvalRecord<'a> {
    rule: &'a str,
    seed: u64,
    episodes: u32,
    mean: f64,
    std: f64,
    baseline_mean: f64,
    baseline_std: f64,
}

pub fn run(cfg: &RunConfig) -> Result<RunStatus> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let echo_path = cfg.out.join("config.resolved");
    fs::write(&echo_path, cfg.echo())
        .with_context(|| format!("cannot write {}", echo_path.display()))?;

    let mut status = match cfg.command {
        Command::Synth => run_synth(cfg, &[cfg.rule], "synth")?,
        Command::Compare => run_synth(cfg, &cfg.rules, "compare")?,
        Command::Train => run_train(cfg)?,
        Command::Evaluate => run_evaluate(cfg)?,
    };
    status.files.insert(0, echo_path);
    let summary_path = cfg.out.join("summary.csv");
    write_summary(&summary_path, &status.summary)?;
    status.files.push(summary_path);
    Ok(status)
}

fn run_synth(cfg: &RunConfig, kinds: &[RuleKind], prefix: &str) -> Result<RunStatus> {
    let rules: Vec<UpdateRule> = kinds.iter().map(|&k| cfg.update_rule(k)).collect();
    let mut files = Vec::new();
    let mut rmse: Vec<Vec<f64>> = vec![Vec::new(); rules.len()];
    let mut early: Vec<Vec<f64>> = vec![Vec::new(); rules.len()];
    for &seed in &cfg.seeds {
        let metrics: Vec<TrackMetrics> = synth::compare_rules(&cfg.stream_spec(seed), &rules)?;
        for (k, m) in metrics.iter().enumerate() {
            let path = cfg.out.join(format!("{prefix}_{}_seed{seed}.csv", m.rule));
            write_with(&path, |w| synth::write_csv(w, &m.records))?;
            files.push(path);
            rmse[k].push(m.tracking_rmse);
            early[k].push(synth::early_deviation(m, 1000));
        }
    }
    let mut summary = Vec::new();
    for (k, rule) in rules.iter().enumerate() {
        summary.push(SummaryRow {
            rule: rule.name().into(),
            metric: "tracking_rmse",
            values: rmse[k].clone(),
        });
        summary.push(SummaryRow {
            rule: rule.name().into(),
            metric: "deviation_mean_first_1000",
            values: early[k].clone(),
        });
    }
    Ok(RunStatus {
        files,
        summary,
        diverged: false,
    })
}

struct SeedResult {
    seed: u64,
    outcome: rl::TrainOutcome,
    eval: rl::EvalStats,
    baseline: rl::EvalStats,
    step_log: Option<Vec<u8>>,
}

fn run_train(cfg: &RunConfig) -> Result<RunStatus> {
    let spec = cfg.env_spec();
    let rule = cfg.update_rule(cfg.rule);
    let results: Vec<Result<SeedResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                let spec = spec.clone();
                scope.spawn(move || -> Result<SeedResult> {
                    let trainer = cfg.trainer_config(seed);
                    let mut log = cfg.step_log.then(|| {
                        let mut buf = Vec::new();
                        let _ = writeln!(buf, "{STEP_LOG_HEADER}");
                        buf
                    });
                    let outcome = match log.as_mut() {
                        Some(buf) => {
                            let mut obs = |step: u64, v: &[UpdateReport], p: &[UpdateReport]| {
                                write_step_rows(buf, step, "V", v);
                                write_step_rows(buf, step, "pi", p);
                            };
                            rl::train_observed(&trainer, &spec, &mut obs)?
                        }
                        None => rl::train(&trainer, &spec)?,
                    };
                    let eval = rl::evaluate(&outcome.policy, &spec, cfg.eval_episodes, seed)?;
                    let baseline = rl::random_policy_baseline(&trainer, &spec, cfg.eval_episodes)?;
                    Ok(SeedResult {
                        seed,
                        outcome,
                        eval,
                        baseline,
                        step_log: log,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });

    let mut files = Vec::new();
    let mut returns = Vec::new();
    let mut baselines = Vec::new();
    let mut diverged = false;
    let name = rule.name();
    for result in results {
        let r = result?;
        let seed = r.seed;
        let path = cfg.out.join(format!("train_{name}_seed{seed}.csv"));
        write_with(&path, |w| rl::write_train_csv(w, &r.outcome.curve))?;
        files.push(path);

        let path = cfg.out.join(format!("policy_{name}_seed{seed}.json"));
        write_with(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &r.outcome.policy)?;
            writeln!(w)
        })?;
        files.push(path);

        let path = cfg.out.join(format!("eval_{name}_seed{seed}.json"));
        write_eval(&path, name, seed, cfg.eval_episodes, &r.eval, &r.baseline)?;
        files.push(path);

        if let Some(buf) = r.step_log {
            let path = cfg.out.join(format!("updates_{name}_seed{seed}.csv"));
            fs::write(&path, buf).with_context(|| format!("cannot write {}", path.display()))?;
            files.push(path);
        }
        if let Some(step) = r.outcome.diverged_at {
            eprintln!("seed {seed}: divergence guard fired at step {step}");
            diverged = true;
        }
        returns.push(r.eval.mean);
        baselines.push(r.baseline.mean);
    }
    Ok(RunStatus {
        files,
        summary: vec![
            SummaryRow {
                rule: name.into(),
                metric: "eval_return",
                values: returns,
            },
            SummaryRow {
                rule: "random_init".into(),
                metric: "eval_return",
                values: baselines,
            },
        ],
        diverged,
    })
}

fn run_evaluate(cfg: &RunConfig) -> Result<RunStatus> {
    let spec = cfg.env_spec();
    let loaded = match &cfg.policy {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let policy: GaussianPolicy = serde_json::from_str(&text)
                .with_context(|| format!("bad policy checkpoint {}", path.display()))?;
            if policy.net.input_dim() != spec.obs_dim() || policy.act_dim() != spec.act_dim() {
                anyhow::bail!(
                    "policy checkpoint does not fit the {} environment",
                    spec.kind.name()
                );
            }
            Some(policy)
        }
        None => None,
    };
    let label = if loaded.is_some() {
        "checkpoint"
    } else {
        "random_init"
    };
    let mut files = Vec::new();
    let mut means = Vec::new();
    for &seed in &cfg.seeds {
        let trainer = cfg.trainer_config(seed);
        let baseline = rl::random_policy_baseline(&trainer, &spec, cfg.eval_episodes)?;
        let stats = match &loaded {
            Some(policy) => rl::evaluate(policy, &spec, cfg.eval_episodes, seed)?,
            None => baseline.clone(),
        };
        let path = cfg.out.join(format!("eval_seed{seed}.json"));
        write_eval(&path, label, seed, cfg.eval_episodes, &stats, &baseline)?;
        files.push(path);
        means.push(stats.mean);
    }
    Ok(RunStatus {
        files,
        summary: vec![SummaryRow {
            rule: label.into(),
            metric: "eval_return",
            values: means,
        }],
        diverged: false,
    })
}

pub const STEP_LOG_HEADER: &str =
    "step,net,subset,deviation_mean,robustness,tau1,tau2,tau_c,nu_tilde";

fn write_step_rows(buf: &mut Vec<u8>, step: u64, net: &str, reports: &[UpdateReport]) {
    for r in reports {
        let nu = r.nu_tilde.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            buf,
            "{step},{net},{},{},{},{},{},{},{nu}",
            r.subset_id, r.deviation_mean, r.robustness, r.tau1, r.tau2, r.tau_c
        );
    }
}

fn write_eval(
    path: &Path,
    rule: &str,
    seed: u64,
    episodes: u32,
    stats: &rl::EvalStats,
    baseline: &rl::EvalStats,
) -> Result<()> {
    let record = EvalRecord {
        rule,
        seed,
        episodes,
        mean: stats.mean,
        std: stats.std,
        baseline_mean: baseline.mean,
        baseline_std: baseline.std,
    };
    write_with(path, |w| {
        serde_json::to_writer(&mut *w, &record)?;
        writeln!(w)
    })
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_with(path, |w| {
        writeln!(w, "{SUMMARY_HEADER}")?;
        for row in rows {
            let (mean, std) = mean_std(&row.values);
            writeln!(
                w,
                "{},{},{},{mean},{std}",
                row.rule,
                row.metric,
                row.values.len()
            )?;
        }
        Ok(())
    })
}

fn write_with(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).with_context(|| format!("cannot write {}", path.display()))?;
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
