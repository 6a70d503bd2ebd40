use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn catsoft(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catsoft"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run catsoft")
}

/// `(rule, metric) -> (seeds, mean)` from summary.csv.
fn summary(out: &Path) -> HashMap<(String, String), (usize, f64)> {
    let text = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rule,metric,seeds,mean,std"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                (f[0].to_string(), f[1].to_string()),
                (f[2].parse().unwrap(), f[3].parse().unwrap()),
            )
        })
        .collect()
}

#[test]
fn clean_constant_stream_is_tracked_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let o = catsoft(
        &[
            "synth",
            "--seed",
            "0",
            "--set",
            "noise_std=0",
            "--set",
            "outlier_prob=0",
            "--set",
            "trajectory=constant:2.5",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    let (_, rmse) = s[&("catsoft".to_string(), "tracking_rmse".to_string())];
    assert!(rmse < 1e-6, "rmse {rmse}");
    assert!(dir.path().join("config.resolved").exists());
    assert!(dir.path().join("synth_catsoft_seed0.csv").exists());
}

#[test]
fn two_seeds_give_two_files_and_one_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let o = catsoft(
        &[
            "synth",
            "--rule",
            "soft",
            "--seed",
            "3,4",
            "--set",
            "horizon=200",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    for seed in [3, 4] {
        let csv =
            fs::read_to_string(dir.path().join(format!("synth_soft_seed{seed}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 201);
    }
    let s = summary(dir.path());
    assert_eq!(s[&("soft".to_string(), "tracking_rmse".to_string())].0, 2);
}

#[test]
fn compare_orders_rules_on_the_outlier_stream() {
    let dir = tempfile::tempdir().unwrap();
    let o = catsoft(&["compare", "--seed", "0"], dir.path());
    assert!(o.status.success());
    let s = summary(dir.path());
    let rmse = |r: &str| s[&(r.to_string(), "tracking_rmse".to_string())].1;
    assert!(rmse("atsoft") < rmse("tsoft"));
    assert!(rmse("tsoft") < rmse("soft"));
}

#[test]
fn invalid_input_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = catsoft(&["synth", "--q", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`q`"));

    let o = catsoft(&["synth", "--set", "bogus=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    assert!(!dir.path().join("summary.csv").exists());
}

#[test]
fn help_exits_zero() {
    let o = Command::new(env!("CARGO_BIN_EXE_catsoft"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    fs::write(&file, "# comment\ntau = 0.2\nhorizon = 50\nrule = soft\n").unwrap();
    let out = dir.path().join("out");
    let o = catsoft(
        &["synth", "--config", file.to_str().unwrap(), "--tau", "0.3"],
        &out,
    );
    assert!(o.status.success());
    let echo = fs::read_to_string(out.join("config.resolved")).unwrap();
    assert!(echo.lines().any(|l| l == "tau=0.3"), "{echo}");
    assert!(echo.lines().any(|l| l == "horizon=50"), "{echo}");
    assert!(out.join("synth_soft_seed0.csv").exists());
}

#[test]
fn training_is_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let o = catsoft(
            &[
                "train",
                "--rule",
                "atsoft",
                "--seed",
                "5",
                "--set",
                "episodes=4",
                "--set",
                "eval_episodes=2",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read(dir.path().join("train_atsoft_seed5.csv")).unwrap(),
            fs::read(dir.path().join("policy_atsoft_seed5.json")).unwrap(),
        )
    };
    assert_eq!(run(), run());
}
