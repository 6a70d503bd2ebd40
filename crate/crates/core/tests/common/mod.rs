//! Finite-difference gradient checks shared by the integration tests.
#![allow(dead_code)]

use catsoft::nn::{GaussianPolicy, Gradients, Mlp};
use catsoft::rl::{actor_loss_grad, critic_loss_grad, Transition};
use catsoft::updates::ParamSubset;
use rand::{Rng, RngCore};

pub const FD_STEP: f64 = 1e-6;
/// Gradients smaller than this are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;
pub const GRAD_TOL: f64 = 1e-4;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Largest relative error between `grads` and central differences of `f`
/// around `params`.
pub fn check(
    params: &[ParamSubset],
    grads: &Gradients,
    mut f: impl FnMut(&[ParamSubset]) -> f64,
) -> f64 {
    let mut work = params.to_vec();
    let mut worst: f64 = 0.0;
    for (k, p) in params.iter().enumerate() {
        let g = grads.get(&p.id).expect("gradient for every subset");
        for j in 0..p.len() {
            work[k].values[j] = p.values[j] + FD_STEP;
            let up = f(&work);
            work[k].values[j] = p.values[j] - FD_STEP;
            let down = f(&work);
            work[k].values[j] = p.values[j];
            worst = worst.max(rel_err(g[j], (up - down) / (2.0 * FD_STEP)));
        }
    }
    worst
}

fn sizes(rng: &mut impl Rng, input: usize, output: usize) -> Vec<usize> {
    let mut s = vec![input];
    for _ in 0..rng.random_range(1..=2) {
        s.push(rng.random_range(1..=8));
    }
    s.push(output);
    s
}

fn vec_in(rng: &mut impl Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

/// Random network and input; objective `Σ c_k out_k`.
pub fn mlp_instance(rng: &mut (impl Rng + RngCore)) -> f64 {
    let input = rng.random_range(1..=4);
    let output = rng.random_range(1..=3);
    let net = Mlp::new(&sizes(rng, input, output), rng).unwrap();
    let x = vec_in(rng, input, 2.0);
    let c = vec_in(rng, output, 1.0);
    let (_, cache) = net.forward_cached(&x).unwrap();
    let grads = net.backward(&cache, &c).unwrap();
    let mut probe = net.clone();
    check(net.params(), &grads, |p| {
        probe.set_params(p).unwrap();
        probe
            .forward(&x)
            .unwrap()
            .iter()
            .zip(&c)
            .map(|(o, c)| o * c)
            .sum()
    })
}

fn batch(
    rng: &mut impl Rng,
    obs: usize,
    act: usize,
    around: Option<&GaussianPolicy>,
) -> Vec<Transition> {
    (0..rng.random_range(1..=4))
        .map(|_| {
            let s = vec_in(rng, obs, 1.5);
            let a = match around {
                Some(p) => {
                    let mean = p.mean(&s).unwrap();
                    mean.iter()
                        .map(|m| m + rng.random_range(-0.5..0.5))
                        .collect()
                }
                None => vec_in(rng, act, 1.0),
            };
            Transition {
                s,
                a,
                r: rng.random_range(-1.0..1.0),
                s_next: vec_in(rng, obs, 1.5),
                terminal: rng.random_bool(0.2),
            }
        })
        .collect()
}

pub fn critic_instance(rng: &mut (impl Rng + RngCore)) -> f64 {
    let obs = rng.random_range(1..=3);
    let s = sizes(rng, obs, 1);
    let value = Mlp::new(&s, rng).unwrap();
    let value_target = Mlp::new(&s, rng).unwrap();
    let b = batch(rng, obs, 1, None);
    let (_, grads) = critic_loss_grad(&b, &value, &value_target, 0.99).unwrap();
    let mut probe = value.clone();
    check(value.params(), &grads, |p| {
        probe.set_params(p).unwrap();
        critic_loss_grad(&b, &probe, &value_target, 0.99).unwrap().0
    })
}

/// The behaviour policy is a small perturbation of the main policy so the
/// importance ratio stays inside its clamp.
pub fn actor_instance(rng: &mut (impl Rng + RngCore)) -> f64 {
    let obs = rng.random_range(1..=3);
    let act = rng.random_range(1..=2);
    let s = sizes(rng, obs, act);
    let mut policy =
        GaussianPolicy::new(Mlp::new(&s, rng).unwrap(), rng.random_range(0.5..2.0)).unwrap();
    let log_std = vec_in(rng, act, 0.3);
    policy.log_std.values = log_std;
    let mut params = policy.params();
    for p in &mut params {
        for v in &mut p.values {
            *v += rng.random_range(-0.05..0.05);
        }
    }
    let mut behaviour = policy.clone();
    behaviour.set_params(&params).unwrap();
    let vs = sizes(rng, obs, 1);
    let value = Mlp::new(&vs, rng).unwrap();
    let value_target = Mlp::new(&vs, rng).unwrap();
    let b = batch(rng, obs, act, Some(&behaviour));

    let out = actor_loss_grad(&b, &policy, &behaviour, &value, &value_target, 0.99).unwrap();
    assert_eq!(out.skipped, 0);
    let mut probe = policy.clone();
    check(&policy.params(), &out.grads, |p| {
        probe.set_params(p).unwrap();
        actor_loss_grad(&b, &probe, &behaviour, &value, &value_target, 0.99)
            .unwrap()
            .loss
    })
}
