//! Small tanh MLP with manual reverse-mode gradients and plain SGD.
//!
//! Every weight matrix (`l{k}.weight`, row-major `out x in`) and bias vector
//! (`l{k}.bias`) is registered as its own [`ParamSubset`], which is the unit
//! the target-network rules operate on.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, ensure_finite, Error, Result};
use crate::updates::ParamSubset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<ParamSubset>,
    #[serde(skip)]
    version: u64,
}

/// Activations recorded by [`Mlp::forward_cached`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    version: u64,
}

/// Gradients keyed by subset id, in registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<ParamSubset>);

impl Gradients {
    pub fn zeros_like(params: &[ParamSubset]) -> Self {
        Self(
            params
                .iter()
                .map(|p| ParamSubset {
                    id: p.id.clone(),
                    values: vec![0.0; p.len()],
                })
                .collect(),
        )
    }

    /// `self += scale * other`, matching subsets by position and id.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) -> Result<()> {
        if self.0.len() != other.0.len() {
            return Err(Error::Shape("gradient sets differ in size".into()));
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            if a.id != b.id || a.len() != b.len() {
                return Err(Error::Shape(format!("gradient `{}` vs `{}`", a.id, b.id)));
            }
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += scale * y;
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.0
            .iter()
            .find(|g| g.id == id)
            .map(|g| g.values.as_slice())
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|g| &g.values)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Mlp {
    /// All-zero network with layer widths `sizes` (input first, output last).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        let mut params = Vec::with_capacity(2 * (sizes.len() - 1));
        for (k, pair) in sizes.windows(2).enumerate() {
            params.push(ParamSubset {
                id: format!("l{k}.weight"),
                values: vec![0.0; pair[0] * pair[1]],
            });
            params.push(ParamSubset {
                id: format!("l{k}.bias"),
                values: vec![0.0; pair[1]],
            });
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
            version: 0,
        })
    }

    /// Uniform ±sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for (k, pair) in sizes.windows(2).enumerate() {
            let limit = (6.0 / (pair[0] + pair[1]) as f64).sqrt();
            for w in &mut net.params[2 * k].values {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn params(&self) -> &[ParamSubset] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(ParamSubset::len).sum()
    }

    /// Mutable access; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [ParamSubset] {
        self.version += 1;
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[ParamSubset]) -> Result<()> {
        check_layout(&self.params, params)?;
        for (dst, src) in self.params.iter_mut().zip(params) {
            dst.values.copy_from_slice(&src.values);
        }
        self.version += 1;
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_cached(input).map(|(out, _)| out)
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let layers = self.sizes.len() - 1;
        let mut inputs = Vec::with_capacity(layers);
        let mut x = input.to_vec();
        for k in 0..layers {
            let (n_in, n_out) = (self.sizes[k], self.sizes[k + 1]);
            let w = &self.params[2 * k].values;
            let b = &self.params[2 * k + 1].values;
            let mut y: Vec<f64> = (0..n_out)
                .map(|o| {
                    b[o] + w[o * n_in..(o + 1) * n_in]
                        .iter()
                        .zip(&x)
                        .map(|(a, c)| a * c)
                        .sum::<f64>()
                })
                .collect();
            if k + 1 < layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            inputs.push(std::mem::replace(&mut x, y));
        }
        Ok((
            x,
            ForwardCache {
                inputs,
                version: self.version,
            },
        ))
    }

    /// Gradient of `output · upstream` with respect to every parameter.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Gradients> {
        if cache.version != self.version || cache.inputs.len() != self.sizes.len() - 1 {
            return Err(Error::Contract("forward cache is stale".into()));
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "upstream gradient has {} values, output has {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        let mut grads = Gradients::zeros_like(&self.params);
        let mut delta = upstream.to_vec();
        for k in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[k], self.sizes[k + 1]);
            let x = &cache.inputs[k];
            {
                let gw = &mut grads.0[2 * k].values;
                for o in 0..n_out {
                    for i in 0..n_in {
                        gw[o * n_in + i] = delta[o] * x[i];
                    }
                }
            }
            grads.0[2 * k + 1].values.copy_from_slice(&delta);
            if k > 0 {
                let w = &self.params[2 * k].values;
                // x = tanh(pre) for every hidden layer input.
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum();
                        back * (1.0 - x[i] * x[i])
                    })
                    .collect();
            }
        }
        Ok(grads)
    }

    /// `θ <- θ - lr * g` for every registered subset.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        sgd_apply(&mut self.params, grads, learning_rate)?;
        self.version += 1;
        Ok(())
    }

    pub fn max_abs_param(&self) -> f64 {
        self.params
            .iter()
            .flat_map(|p| &p.values)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn sgd_apply(
    params: &mut [ParamSubset],
    grads: &Gradients,
    learning_rate: f64,
) -> Result<()> {
    for p in params.iter() {
        let Some(g) = grads.get(&p.id) else {
            return Err(Error::MissingSubset(p.id.clone()));
        };
        if g.len() != p.len() {
            return Err(Error::Shape(format!(
                "gradient for `{}` has wrong length",
                p.id
            )));
        }
        ensure_finite(&format!("gradient `{}`", p.id), g)?;
    }
    for p in params.iter_mut() {
        let g = grads.get(&p.id).expect("checked above");
        for (v, d) in p.values.iter_mut().zip(g) {
            *v -= learning_rate * d;
        }
    }
    Ok(())
}

fn check_layout(expected: &[ParamSubset], given: &[ParamSubset]) -> Result<()> {
    if expected.len() != given.len() {
        return Err(Error::Shape(format!(
            "expected {} subsets, got {}",
            expected.len(),
            given.len()
        )));
    }
    for (e, g) in expected.iter().zip(given) {
        if e.id != g.id {
            return Err(Error::MissingSubset(e.id.clone()));
        }
        if e.len() != g.len() {
            return Err(Error::Shape(format!(
                "subset `{}` has {} values, expected {}",
                g.id,
                g.len(),
                e.len()
            )));
        }
    }
    Ok(())
}

/// Diagonal Gaussian policy. The mean is `action_bound · tanh(net(s))`, so it
/// always lies inside the action box; a state-independent `log_std` bias
/// vector gives the spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub net: Mlp,
    pub log_std: ParamSubset,
    pub action_bound: f64,
}

pub const LOG_STD_ID: &str = "log_std";
/// `sgd_step` projects `log_std` onto this range.
pub const LOG_STD_RANGE: (f64, f64) = (-3.0, 1.0);
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

impl GaussianPolicy {
    pub fn new(net: Mlp, action_bound: f64) -> Result<Self> {
        if !(action_bound > 0.0 && action_bound.is_finite()) {
            return Err(config_err("action_bound", "must be positive"));
        }
        let act_dim = net.output_dim();
        Ok(Self {
            net,
            log_std: ParamSubset {
                id: LOG_STD_ID.to_string(),
                values: vec![0.0; act_dim],
            },
            action_bound,
        })
    }

    pub fn act_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.values.iter().map(|l| l.exp()).collect()
    }

    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.squash(self.net.forward(obs)?))
    }

    /// Mean plus the network cache and `dμ/dz` for backpropagation.
    pub fn mean_cached(&self, obs: &[f64]) -> Result<(Vec<f64>, ForwardCache, Vec<f64>)> {
        let (z, cache) = self.net.forward_cached(obs)?;
        let mean = self.squash(z);
        let slope = mean
            .iter()
            .map(|m| {
                let t = m / self.action_bound;
                self.action_bound * (1.0 - t * t)
            })
            .collect();
        Ok((mean, cache, slope))
    }

    fn squash(&self, z: Vec<f64>) -> Vec<f64> {
        z.into_iter()
            .map(|v| self.action_bound * v.tanh())
            .collect()
    }

    /// Registry: network subsets followed by `log_std`.
    pub fn params(&self) -> Vec<ParamSubset> {
        let mut all = self.net.params().to_vec();
        all.push(self.log_std.clone());
        all
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count() + self.log_std.len()
    }

    pub fn set_params(&mut self, params: &[ParamSubset]) -> Result<()> {
        let (last, rest) = params
            .split_last()
            .ok_or_else(|| Error::Shape("empty policy parameter list".into()))?;
        if last.id != LOG_STD_ID || last.len() != self.log_std.len() {
            return Err(Error::MissingSubset(LOG_STD_ID.into()));
        }
        self.net.set_params(rest)?;
        self.log_std.values.copy_from_slice(&last.values);
        Ok(())
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        let mean = self.mean(obs)?;
        Ok(log_prob_with(&mean, &self.log_std.values, action))
    }

    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        let (last, rest) = grads
            .0
            .split_last()
            .ok_or_else(|| Error::MissingSubset(LOG_STD_ID.into()))?;
        if last.id != LOG_STD_ID {
            return Err(Error::MissingSubset(LOG_STD_ID.into()));
        }
        self.net
            .sgd_step(&Gradients(rest.to_vec()), learning_rate)?;
        sgd_apply(
            std::slice::from_mut(&mut self.log_std),
            &Gradients(vec![last.clone()]),
            learning_rate,
        )?;
        for l in &mut self.log_std.values {
            *l = l.clamp(LOG_STD_RANGE.0, LOG_STD_RANGE.1);
        }
        Ok(())
    }

    pub fn max_abs_param(&self) -> f64 {
        self.log_std
            .values
            .iter()
            .fold(self.net.max_abs_param(), |m, v| m.max(v.abs()))
    }
}

pub(crate) fn log_prob_with(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, l), a)| {
            let z = (a - m) / l.exp();
            -0.5 * z * z - l - LN_SQRT_2PI
        })
        .sum()
}
