//! Python bindings: update rules, the target tracker, the synthetic stream
//! benchmark and the desk-scale trainer.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use catsoft::rl::{self, EnvSpec, TrainerConfig};
use catsoft::synth::{self, StreamSpec};
use catsoft::updates;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// One update rule with its hyperparameters.
#[pyclass(name = "UpdateRule", frozen, from_py_object)]
#[derive(Clone)]
struct PyUpdateRule(updates::UpdateRule);

#[pymethods]
impl PyUpdateRule {
    #[staticmethod]
    fn hard(period: u64) -> PyResult<Self> {
        checked(updates::UpdateRule::hard(period))
    }

    #[staticmethod]
    #[pyo3(signature = (tau=0.1))]
    fn soft(tau: f64) -> PyResult<Self> {
        checked(updates::UpdateRule::soft(tau))
    }

    #[staticmethod]
    #[pyo3(signature = (tau=0.1, nu=1.0))]
    fn tsoft(tau: f64, nu: f64) -> PyResult<Self> {
        checked(updates::UpdateRule::tsoft(tau, nu))
    }

    #[staticmethod]
    #[pyo3(signature = (tau=0.1, nu_lower=1.0))]
    fn atsoft(tau: f64, nu_lower: f64) -> PyResult<Self> {
        checked(updates::UpdateRule::atsoft(tau, nu_lower))
    }

    #[staticmethod]
    #[pyo3(signature = (tau=0.1, nu_lower=1.0, lambda_=1.0, q=1.0))]
    fn catsoft(tau: f64, nu_lower: f64, lambda_: f64, q: f64) -> PyResult<Self> {
        checked(updates::UpdateRule::catsoft(tau, nu_lower, lambda_, q))
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn __repr__(&self) -> String {
        format!("UpdateRule({})", self.0)
    }
}

fn checked(rule: updates::UpdateRule) -> PyResult<PyUpdateRule> {
    rule.validate().map_err(err)?;
    Ok(PyUpdateRule(rule))
}

fn subsets(main: &Bound<'_, PyDict>) -> PyResult<Vec<updates::ParamSubset>> {
    main.iter()
        .map(|(k, v)| {
            updates::ParamSubset::new(k.extract::<String>()?, v.extract::<Vec<f64>>()?).map_err(err)
        })
        .collect()
}

fn subset_dict<'py>(
    py: Python<'py>,
    list: &[updates::ParamSubset],
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for s in list {
        d.set_item(&s.id, &s.values)?;
    }
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &updates::UpdateReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("subset_id", &r.subset_id)?;
    d.set_item("d", r.d)?;
    d.set_item("w1", r.w1)?;
    d.set_item("w2", r.w2)?;
    d.set_item("w1_bar", r.w1_bar)?;
    d.set_item("w2_bar", r.w2_bar)?;
    d.set_item("tau1", r.tau1)?;
    d.set_item("tau2", r.tau2)?;
    d.set_item("tau_c", r.tau_c)?;
    d.set_item("consolidated_indices", &r.consolidated_indices)?;
    d.set_item("deviation_mean", r.deviation_mean)?;
    d.set_item("robustness", r.robustness)?;
    d.set_item("nu_tilde", r.nu_tilde)?;
    Ok(d)
}

/// Target parameters for a dict of named subsets `{id: [values]}`.
#[pyclass(name = "TargetTracker")]
struct PyTargetTracker(updates::TargetTracker);

#[pymethods]
impl PyTargetTracker {
    #[new]
    fn new(rule: PyUpdateRule, main: &Bound<'_, PyDict>) -> PyResult<Self> {
        let main = subsets(main)?;
        updates::TargetTracker::new(rule.0, &main)
            .map(Self)
            .map_err(err)
    }

    /// One update. Returns `(main, reports)`: the main parameters after any
    /// consolidation and one report dict per subset.
    fn update<'py>(
        &mut self,
        py: Python<'py>,
        main: &Bound<'py, PyDict>,
    ) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyList>)> {
        let mut main = subsets(main)?;
        let reports = self.0.update(&mut main).map_err(err)?;
        let list = PyList::empty(py);
        for r in &reports {
            list.append(report_dict(py, r)?)?;
        }
        Ok((subset_dict(py, &main)?, list))
    }

    fn target(&self, id: &str) -> PyResult<Vec<f64>> {
        self.0
            .target(id)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| err(format!("no subset `{id}`")))
    }

    fn targets<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        subset_dict(py, &self.0.targets())
    }

    #[getter]
    fn step(&self) -> u64 {
        self.0.step()
    }

    #[getter]
    fn rule(&self) -> PyUpdateRule {
        PyUpdateRule(*self.0.rule())
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        updates::TargetTracker::from_json(text)
            .map(Self)
            .map_err(err)
    }
}

/// Value at the `q`-quantile (nearest rank) of `values`.
#[pyfunction]
fn quantile_threshold(values: Vec<f64>, q: f64) -> PyResult<f64> {
    updates::quantile_threshold(&values, q).map_err(err)
}

fn stream_spec(kind: &str, seed: u64) -> PyResult<StreamSpec> {
    match kind {
        "canonical" => Ok(StreamSpec::canonical(seed)),
        "clean" => Ok(StreamSpec::clean(seed)),
        "sticky" => Ok(StreamSpec::sticky(seed)),
        _ => Err(err(format!(
            "unknown stream `{kind}` (canonical | clean | sticky)"
        ))),
    }
}

/// Runs each rule on one synthetic stream. Returns one dict per rule with
/// `tracking_rmse`, `early_deviation` (steps 1..=1000) and `final_nu_tilde`.
#[pyfunction]
#[pyo3(signature = (rules, stream="canonical", seed=0, horizon=None, dim=None))]
fn compare<'py>(
    py: Python<'py>,
    rules: Vec<PyUpdateRule>,
    stream: &str,
    seed: u64,
    horizon: Option<u64>,
    dim: Option<usize>,
) -> PyResult<Bound<'py, PyList>> {
    let mut spec = stream_spec(stream, seed)?;
    if let Some(h) = horizon {
        spec.horizon = h;
    }
    if let Some(d) = dim {
        spec.dim = d;
    }
    let rules: Vec<_> = rules.into_iter().map(|r| r.0).collect();
    let metrics = synth::compare_rules(&spec, &rules).map_err(err)?;
    let out = PyList::empty(py);
    for m in &metrics {
        let d = PyDict::new(py);
        d.set_item("rule", &m.rule)?;
        d.set_item("tracking_rmse", m.tracking_rmse)?;
        d.set_item("early_deviation", synth::early_deviation(m, 1000))?;
        d.set_item("final_nu_tilde", m.final_nu_tilde)?;
        out.append(d)?;
    }
    Ok(out)
}

fn env_spec(env: &str) -> PyResult<EnvSpec> {
    match env {
        "point_mass" => Ok(EnvSpec::point_mass()),
        "pendulum" => Ok(EnvSpec::pendulum()),
        _ => Err(err(format!("unknown environment `{env}`"))),
    }
}

/// Trains the actor-critic with `rule` on both target networks. Returns a
/// dict with the episode `returns`, the greedy `eval_mean`/`eval_std`, the
/// untrained policy's `baseline_mean` and `diverged_at`.
#[pyfunction]
#[pyo3(signature = (rule, seed=0, episodes=300, env="point_mass", eval_episodes=100))]
fn train<'py>(
    py: Python<'py>,
    rule: PyUpdateRule,
    seed: u64,
    episodes: u32,
    env: &str,
    eval_episodes: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = env_spec(env)?;
    let cfg = TrainerConfig {
        episodes,
        eval_episodes,
        seed,
        ..TrainerConfig::with_rule(rule.0)
    };
    let (outcome, eval, baseline) = py
        .detach(|| -> catsoft::Result<_> {
            let outcome = rl::train(&cfg, &spec)?;
            let eval = rl::evaluate(&outcome.policy, &spec, eval_episodes, seed)?;
            let baseline = rl::random_policy_baseline(&cfg, &spec, eval_episodes)?;
            Ok((outcome, eval, baseline))
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    let returns: Vec<f64> = outcome.curve.iter().map(|e| e.episode_return).collect();
    d.set_item("returns", returns)?;
    d.set_item("eval_mean", eval.mean)?;
    d.set_item("eval_std", eval.std)?;
    d.set_item("baseline_mean", baseline.mean)?;
    d.set_item("diverged_at", outcome.diverged_at)?;
    Ok(d)
}

#[pymodule]
fn catsoft_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUpdateRule>()?;
    m.add_class::<PyTargetTracker>()?;
    m.add_function(wrap_pyfunction!(quantile_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    Ok(())
}
