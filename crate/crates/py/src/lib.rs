use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pcnsim::placement::{self, AssignmentPlan, PlacementPlan, PlacementProblem, VisitOrder};
use pcnsim::sim::{self, RoutingScheme, SimConfig, SimReport};
use pcnsim::{Amount, NodeId, SimTime};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Simulation config. Built from TOML, tweaked with `set("a.b", "value")`.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (toml = "", overrides = Vec::new()))]
    fn new(toml: &str, overrides: Vec<String>) -> PyResult<Self> {
        Ok(PyConfig { inner: SimConfig::from_toml_with_overrides(toml, &overrides).map_err(err)? })
    }

    /// Three-node deadlock scenario: `instant`, `waterfilling` or `price`.
    #[staticmethod]
    fn deadlock_preset(scheme: &str) -> PyResult<Self> {
        let s: RoutingScheme = scheme.parse().map_err(err)?;
        Ok(PyConfig { inner: SimConfig::deadlock_preset(s) })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let text = self.inner.to_toml_string();
        self.inner = SimConfig::from_toml_with_overrides(&text, &[format!("{key}={value}")]).map_err(err)?;
        Ok(())
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        format!("Config(seed={}, scheme={}, duration_s={})", self.inner.seed, self.inner.routing.scheme, self.inner.duration_s)
    }
}

/// Result of one simulation run.
#[pyclass(name = "Report")]
struct PyReport {
    inner: SimReport,
}

#[pymethods]
impl PyReport {
    fn metrics(&self) -> BTreeMap<String, f64> {
        let m = &self.inner.metrics;
        BTreeMap::from([
            ("demands".into(), m.demands as f64),
            ("completed".into(), m.completed as f64),
            ("tsr".into(), m.tsr),
            ("normalized_throughput".into(), m.normalized_throughput),
            ("avg_delay".into(), m.avg_delay),
            ("fees_paid".into(), m.fees_paid),
            ("deadlock_events".into(), m.deadlock_events as f64),
            ("control_messages".into(), m.control_messages as f64),
            ("tus_sent".into(), m.tus_sent as f64),
            ("tus_aborted".into(), m.tus_aborted as f64),
        ])
    }

    fn summary(&self) -> String {
        sim::summary_text(&self.inner)
    }

    fn records_csv(&self) -> PyResult<String> {
        let mut out = Vec::new();
        sim::write_records(&self.inner, &mut out).map_err(err)?;
        String::from_utf8(out).map_err(err)
    }

    fn traces_csv(&self) -> PyResult<String> {
        let mut out = Vec::new();
        sim::write_traces(&self.inner.traces, &mut out).map_err(err)?;
        String::from_utf8(out).map_err(err)
    }

    /// Completed value between two nodes, both directions, per second.
    fn throughput_between(&self, a: u32, b: u32, from_s: f64, to_s: f64) -> f64 {
        self.inner.throughput_between(NodeId(a), NodeId(b), SimTime::from_secs_f64(from_s), SimTime::from_secs_f64(to_s))
    }

    fn balanced_fraction(&self, eps: f64) -> f64 {
        self.inner.balanced_fraction(eps)
    }

    /// Smallest and largest total channel funds seen, in tokens.
    fn funds_range(&self) -> (f64, f64) {
        (self.inner.funds_range.0.tokens(), self.inner.funds_range.1.tokens())
    }

    fn deadlocks(&self) -> Vec<(f64, u32)> {
        self.inner.deadlocks.iter().map(|e| (e.at.secs(), e.node.0)).collect()
    }

    #[getter]
    fn hubs(&self) -> Vec<u32> {
        self.inner.hubs.iter().map(|h| h.0).collect()
    }
}

#[pyfunction]
fn simulate(py: Python<'_>, config: &PyConfig) -> PyResult<PyReport> {
    let cfg = config.inner.clone();
    let r = py.detach(move || sim::run(&cfg)).map_err(err)?;
    Ok(PyReport { inner: r })
}

/// Network for a config as `node`/`chan` lines.
#[pyfunction]
fn network_dump(config: &PyConfig) -> PyResult<String> {
    Ok(sim::prepare(&config.inner).map_err(err)?.network.dump())
}

/// Hub placement instance over explicit cost matrices.
#[pyclass(name = "PlacementProblem")]
struct PyPlacement {
    inner: PlacementProblem,
}

#[pymethods]
impl PyPlacement {
    #[new]
    fn new(zeta: Vec<Vec<f64>>, delta: Vec<Vec<f64>>, epsilon: Vec<Vec<f64>>, omega: f64) -> PyResult<Self> {
        let clients = (0..zeta.len() as u32).map(NodeId).collect();
        let offset = zeta.len() as u32;
        let cands = (0..delta.len() as u32).map(|i| NodeId(offset + i)).collect();
        let inner = PlacementProblem::new(clients, cands, zeta, delta, epsilon, omega).map_err(err)?;
        Ok(PyPlacement { inner })
    }

    /// Placed candidate indices, assignment and balance cost.
    fn solve_exact(&self) -> PyResult<(Vec<usize>, Vec<usize>, f64)> {
        let s = placement::solve_exact(&self.inner, placement::EXACT_LIMIT).map_err(err)?;
        Ok((s.placement.placed().collect(), s.assignment.hubs().to_vec(), s.cost))
    }

    /// One randomized double-greedy run.
    fn double_greedy(&self, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = placement::greedy_solution(&self.inner, &mut rng, VisitOrder::Ascending).map_err(err)?;
        Ok((s.placement.placed().collect(), s.assignment.hubs().to_vec(), s.cost))
    }

    fn optimal_assignment(&self, placed: Vec<usize>) -> PyResult<Vec<usize>> {
        let x = PlacementPlan::from_indices(self.inner.candidate_count(), &placed).map_err(err)?;
        Ok(placement::optimal_assignment(&self.inner, &x).map_err(err)?.hubs().to_vec())
    }

    fn balance_cost(&self, placed: Vec<usize>, assignment: Vec<usize>) -> PyResult<f64> {
        let x = PlacementPlan::from_indices(self.inner.candidate_count(), &placed).map_err(err)?;
        placement::balance_cost(&self.inner, &x, &AssignmentPlan::new(assignment)).map_err(err)
    }
}

/// TU sizes for a payment, in tokens.
#[pyfunction]
fn split_amounts(value: f64, min_tu: f64, max_tu: f64) -> PyResult<Vec<f64>> {
    let parts = pcnsim::routing::split_amounts(Amount::from_tokens(value), Amount::from_tokens(min_tu), Amount::from_tokens(max_tu))
        .map_err(err)?;
    Ok(parts.into_iter().map(|a| a.tokens()).collect())
}

#[pymodule]
#[pyo3(name = "pcnsim")]
fn pcnsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyPlacement>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(network_dump, m)?)?;
    m.add_function(wrap_pyfunction!(split_amounts, m)?)?;
    Ok(())
}
