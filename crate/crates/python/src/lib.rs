//! Python bindings: states, norms, budgets, single estimations and sweeps.

use pyo3::exceptions::{PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use overlapix::descriptor::{StateKind, StateSpec};
use overlapix::estimator::{
    estimate_fidelity_pauli, estimate_fidelity_wigner, make_blackbox, EstimationReport,
};
use overlapix::experiments::{run_sweep, SweepFamily, SweepResult, SweepSpec};
use overlapix::smoothing::{adversarial_g, budget_optimize, truncate};
use overlapix::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Precondition(_) | Error::DimensionMismatch { .. } | Error::InvalidGenerators(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::BudgetOverflow { .. } => PyOverflowError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A quantum state parsed from a descriptor such as `fock:4` or `ghz:3`.
#[pyclass(name = "State", frozen)]
struct PyState {
    inner: StateSpec,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(descriptor: &str) -> PyResult<Self> {
        Ok(Self {
            inner: StateSpec::parse(descriptor).map_err(py_err)?,
        })
    }

    #[getter]
    fn label(&self) -> &str {
        self.inner.label()
    }

    #[getter]
    fn domain(&self) -> &'static str {
        match self.inner.kind() {
            StateKind::Wigner(_) => "cv",
            StateKind::Qubits(_) => "dv",
        }
    }

    #[getter]
    fn is_pure(&self) -> bool {
        self.inner.is_pure()
    }

    /// Black-box outcome magnitude.
    #[getter]
    fn r(&self) -> f64 {
        self.inner.r()
    }

    /// `{domain, l1, l2, linf, eps, smoothed_l1, c_star}`.
    #[pyo3(signature = (eps = 0.1))]
    fn norms<'py>(&self, py: Python<'py>, eps: f64) -> PyResult<Bound<'py, PyDict>> {
        let n = self.inner.norms(eps).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("domain", n.domain)?;
        d.set_item("l1", n.l1)?;
        d.set_item("l2", n.l2)?;
        d.set_item("linf", n.linf)?;
        d.set_item("eps", n.eps)?;
        d.set_item("smoothed_l1", n.smoothed_l1)?;
        d.set_item("c_star", n.c_star)?;
        Ok(d)
    }

    /// Exact fidelity with `other`, or `None` when no closed form is available.
    fn fidelity(&self, other: &PyState) -> Option<f64> {
        self.inner.fidelity(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("State('{}')", self.inner.label())
    }
}

/// Sample budget for estimating overlaps with `target`.
#[pyclass(name = "BudgetPlan", frozen, get_all)]
struct PyBudgetPlan {
    n_samples: u64,
    eps: f64,
    eps_prime: f64,
    delta: f64,
    r: f64,
    l1_tilde: f64,
    c_star: Option<f64>,
}

#[pymethods]
impl PyBudgetPlan {
    fn __repr__(&self) -> String {
        format!(
            "BudgetPlan(n_samples={}, eps={}, eps_prime={}, delta={})",
            self.n_samples, self.eps, self.eps_prime, self.delta
        )
    }
}

#[pyfunction]
fn budget(target: &PyState, eps: f64, delta: f64) -> PyResult<PyBudgetPlan> {
    let f = target.inner.target().map_err(py_err)?;
    let p = budget_optimize(&f, eps, delta, target.inner.r()).map_err(py_err)?;
    Ok(PyBudgetPlan {
        n_samples: p.n_samples(),
        eps,
        eps_prime: p.eps_prime,
        delta,
        r: p.r,
        l1_tilde: p.trunc.l1_tilde,
        c_star: p.trunc.c_star.is_finite().then_some(p.trunc.c_star),
    })
}

/// Threshold truncation of `target` at `eps`: `(c_star, l1_tilde, l2_residual)`.
#[pyfunction]
fn truncation(target: &PyState, eps: f64) -> PyResult<(f64, f64, f64)> {
    let f = target.inner.target().map_err(py_err)?;
    let t = truncate(&f, eps).map_err(py_err)?;
    Ok((t.c_star, t.l1_tilde, t.l2_residual))
}

/// Adversarial witness for `(target, eps)` as a JSON string.
#[pyfunction]
fn witness(target: &PyState, eps: f64) -> PyResult<String> {
    let f = target.inner.target().map_err(py_err)?;
    let g = adversarial_g(&f, eps).map_err(py_err)?;
    serde_json::to_string(&g).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyclass(name = "EstimationReport", frozen)]
struct PyReport {
    inner: EstimationReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn estimate(&self) -> f64 {
        self.inner.estimate
    }
    #[getter]
    fn n_samples(&self) -> u64 {
        self.inner.n_samples
    }
    #[getter]
    fn truth(&self) -> Option<f64> {
        self.inner.truth
    }
    #[getter]
    fn within_eps(&self) -> Option<bool> {
        self.inner.within_eps
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
    #[getter]
    fn elapsed_seconds(&self) -> f64 {
        self.inner.elapsed.as_secs_f64()
    }
    fn to_json(&self) -> String {
        self.inner.to_json()
    }
    fn __repr__(&self) -> String {
        format!(
            "EstimationReport(estimate={}, n_samples={}, truth={:?})",
            self.inner.estimate, self.inner.n_samples, self.inner.truth
        )
    }
}

/// Estimates `F(target, sigma)` from simulated measurements on `sigma`.
#[pyfunction]
fn estimate(py: Python<'_>, target: &PyState, sigma: &PyState, eps: f64, delta: f64, seed: u64) -> PyResult<PyReport> {
    let (t, s) = (&target.inner, &sigma.inner);
    let rep = py
        .detach(|| -> overlapix::Result<EstimationReport> {
            let mut bb = make_blackbox(s.measured()?, t.r(), seed)?;
            let mut rep = match t.kind() {
                StateKind::Wigner(w) => estimate_fidelity_wigner(w, &mut bb, eps, delta, seed)?,
                StateKind::Qubits(_) => estimate_fidelity_pauli(&t.table()?, &mut bb, eps, delta, seed)?,
            };
            rep.state_descriptors = vec![t.label().to_string(), s.label().to_string()];
            Ok(match t.fidelity(s) {
                Some(truth) => rep.with_truth(truth),
                None => rep,
            })
        })
        .map_err(py_err)?;
    Ok(PyReport { inner: rep })
}

#[pyclass(name = "SweepResult", frozen)]
struct PySweep {
    inner: SweepResult,
}

#[pymethods]
impl PySweep {
    #[getter]
    fn all_pass(&self) -> bool {
        self.inner.all_pass()
    }
    /// `[(name, pass, detail), ...]`
    #[getter]
    fn assertions(&self) -> Vec<(String, bool, String)> {
        self.inner
            .assertions
            .iter()
            .map(|a| (a.name.clone(), a.pass, a.detail.clone()))
            .collect()
    }
    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.columns.clone()
    }
    fn to_json(&self) -> String {
        self.inner.to_json()
    }
    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
    fn artifact_hash(&self) -> String {
        self.inner.artifact_hash()
    }
}

/// Runs a sweep family with its defaults, overriding whichever arguments are given.
#[pyfunction]
#[pyo3(signature = (family, seed, n=None, eps=None, delta=None, trials=None))]
fn sweep(
    py: Python<'_>,
    family: &str,
    seed: u64,
    n: Option<Vec<u32>>,
    eps: Option<f64>,
    delta: Option<f64>,
    trials: Option<usize>,
) -> PyResult<PySweep> {
    let fam: SweepFamily = family.parse().map_err(py_err)?;
    let mut spec = SweepSpec::defaults(fam);
    spec.seed = seed;
    if let Some(n) = n {
        spec.n_list = n;
    }
    spec.eps = eps.unwrap_or(spec.eps);
    spec.delta = delta.unwrap_or(spec.delta);
    spec.trials = trials.unwrap_or(spec.trials);
    spec.validate().map_err(py_err)?;
    let res = py.detach(|| run_sweep(&spec)).map_err(py_err)?;
    Ok(PySweep { inner: res })
}

#[pymodule]
fn overlapix_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyBudgetPlan>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PySweep>()?;
    m.add_function(wrap_pyfunction!(budget, m)?)?;
    m.add_function(wrap_pyfunction!(truncation, m)?)?;
    m.add_function(wrap_pyfunction!(witness, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
