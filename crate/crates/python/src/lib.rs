//! Python bindings for the `mfhawkes` core crate.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mfhawkes::asymptotics::{self, Design, Regime};
use mfhawkes::mc::{self, ExperimentConfig, Mode};
use mfhawkes::{oracle, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Kernel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel(mfhawkes::Kernel);

#[pymethods]
impl PyKernel {
    /// φ(t) = amplitude · exp(−rate · t)
    #[staticmethod]
    fn exponential(rate: f64, amplitude: f64) -> PyResult<Self> {
        mfhawkes::Kernel::exponential(rate, amplitude).map(PyKernel).map_err(to_py)
    }

    /// φ(t) = height · 1[0, width](t)
    #[staticmethod]
    fn indicator(width: f64, height: f64) -> PyResult<Self> {
        mfhawkes::Kernel::indicator(width, height).map(PyKernel).map_err(to_py)
    }

    #[staticmethod]
    fn zero() -> Self {
        PyKernel(mfhawkes::Kernel::Zero)
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn __call__(&self, t: f64) -> f64 {
        self.0.value(t)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(name = "ModelParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModelParams(mfhawkes::ModelParams);

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (mu, p, kernel, q=7))]
    fn new(mu: f64, p: f64, kernel: &PyKernel, q: u32) -> PyResult<Self> {
        let params = mfhawkes::ModelParams::new(mu, p, kernel.0).map_err(to_py)?.with_q(q);
        params.validate().map_err(to_py)?;
        Ok(PyModelParams(params))
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda()
    }

    /// (u*, v*, w*) limits of the three statistics.
    fn limit_triple(&self) -> PyResult<(f64, f64, f64)> {
        let l = oracle::limit_triple(&self.0).map_err(to_py)?;
        Ok((l.u, l.v, l.w))
    }

    fn ell_bar_limit(&self) -> PyResult<f64> {
        oracle::ell_bar_limit(&self.0).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(name = "Adjacency", frozen)]
struct PyAdjacency(mfhawkes::Adjacency);

#[pymethods]
impl PyAdjacency {
    #[staticmethod]
    fn sample(n: usize, p: f64, seed: u64) -> PyResult<Self> {
        mfhawkes::Adjacency::sample(n, p, seed).map(PyAdjacency).map_err(to_py)
    }

    #[staticmethod]
    fn from_rows(rows: Vec<Vec<bool>>) -> PyResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("adjacency must be square"));
        }
        Ok(PyAdjacency(mfhawkes::Adjacency::from_fn(n, |i, j| rows[i][j])))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<bool> {
        if i >= self.0.n() || j >= self.0.n() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.get(i, j))
    }

    fn row_sums(&self) -> Vec<u32> {
        self.0.row_sums().to_vec()
    }

    /// ℓ_N, c_N^K and the derived scalars as a dict.
    fn analyze<'py>(&self, py: Python<'py>, lambda_: f64, mu: f64, k: usize) -> PyResult<Bound<'py, PyDict>> {
        let a = py.detach(|| oracle::analyze_graph(&self.0, lambda_, mu, k)).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("ell", a.ell)?;
        d.set_item("ell_bar_k", a.ell_bar_k)?;
        d.set_item("c_k", a.c_k)?;
        d.set_item("v_inf", a.v_inf)?;
        d.set_item("a_inf", a.a_inf)?;
        d.set_item("w_inf", a.w_inf)?;
        d.set_item("x_inf", a.x_inf)?;
        d.set_item("residual", a.residual)?;
        Ok(d)
    }
}

#[pyclass(name = "EventLog", frozen)]
struct PyEventLog(mfhawkes::EventLog);

#[pymethods]
impl PyEventLog {
    #[new]
    #[pyo3(signature = (horizon, events, seed=0))]
    fn new(horizon: f64, events: Vec<Vec<f64>>, seed: u64) -> PyResult<Self> {
        mfhawkes::EventLog::new(horizon, events, seed).map(PyEventLog).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    fn events(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.0.n() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.events(i).to_vec())
    }

    fn total_count(&self) -> usize {
        self.0.total_count()
    }

    fn count_at(&self, i: usize, t: f64) -> usize {
        self.0.count_at(i, t)
    }
}

#[pyfunction]
fn simulate(py: Python<'_>, adj: &PyAdjacency, params: &PyModelParams, horizon: f64, seed: u64) -> PyResult<PyEventLog> {
    py.detach(|| mfhawkes::simulate(&adj.0, &params.0, horizon, seed)).map(PyEventLog).map_err(to_py)
}

/// Plug-in estimates from the first K processes observed on [0, 2t].
#[pyfunction]
#[pyo3(signature = (log, n, k, t, q=7))]
fn estimate<'py>(py: Python<'py>, log: &PyEventLog, n: usize, k: usize, t: f64, q: u32) -> PyResult<Bound<'py, PyDict>> {
    let input = mfhawkes::EstimatorInput::new(&log.0, n, k, t, q).map_err(to_py)?;
    let e = mfhawkes::estimate(&input).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mu_hat", e.plug_in.mu_hat)?;
    d.set_item("lambda_hat", e.plug_in.lambda_hat)?;
    d.set_item("p_hat", e.plug_in.p_hat)?;
    d.set_item("epsilon", e.raw.epsilon)?;
    d.set_item("v", e.raw.v)?;
    d.set_item("x", e.raw.x)?;
    d.set_item("delta_t", e.raw.delta_t)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (n, k, t, q=7, threshold=asymptotics::DEFAULT_SEPARATION))]
fn rate_terms<'py>(py: Python<'py>, n: usize, k: usize, t: f64, q: u32, threshold: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = asymptotics::rate_terms(n, k, t, q, threshold).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("r1", r.r1)?;
    d.set_item("r2", r.r2)?;
    d.set_item("r3", r.r3)?;
    d.set_item("delta_t", r.delta_t)?;
    d.set_item("separation", r.separation)?;
    d.set_item("dominant", r.dominant.to_string())?;
    Ok(d)
}

/// Half-width of the asymptotic level 1 − alpha interval for p.
#[pyfunction]
#[pyo3(signature = (mu_hat, lambda_hat, p_hat, n, k, t, q=7, alpha=0.05))]
#[allow(clippy::too_many_arguments)]
fn confidence_interval(mu_hat: f64, lambda_hat: f64, p_hat: f64, n: usize, k: usize, t: f64, q: u32, alpha: f64) -> PyResult<f64> {
    let design = Design::new(n, k, t, q).map_err(to_py)?;
    let est = mfhawkes::PlugIn { mu_hat, lambda_hat, p_hat };
    asymptotics::confidence_interval(&est, &design, alpha).map_err(to_py)
}

/// Monte Carlo run; returns the flat summary dict.
#[pyfunction]
#[pyo3(signature = (params, n, k, t, replicates, mode="full", master_seed=0, q=None, forced_regime=None, workers=None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    params: &PyModelParams,
    n: usize,
    k: usize,
    t: f64,
    replicates: usize,
    mode: &str,
    master_seed: u64,
    q: Option<u32>,
    forced_regime: Option<&str>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mode: Mode = mode.parse().map_err(to_py)?;
    let mut config = ExperimentConfig::new(params.0, n, k, t, replicates, mode);
    config.master_seed = master_seed;
    config.workers = workers;
    if let Some(q) = q {
        config.q = q;
    }
    if let Some(r) = forced_regime {
        config.forced_regime = Some(r.parse::<Regime>().map_err(to_py)?);
    }
    let report = py.detach(|| mc::run_experiment(&config)).map_err(to_py)?;
    let d = PyDict::new(py);
    for (key, v) in report.summary_map() {
        d.set_item(key, v)?;
    }
    d.set_item("z", report.z_values())?;
    d.set_item("warnings", report.warnings.clone())?;
    Ok(d)
}

#[pymodule]
fn mfhawkes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyAdjacency>()?;
    m.add_class::<PyEventLog>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(rate_terms, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_interval, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
