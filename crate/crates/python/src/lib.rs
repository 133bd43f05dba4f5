//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lifelong_mc::datagen::{self, NoisePositions, NoiseSpec};
use lifelong_mc::exact::{self, ExactConfig, ExactState, ExactTruth};
use lifelong_mc::linalg;
use lifelong_mc::report::RunReport;
use lifelong_mc::tracker::{self, Decision, Normalization, TrackerConfig, TrackerState};
use lifelong_mc::DenseMatrix;

create_exception!(lifelong_mc_py, LifelongMcError, PyException);

fn py_err(e: impl std::fmt::Display) -> PyErr {
    LifelongMcError::new_err(e.to_string())
}

fn to_dense(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(&rows).map_err(py_err)
}

fn to_rows(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

fn decision_name(d: Decision) -> &'static str {
    match d {
        Decision::Absorbed => "absorbed",
        Decision::Represented => "represented",
    }
}

fn report_dict<'py>(py: Python<'py>, r: &RunReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("per_column_error", r.per_column_error.clone())?;
    d.set_item("frob_error", r.frob_error)?;
    d.set_item("frob_rel_error", r.frob_rel_error)?;
    d.set_item("recovered_rank", r.recovered_rank)?;
    d.set_item("basis_size", r.basis_size)?;
    d.set_item("columns_processed", r.columns_processed)?;
    d.set_item("support_exact", r.support_exact)?;
    d.set_item("entries_sampled", r.entries_sampled)?;
    d.set_item("wall_time", r.wall_time)?;
    Ok(d)
}

/// A generated problem instance.
#[pyclass(name = "Instance", frozen)]
struct PyInstance {
    inner: datagen::Instance,
}

#[pymethods]
impl PyInstance {
    #[getter]
    fn clean(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.clean)
    }

    #[getter]
    fn observed(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.observed)
    }

    #[getter]
    fn basis(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.basis)
    }

    #[getter]
    fn noise_support(&self) -> Vec<usize> {
        self.inner.noise_support.clone()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank
    }

    #[getter]
    fn membership(&self) -> Option<Vec<usize>> {
        self.inner.membership.clone()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.m(), self.inner.n())
    }

    #[getter]
    fn generator(&self) -> String {
        self.inner.meta.generator.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.meta.seed
    }

    /// Copy with `s0` columns replaced by random unit vectors.
    #[pyo3(signature = (s0, seed, positions=None))]
    fn with_sparse_noise(&self, s0: usize, seed: u64, positions: Option<Vec<usize>>) -> PyResult<Self> {
        let positions = positions.map_or(NoisePositions::Random, NoisePositions::Explicit);
        let spec = NoiseSpec::SparseColumns { s0, positions };
        let inner = datagen::apply_noise(&self.inner, &spec, seed).map_err(py_err)?;
        Ok(PyInstance { inner })
    }

    /// Copy with every column moved by exactly `eps`.
    fn with_bounded_noise(&self, eps: f64, seed: u64) -> PyResult<Self> {
        let inner = datagen::apply_noise(&self.inner, &NoiseSpec::Bounded { eps }, seed).map_err(py_err)?;
        Ok(PyInstance { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(generator={:?}, shape=({}, {}), rank={}, noisy_columns={})",
            self.inner.meta.generator,
            self.inner.m(),
            self.inner.n(),
            self.inner.rank,
            self.inner.noise_support.len()
        )
    }
}

#[pyfunction]
fn gaussian_lowrank(m: usize, n: usize, r: usize, seed: u64) -> PyResult<PyInstance> {
    let inner = datagen::gen_gaussian_lowrank(m, n, r, seed).map_err(py_err)?;
    Ok(PyInstance { inner })
}

#[pyfunction]
fn cumulative(m: usize, seed: u64) -> PyResult<PyInstance> {
    let inner = datagen::gen_cumulative(m, seed).map_err(py_err)?;
    Ok(PyInstance { inner })
}

#[pyfunction]
fn mixture(m: usize, per_subspace: usize, h: usize, tau: usize, seed: u64) -> PyResult<PyInstance> {
    let inner = datagen::gen_mixture(m, per_subspace, h, tau, seed).map_err(py_err)?;
    Ok(PyInstance { inner })
}

#[pyfunction]
fn lower_bound(m: usize, mu0: f64, r: usize, b_values: Vec<f64>, seed: u64) -> PyResult<PyInstance> {
    let inner = datagen::gen_lower_bound(m, mu0, r, &b_values, seed).map_err(py_err)?;
    Ok(PyInstance { inner })
}

#[pyfunction]
fn orthonormalize(a: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&linalg::orthonormalize(&to_dense(a)?)))
}

#[pyfunction]
fn singular_values(a: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(linalg::singular_values(&to_dense(a)?))
}

#[pyfunction]
#[pyo3(signature = (a, tol=linalg::RANK_TOL))]
fn numerical_rank(a: Vec<Vec<f64>>, tol: f64) -> PyResult<usize> {
    Ok(linalg::numerical_rank(&to_dense(a)?, tol))
}

#[pyfunction]
fn principal_angle(u: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> PyResult<f64> {
    linalg::principal_angle(&to_dense(u)?, &to_dense(v)?).map_err(py_err)
}

#[pyfunction]
fn incoherence(u: Vec<Vec<f64>>) -> PyResult<f64> {
    linalg::incoherence(&to_dense(u)?).map_err(py_err)
}

fn normalization(lenient: bool) -> Normalization {
    if lenient {
        Normalization::Lenient
    } else {
        Normalization::Strict
    }
}

/// Column-at-a-time tracker for bounded noise.
#[pyclass(name = "Tracker")]
struct PyTracker {
    state: TrackerState,
}

#[pymethods]
impl PyTracker {
    #[new]
    #[pyo3(signature = (m, d, eps_noise, seed, eta_constant=1.0, with_replacement=true))]
    fn new(m: usize, d: usize, eps_noise: f64, seed: u64, eta_constant: f64, with_replacement: bool) -> PyResult<Self> {
        let cfg = TrackerConfig {
            eta_constant,
            with_replacement,
            ..TrackerConfig::new(d, eps_noise, seed)
        };
        let state = TrackerState::new(m, cfg).map_err(py_err)?;
        Ok(PyTracker { state })
    }

    /// Feeds one column; returns `(decision, estimate, residual, threshold)`.
    fn process(&mut self, column: Vec<f64>) -> PyResult<(&'static str, Vec<f64>, f64, f64)> {
        if column.len() != self.state.omega().bound() {
            return Err(py_err(format!(
                "column has {} entries, expected {}",
                column.len(),
                self.state.omega().bound()
            )));
        }
        let c = self.state.process_column(&mut |i| column[i]).map_err(py_err)?;
        Ok((decision_name(c.decision), c.estimate, c.residual, c.threshold))
    }

    #[getter]
    fn k(&self) -> usize {
        self.state.k()
    }

    #[getter]
    fn basis(&self) -> Vec<Vec<f64>> {
        to_rows(&self.state.basis())
    }

    #[getter]
    fn entries_requested(&self) -> u64 {
        self.state.entries_requested()
    }
}

/// Column-at-a-time exact recovery, optionally with sparse representations.
#[pyclass(name = "ExactStream")]
struct PyExactStream {
    state: ExactState,
    m: usize,
}

#[pymethods]
impl PyExactStream {
    #[new]
    #[pyo3(signature = (m, d, seed, tau=None, zero_tol=exact::DEFAULT_ZERO_TOL))]
    fn new(m: usize, d: usize, seed: u64, tau: Option<usize>, zero_tol: f64) -> PyResult<Self> {
        let cfg = ExactConfig {
            tau,
            zero_tol,
            ..ExactConfig::new(d, seed)
        };
        let state = ExactState::new(m, cfg).map_err(py_err)?;
        Ok(PyExactStream { state, m })
    }

    /// Feeds one column; returns `(decision, estimate, support)`.
    fn process(&mut self, column: Vec<f64>) -> PyResult<(&'static str, Vec<f64>, Vec<usize>)> {
        if column.len() != self.m {
            return Err(py_err(format!("column has {} entries, expected {}", column.len(), self.m)));
        }
        let s = self.state.process_column(&mut |i| column[i]).map_err(py_err)?;
        Ok((decision_name(s.decision), s.estimate, s.support))
    }

    #[getter]
    fn dictionary_size(&self) -> usize {
        self.state.dictionary().len()
    }

    #[getter]
    fn counter(&self) -> Vec<u64> {
        self.state.dictionary().counter().to_vec()
    }

    #[getter]
    fn entries_requested(&self) -> u64 {
        self.state.entries_requested()
    }
}

/// Runs the tracker over every column of `observed`.
#[pyfunction]
#[pyo3(signature = (observed, d, eps_noise, seed, eta_constant=1.0, truth=None, lenient=false))]
#[allow(clippy::too_many_arguments)]
fn run_tracker<'py>(
    py: Python<'py>,
    observed: Vec<Vec<f64>>,
    d: usize,
    eps_noise: f64,
    seed: u64,
    eta_constant: f64,
    truth: Option<Vec<Vec<f64>>>,
    lenient: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let m = to_dense(observed)?;
    let l = truth.map(to_dense).transpose()?;
    let cfg = TrackerConfig {
        eta_constant,
        normalization: normalization(lenient),
        ..TrackerConfig::new(d, eps_noise, seed)
    };
    let run = tracker::run_stream(&m, &cfg, l.as_ref()).map_err(py_err)?;
    let out = report_dict(py, &run.report)?;
    out.set_item("recovered", to_rows(&run.recovered))?;
    out.set_item("basis", to_rows(&run.basis))?;
    let decisions: Vec<&str> = run.log.iter().map(|c| decision_name(c.decision)).collect();
    out.set_item("decisions", decisions)?;
    Ok(out)
}

/// Runs exact recovery over every column of `observed`. With `tau` set
/// the sparse-representation variant is used.
#[pyfunction]
#[pyo3(signature = (observed, d, seed, tau=None, truth=None, noise_support=None))]
fn run_exact<'py>(
    py: Python<'py>,
    observed: Vec<Vec<f64>>,
    d: usize,
    seed: u64,
    tau: Option<usize>,
    truth: Option<Vec<Vec<f64>>>,
    noise_support: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = to_dense(observed)?;
    let l = truth.map(to_dense).transpose()?;
    let support = noise_support.unwrap_or_default();
    let cfg = ExactConfig {
        tau,
        ..ExactConfig::new(d, seed)
    };
    let t = l.as_ref().map(|clean| ExactTruth {
        clean,
        noise_support: &support,
    });
    let run = exact::run_exact(&m, &cfg, t).map_err(py_err)?;
    let out = report_dict(py, &run.report)?;
    out.set_item("recovered", to_rows(&run.result.recovered))?;
    out.set_item("basis_indices", run.result.basis_indices.clone())?;
    out.set_item("outlier_indices", run.result.outlier_indices.clone())?;
    out.set_item("counter", run.counter.clone())?;
    let decisions: Vec<&str> = run.decisions.iter().map(|&d| decision_name(d)).collect();
    out.set_item("decisions", decisions)?;
    Ok(out)
}

#[pymodule]
fn lifelong_mc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LifelongMcError", m.py().get_type::<LifelongMcError>())?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyTracker>()?;
    m.add_class::<PyExactStream>()?;
    m.add_function(wrap_pyfunction!(gaussian_lowrank, m)?)?;
    m.add_function(wrap_pyfunction!(cumulative, m)?)?;
    m.add_function(wrap_pyfunction!(mixture, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(orthonormalize, m)?)?;
    m.add_function(wrap_pyfunction!(singular_values, m)?)?;
    m.add_function(wrap_pyfunction!(numerical_rank, m)?)?;
    m.add_function(wrap_pyfunction!(principal_angle, m)?)?;
    m.add_function(wrap_pyfunction!(incoherence, m)?)?;
    m.add_function(wrap_pyfunction!(run_tracker, m)?)?;
    m.add_function(wrap_pyfunction!(run_exact, m)?)?;
    Ok(())
}
