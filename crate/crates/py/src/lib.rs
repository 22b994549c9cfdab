//! Python module `tlsq`.
//!
//! Tensors cross the boundary as `Tensor` objects; build them from a flat
//! list in `k*n*p + j*n + i` order or from nested `[k][i][j]` frontal slices.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tlsq_core::experiments::{self as exp, DesignKind, ExperimentConfig};
use tlsq_core::sampling::{compute_distribution, draw_plan};
use tlsq_core::{io, selfcheck, solver, stats, tsvd, DistributionKind, TlsError, TlsProblem, TubalTensor};

create_exception!(tlsq, TlsqError, PyException, "Numerical failure inside tlsq.");

fn to_py(e: TlsError) -> PyErr {
    match &e {
        _ if e.is_io() => PyOSError::new_err(e.to_string()),
        TlsError::DimensionMismatch { .. } | TlsError::InvalidTensor(_) | TlsError::Domain(_) | TlsError::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => TlsqError::new_err(e.to_string()),
    }
}

fn kind(method: &str, alpha: f64) -> PyResult<DistributionKind> {
    DistributionKind::parse(method, alpha).map_err(to_py)
}

/// Third-order real tensor of shape `(n, p, l)`.
#[pyclass(name = "Tensor", module = "tlsq", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTensor(TubalTensor);

#[pymethods]
impl PyTensor {
    #[new]
    fn new(n: usize, p: usize, l: usize, data: Vec<f64>) -> PyResult<Self> {
        TubalTensor::new(n, p, l, data).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn zeros(n: usize, p: usize, l: usize) -> Self {
        Self(TubalTensor::zeros(n, p, l))
    }

    /// Standard normal entries from a seeded generator.
    #[staticmethod]
    fn random(n: usize, p: usize, l: usize, seed: u64) -> Self {
        Self(TubalTensor::random(n, p, l, &mut ChaCha8Rng::seed_from_u64(seed)))
    }

    /// From `slices[k][i][j]`.
    #[staticmethod]
    fn from_slices(slices: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let l = slices.len();
        let n = slices.first().map_or(0, Vec::len);
        let p = slices.first().and_then(|s| s.first()).map_or(0, Vec::len);
        if n * p * l == 0 || slices.iter().any(|s| s.len() != n || s.iter().any(|r| r.len() != p)) {
            return Err(PyValueError::new_err("need l >= 1 nonempty frontal slices, all n x p"));
        }
        Ok(Self(TubalTensor::from_fn(n, p, l, |i, j, k| slices[k][i][j])))
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        io::read_tensor(path).map(Self).map_err(to_py)
    }

    fn write(&self, path: &str) -> PyResult<()> {
        io::write_tensor(path, &self.0).map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.0.n(), self.0.p(), self.0.l())
    }

    fn to_list(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    /// `[k][i][j]` nested lists.
    fn to_slices(&self) -> Vec<Vec<Vec<f64>>> {
        let x = &self.0;
        (0..x.l())
            .map(|k| (0..x.n()).map(|i| (0..x.p()).map(|j| x.get(i, j, k)).collect()).collect())
            .collect()
    }

    fn __getitem__(&self, idx: (usize, usize, usize)) -> PyResult<f64> {
        let (i, j, k) = idx;
        if i >= self.0.n() || j >= self.0.p() || k >= self.0.l() {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!("index {idx:?} out of range")));
        }
        Ok(self.0.get(i, j, k))
    }

    fn transpose(&self) -> Self {
        Self(self.0.t_transpose())
    }

    fn fro_norm(&self) -> f64 {
        self.0.fro_norm()
    }

    fn __matmul__(&self, other: &PyTensor) -> PyResult<Self> {
        t_product(self, other)
    }

    fn __add__(&self, other: &PyTensor) -> PyResult<Self> {
        self.0.add(&other.0).map(Self).map_err(to_py)
    }

    fn __sub__(&self, other: &PyTensor) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(to_py)
    }

    fn __eq__(&self, other: &PyTensor) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Tensor({}x{}x{})", self.0.n(), self.0.p(), self.0.l())
    }
}

#[pyfunction]
fn t_product(x: &PyTensor, y: &PyTensor) -> PyResult<PyTensor> {
    tlsq_core::t_product(&x.0, &y.0).map(PyTensor).map_err(to_py)
}

#[pyfunction]
fn t_pinv(x: &PyTensor) -> PyResult<PyTensor> {
    tsvd::t_pinv(&x.0).map(PyTensor).map_err(to_py)
}

/// `(U, S, V, rank)` with `X = U * S * V^T`.
#[pyfunction]
fn thin_t_svd(x: &PyTensor) -> PyResult<(PyTensor, PyTensor, PyTensor, usize)> {
    let f = tsvd::thin_t_svd(&x.0).map_err(to_py)?;
    Ok((PyTensor(f.u), PyTensor(f.s), PyTensor(f.v), f.rank))
}

#[pyfunction]
#[pyo3(signature = (x, tol=None))]
fn tubal_rank(x: &PyTensor, tol: Option<f64>) -> PyResult<usize> {
    tsvd::tubal_rank(&x.0, tol).map_err(to_py)
}

/// Row sampling probabilities for `method` in `unif`, `lev`, `slev`, `opt`.
#[pyfunction]
#[pyo3(signature = (x, method, alpha=0.9))]
fn sampling_probs(x: &PyTensor, method: &str, alpha: f64) -> PyResult<Vec<f64>> {
    Ok(compute_distribution(kind(method, alpha)?, &x.0).map_err(to_py)?.probs)
}

#[pyfunction]
fn leverage_scores(x: &PyTensor) -> PyResult<Vec<f64>> {
    tlsq_core::sampling::leverage_scores(&x.0).map_err(to_py)
}

/// `(B, f(B))` of the exact least-squares fit.
#[pyfunction]
fn solve_ols(py: Python<'_>, x: &PyTensor, y: &PyTensor) -> PyResult<(PyTensor, f64)> {
    py.detach(|| {
        let prob = TlsProblem::new(x.0.clone(), y.0.clone())?;
        solver::solve_ols(&prob)
    })
    .map(|s| (PyTensor(s.coef), s.objective))
    .map_err(to_py)
}

/// `(B, f(B))` from `tau` rows drawn i.i.d. from `method`'s distribution.
#[pyfunction]
#[pyo3(signature = (x, y, method, tau, seed, alpha=0.9))]
fn solve_subsampled(
    py: Python<'_>,
    x: &PyTensor,
    y: &PyTensor,
    method: &str,
    tau: usize,
    seed: u64,
    alpha: f64,
) -> PyResult<(PyTensor, f64)> {
    let kind = kind(method, alpha)?;
    py.detach(|| {
        let prob = TlsProblem::new(x.0.clone(), y.0.clone())?;
        let dist = compute_distribution(kind, prob.x())?;
        solver::solve_subsampled(&prob, &draw_plan(&dist, tau, seed)?)
    })
    .map(|s| (PyTensor(s.coef), s.objective))
    .map_err(to_py)
}

/// First-order variances of the subsampled estimator as a dict with
/// `conditional`, `trace_conditional` and, given `sigma2`, `unconditional`,
/// `trace_unconditional`. `sigma2` is the variance of each noise entry.
#[pyfunction]
#[pyo3(signature = (x, y, method, tau, alpha=0.9, sigma2=None))]
fn variance<'py>(
    py: Python<'py>,
    x: &PyTensor,
    y: &PyTensor,
    method: &str,
    tau: usize,
    alpha: f64,
    sigma2: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = kind(method, alpha)?;
    let r = py
        .detach(|| {
            let prob = TlsProblem::new(x.0.clone(), y.0.clone())?;
            let dist = compute_distribution(kind, prob.x())?;
            stats::variance_report(&prob, &dist, tau, sigma2)
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("conditional", PyTensor(r.conditional_fo))?;
    d.set_item("trace_conditional", r.trace_conditional)?;
    if let (Some(v), Some(t)) = (r.unconditional_fo, r.trace_unconditional) {
        d.set_item("unconditional", PyTensor(v))?;
        d.set_item("trace_unconditional", t)?;
    }
    Ok(d)
}

/// Synthetic design with i.i.d. rows from `mn`, `t3` or `t1`.
#[pyfunction]
fn gen_design(kind: &str, n: usize, p: usize, l: usize, seed: u64) -> PyResult<PyTensor> {
    exp::gen_design(DesignKind::parse(kind).map_err(to_py)?, n, p, l, seed)
        .map(PyTensor)
        .map_err(to_py)
}

/// `(Y, B0)` with `Y = X * B0 + N(0, sigma2)` noise.
#[pyfunction]
fn gen_response(x: &PyTensor, sigma2: f64, seed: u64) -> PyResult<(PyTensor, PyTensor)> {
    exp::gen_response(&x.0, sigma2, seed)
        .map(|(y, b0)| (PyTensor(y), PyTensor(b0)))
        .map_err(to_py)
}

/// Runs the `key = value` config text and returns the metrics CSV.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<String> {
    py.detach(|| exp::run_experiment(&ExperimentConfig::parse(config)?))
        .map(|r| r.to_csv())
        .map_err(to_py)
}

#[pyfunction]
fn compare_mls(py: Python<'_>, config: &str) -> PyResult<String> {
    py.detach(|| exp::compare_mls(&ExperimentConfig::parse(config)?))
        .map(|r| r.to_csv())
        .map_err(to_py)
}

/// `(suite, passed, total, worst, tol)`.
type SuiteRow = (String, usize, usize, f64, f64);

/// One row per suite of the oracle suite.
#[pyfunction]
#[pyo3(signature = (seed=20240917))]
fn run_selfcheck(py: Python<'_>, seed: u64) -> PyResult<Vec<SuiteRow>> {
    let suites = py.detach(|| selfcheck::run_selfcheck(seed)).map_err(to_py)?;
    Ok(suites
        .into_iter()
        .map(|s| (s.name.to_string(), s.passed, s.total, s.worst, s.tol))
        .collect())
}

#[pymodule]
fn tlsq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TlsqError", m.py().get_type::<TlsqError>())?;
    m.add_class::<PyTensor>()?;
    m.add_function(wrap_pyfunction!(t_product, m)?)?;
    m.add_function(wrap_pyfunction!(t_pinv, m)?)?;
    m.add_function(wrap_pyfunction!(thin_t_svd, m)?)?;
    m.add_function(wrap_pyfunction!(tubal_rank, m)?)?;
    m.add_function(wrap_pyfunction!(sampling_probs, m)?)?;
    m.add_function(wrap_pyfunction!(leverage_scores, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ols, m)?)?;
    m.add_function(wrap_pyfunction!(solve_subsampled, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(gen_design, m)?)?;
    m.add_function(wrap_pyfunction!(gen_response, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(compare_mls, m)?)?;
    m.add_function(wrap_pyfunction!(run_selfcheck, m)?)?;
    Ok(())
}
