use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use qhm::algebra::{involution, lip_seminorm, star, sup_sum_norm, trace};
use qhm::config::RunConfig;
use qhm::element::random_element;
use qhm::metric::{distance_lower_bound, localized_state, state_eval, SolverOptions};
use qhm::report::VerifyReport;
use qhm::representation::cstar_norm_estimate;
use qhm::suites::{run_criterion, verify, Suite};
use qhm::{fold_evaluate, ModelParams, QhmError, Truncation};

fn py_err(e: QhmError) -> PyErr {
    match e {
        QhmError::Numerical { .. } => PyArithmeticError::new_err(e.to_string()),
        QhmError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn model(c: i64, hbar: f64, mu: f64, nu: f64) -> PyResult<ModelParams> {
    ModelParams::new(c, hbar, mu, nu).map_err(py_err)
}

/// Truncated element of the algebra.
#[pyclass(module = "qhm_py", frozen)]
struct Element(qhm::Element);

#[pymethods]
impl Element {
    #[staticmethod]
    #[pyo3(signature = (p_max, nx, ny, q_max, c=1, hbar=0.3, mu=0.7, nu=0.5))]
    #[allow(clippy::too_many_arguments)]
    fn identity(p_max: usize, nx: usize, ny: usize, q_max: usize, c: i64, hbar: f64, mu: f64, nu: f64) -> PyResult<Self> {
        let trunc = Truncation::new(p_max, nx, ny, q_max).map_err(py_err)?;
        Ok(Element(qhm::Element::identity(model(c, hbar, mu, nu)?, trunc)))
    }

    /// Random smooth element with coefficient decay `decay`.
    #[staticmethod]
    #[pyo3(signature = (seed, p_max, nx, ny, q_max, decay=1.0))]
    fn random(seed: u64, p_max: usize, nx: usize, ny: usize, q_max: usize, decay: f64) -> PyResult<Self> {
        let trunc = Truncation::new(p_max, nx, ny, q_max).map_err(py_err)?;
        random_element(seed, trunc, ModelParams::default(), decay).map(Element).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        qhm::Element::load(&path).map(Element).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(py_err)
    }

    /// Value of the `p`-th component at `(x, y)`, with `x` anywhere on the line.
    fn __call__(&self, x: f64, y: f64, p: i64) -> PyResult<Complex64> {
        fold_evaluate(&self.0, x, y, p).map_err(py_err)
    }

    fn __mul__(&self, other: &Element) -> PyResult<Element> {
        star(&self.0, &other.0).map(Element).map_err(py_err)
    }

    fn __add__(&self, other: &Element) -> PyResult<Element> {
        self.0.add(&other.0).map(Element).map_err(py_err)
    }

    fn __sub__(&self, other: &Element) -> PyResult<Element> {
        self.0.sub(&other.0).map(Element).map_err(py_err)
    }

    fn scale(&self, s: Complex64) -> Element {
        Element(self.0.scale(s))
    }

    fn adjoint(&self) -> Element {
        Element(involution(&self.0))
    }

    fn selfadjoint_part(&self) -> Element {
        Element(self.0.selfadjoint_part())
    }

    fn trace(&self) -> Complex64 {
        trace(&self.0)
    }

    fn sup_sum_norm(&self) -> f64 {
        sup_sum_norm(&self.0).sup_sum
    }

    fn cstar_norm(&self) -> PyResult<f64> {
        cstar_norm_estimate(&self.0).map(|r| r.value).map_err(py_err)
    }

    fn lip(&self) -> PyResult<f64> {
        lip_seminorm(&self.0).map_err(py_err)
    }

    #[getter]
    fn p_max(&self) -> usize {
        self.0.trunc().p_max
    }

    fn __repr__(&self) -> String {
        let t = self.0.trunc();
        format!("Element(P={}, Nx={}, Ny={}, Q={}, {:?})", t.p_max, t.nx, t.ny, t.q_max, self.0.flavor())
    }
}

/// State on the algebra: the trace or a vector state of the representation.
#[pyclass(module = "qhm_py", frozen)]
struct State(qhm::metric::State);

#[pymethods]
impl State {
    #[staticmethod]
    #[pyo3(signature = (p_max, nx, ny, q_max))]
    fn trace(p_max: usize, nx: usize, ny: usize, q_max: usize) -> PyResult<Self> {
        let trunc = Truncation::new(p_max, nx, ny, q_max).map_err(py_err)?;
        Ok(State(qhm::metric::State::trace(ModelParams::default(), trunc)))
    }

    /// Vector state concentrated near `(x0, y0)`.
    #[staticmethod]
    #[pyo3(signature = (x0, y0, width, p_max, nx, ny, q_max))]
    #[allow(clippy::too_many_arguments)]
    fn localized(x0: f64, y0: f64, width: f64, p_max: usize, nx: usize, ny: usize, q_max: usize) -> PyResult<Self> {
        let trunc = Truncation::new(p_max, nx, ny, q_max).map_err(py_err)?;
        localized_state(ModelParams::default(), trunc, x0, y0, width).map(State).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        qhm::metric::State::load(&path).map(State).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(py_err)
    }

    /// Real part of the state on `a`.
    fn __call__(&self, a: &Element) -> PyResult<f64> {
        state_eval(&self.0, &a.0).map_err(py_err)
    }
}

/// Lower bound on the distance between two states; returns `(bound, witness)`.
#[pyfunction]
#[pyo3(signature = (mu, nu, restarts=None, iterations=None, seed=None))]
fn distance(
    py: Python<'_>,
    mu: &State,
    nu: &State,
    restarts: Option<usize>,
    iterations: Option<usize>,
    seed: Option<u64>,
) -> PyResult<(f64, Element)> {
    let mut opts = SolverOptions::default();
    opts.restarts = restarts.unwrap_or(opts.restarts);
    opts.iterations = iterations.unwrap_or(opts.iterations);
    opts.seed = seed.unwrap_or(opts.seed);
    let r = py.detach(|| distance_lower_bound(&mu.0, &nu.0, &opts)).map_err(py_err)?;
    Ok((r.bound, Element(r.witness)))
}

/// Runs a suite, or the listed criteria, and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (suite="all", criteria=None, config=None))]
fn run_verify(py: Python<'_>, suite: &str, criteria: Option<Vec<u32>>, config: Option<PathBuf>) -> PyResult<String> {
    let cfg = match config {
        Some(p) => RunConfig::load(&p).map_err(py_err)?,
        None => RunConfig::default(),
    };
    let suite = Suite::parse(suite).map_err(py_err)?;
    let report = py
        .detach(|| match criteria {
            None => verify(&cfg, suite),
            Some(ids) => {
                cfg.validate()?;
                let (mut props, mut times) = (Vec::new(), Vec::new());
                for id in ids {
                    let (p, t) = run_criterion(&cfg, id)?;
                    props.extend(p);
                    times.push(t);
                }
                Ok(VerifyReport::new(suite.name(), cfg.base_seed(), props, times))
            }
        })
        .map_err(py_err)?;
    report.without_timings().to_json().map_err(py_err)
}

#[pymodule]
fn qhm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Element>()?;
    m.add_class::<State>()?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
