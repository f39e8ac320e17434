use nt_desk::cli::{self, FiberMetric, KGroup};
use nt_desk::determinant::{det_hat, numeric_det_at};
use nt_desk::nt::NTMorphism;
use nt_desk::report::ScenarioReport;
use nt_desk::scenarios::{self, WindingConvention};
use nt_desk::{d_cu as core_d_cu, EigenPattern, Error, Rational, UnitaryField};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Argument(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn fraction(py: Python<'_>, r: &Rational) -> PyResult<PyObject> {
    let cls = py.import_bound("fractions")?.getattr("Fraction")?;
    Ok(cls.call1((r.to_string(),))?.unbind())
}

fn rational(s: &str) -> PyResult<Rational> {
    s.parse::<Rational>().map_err(err)
}

fn to_dict<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import_bound("json")?.call_method1("loads", (s,))?.unbind())
}

fn report(py: Python<'_>, r: ScenarioReport) -> PyResult<PyObject> {
    let d = to_dict(py, &r)?;
    d.bind(py).downcast::<PyDict>()?.set_item("passed", r.passed())?;
    Ok(d)
}

/// An eigenvalue pattern, built from its JSON form.
#[pyclass(name = "Pattern", module = "nt_desk_py")]
#[derive(Clone)]
struct PyPattern(EigenPattern);

#[pymethods]
impl PyPattern {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyPattern).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Eigenvalue positions at `y` (a rational string), with multiplicities.
    fn positions_at(&self, py: Python<'_>, y: &str) -> PyResult<Vec<(PyObject, u64)>> {
        self.0.positions_at(&rational(y)?).iter().map(|(x, m)| Ok((fraction(py, x)?, *m))).collect()
    }

    #[getter]
    fn total_mult(&self) -> u64 {
        self.0.total_mult()
    }

    #[getter]
    fn k1_degree(&self) -> i64 {
        self.0.k1_degree()
    }

    fn __repr__(&self) -> String {
        format!("Pattern({:?} -> {:?}, {} eigenvalues)", self.0.domain(), self.0.codomain(), self.0.total_mult())
    }
}

/// A diagonal unitary field.
#[pyclass(name = "Unitary", module = "nt_desk_py")]
#[derive(Clone)]
struct PyUnitary(UnitaryField);

#[pymethods]
impl PyUnitary {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyUnitary).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn size(&self) -> u64 {
        self.0.size()
    }

    #[getter]
    fn k1_class(&self) -> i64 {
        self.0.k1_class()
    }

    /// Normalised determinant at `y`, exact.
    fn det_at(&self, py: Python<'_>, y: &str) -> PyResult<PyObject> {
        let v = det_hat(&self.0).eval(&rational(y)?).map_err(err)?;
        fraction(py, &v)
    }

    /// Same value by numerical path integration.
    #[pyo3(signature = (y, steps = 10_000))]
    fn numeric_det_at(&self, y: &str, steps: usize) -> PyResult<f64> {
        numeric_det_at(&self.0, &rational(y)?, steps).map_err(err)
    }

    fn pattern(&self) -> PyResult<PyPattern> {
        EigenPattern::from_unitary(&self.0).map(PyPattern).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Unitary({:?}, size {})", self.0.space(), self.0.size())
    }
}

/// A morphism with its target block; accepts the same JSON shapes as the CLI.
#[pyclass(name = "Morphism", module = "nt_desk_py")]
#[derive(Clone)]
struct PyMorphism(NTMorphism);

#[pymethods]
impl PyMorphism {
    /// `k0` is `all`, `zero` or `lattice:P/Q`.
    #[staticmethod]
    #[pyo3(signature = (s, k0 = None))]
    fn from_json(s: &str, k0: Option<&str>) -> PyResult<Self> {
        let k0 = k0.map(cli::parse_k0).transpose().map_err(err)?;
        cli::morphism_from_str(s, k0.as_ref()).map(PyMorphism).map_err(err)
    }

    #[getter]
    fn pattern(&self) -> PyPattern {
        PyPattern(self.0.pattern.clone())
    }
}

#[pyfunction]
fn d_cu(py: Python<'_>, a: &PyPattern, b: &PyPattern) -> PyResult<PyObject> {
    let r = core_d_cu(&a.0, &b.0).map_err(err)?;
    to_dict(py, &r)
}

#[pyfunction]
fn metric_dcu(py: Python<'_>, a: &PyMorphism, b: &PyMorphism) -> PyResult<PyObject> {
    report(py, cli::metric_dcu(&a.0, &b.0).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (a, b = None))]
fn metric_frakd(py: Python<'_>, a: &PyMorphism, b: Option<&PyMorphism>) -> PyResult<PyObject> {
    report(py, cli::metric_frakd(&a.0, b.map(|b| &b.0), None, None).map_err(err)?)
}

/// `group` is `k1` or `kbar1`; `fiber` is `triv` or `frakd`.
#[pyfunction]
#[pyo3(signature = (a, b, group = "k1", fiber = "triv"))]
fn metric_dstar(py: Python<'_>, a: &PyMorphism, b: &PyMorphism, group: &str, fiber: &str) -> PyResult<PyObject> {
    let k = match group {
        "k1" => KGroup::K1,
        "kbar1" => KGroup::Kbar1,
        _ => return Err(PyValueError::new_err(format!("unknown group {group}"))),
    };
    let fm = match fiber {
        "triv" => FiberMetric::Triv,
        "frakd" => FiberMetric::Frakd,
        _ => return Err(PyValueError::new_err(format!("unknown fiber metric {fiber}"))),
    };
    report(py, cli::metric_dstar(&a.0, &b.0, k, fm).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (k, l, stage = 10))]
fn robert(py: Python<'_>, k: i64, l: i64, stage: u32) -> PyResult<PyObject> {
    report(py, scenarios::robert_report(k, l, stage).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n_max = 4, k_sequence = vec![2, 3, 4, 5], same_stage = false))]
fn gjl(py: Python<'_>, n_max: u32, k_sequence: Vec<u32>, same_stage: bool) -> PyResult<PyObject> {
    let conv = if same_stage { WindingConvention::SameStage } else { WindingConvention::NextStage };
    report(py, scenarios::gjl_report(n_max, &k_sequence, conv).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (stage = 10))]
fn novel(py: Python<'_>, stage: u32) -> PyResult<PyObject> {
    report(py, scenarios::novel_report(stage).map_err(err)?)
}

#[pymodule]
fn nt_desk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPattern>()?;
    m.add_class::<PyUnitary>()?;
    m.add_class::<PyMorphism>()?;
    m.add_function(wrap_pyfunction!(d_cu, m)?)?;
    m.add_function(wrap_pyfunction!(metric_dcu, m)?)?;
    m.add_function(wrap_pyfunction!(metric_frakd, m)?)?;
    m.add_function(wrap_pyfunction!(metric_dstar, m)?)?;
    m.add_function(wrap_pyfunction!(robert, m)?)?;
    m.add_function(wrap_pyfunction!(gjl, m)?)?;
    m.add_function(wrap_pyfunction!(novel, m)?)?;
    Ok(())
}
