//! Python bindings for `marktest`.

use marktest::harness::replicate_pattern;
use marktest::{
    DeviationKind, EdgeCorrection, Error, MarkTestFunction, MarkedPattern, ModelSpec, RGrid,
    ScalingKind, Simulator, T0Mode, TestConfig, ToyCase, Transformation,
};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "Window", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyWindow(marktest::Window);

#[pymethods]
impl PyWindow {
    #[new]
    fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> PyResult<Self> {
        marktest::Window::new(x_min, x_max, y_min, y_max).map(PyWindow).map_err(to_py)
    }

    #[getter]
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let w = &self.0;
        (w.x_min, w.x_max, w.y_min, w.y_max)
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.area()
    }

    fn __repr__(&self) -> String {
        let (a, b, c, d) = self.bounds();
        format!("Window({a}, {b}, {c}, {d})")
    }
}

#[pyclass(name = "Pattern", frozen)]
struct PyPattern(MarkedPattern);

#[pymethods]
impl PyPattern {
    #[new]
    fn new(points: Vec<(f64, f64)>, marks: Vec<f64>, window: PyWindow) -> PyResult<Self> {
        let points = points.into_iter().map(|(x, y)| [x, y]).collect();
        MarkedPattern::new(points, marks, window.0).map(PyPattern).map_err(to_py)
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn marks(&self) -> Vec<f64> {
        self.0.marks().to_vec()
    }

    #[getter]
    fn window(&self) -> PyWindow {
        PyWindow(*self.0.window())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Mark-weighted K-function on `r_min, r_min + step, …, r_max`; returns `(r, values)`.
#[pyfunction]
#[pyo3(signature = (pattern, f = "m.", r_max = 25.0, step = 0.25, r_min = 0.0, edge = "translational"))]
fn estimate_kf(
    pattern: &PyPattern,
    f: &str,
    r_max: f64,
    step: f64,
    r_min: f64,
    edge: &str,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let grid = RGrid::new(r_min, r_max, step).map_err(to_py)?;
    let est = marktest::estimate_kf(&pattern.0, parse(f)?, parse(edge)?, &grid).map_err(to_py)?;
    Ok((grid.values(), est.into_values()))
}

/// Random labelling test. Returns a dict with the p-value, rank, deviations and the
/// data, null and residual functions on the estimation grid.
#[pyfunction]
#[pyo3(signature = (
    pattern, f = "m.", transformation = "L", scaling = "qdir", deviation = "sup",
    r_max = 25.0, step = 0.25, interval = None, s = 999, seed = 0,
    edge = "translational", t0_mode = "analytic"
))]
#[allow(clippy::too_many_arguments)]
fn run_test<'py>(
    py: Python<'py>,
    pattern: &PyPattern,
    f: &str,
    transformation: &str,
    scaling: &str,
    deviation: &str,
    r_max: f64,
    step: f64,
    interval: Option<(f64, f64)>,
    s: usize,
    seed: u64,
    edge: &str,
    t0_mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = RGrid::new(0.0, r_max, step).map_err(to_py)?;
    let interval = match interval {
        Some((a, b)) => grid.sub_interval(a, b).map_err(to_py)?,
        None => grid,
    };
    let t0_mode = match t0_mode {
        "analytic" => T0Mode::Analytic,
        "diggle-leave-one-out" => T0Mode::DiggleLeaveOneOut,
        other => return Err(PyValueError::new_err(format!("unknown t0 mode {other:?}"))),
    };
    let config = TestConfig {
        f: parse::<MarkTestFunction>(f)?,
        edge: parse::<EdgeCorrection>(edge)?,
        transformation: parse::<Transformation>(transformation)?,
        scaling: parse::<ScalingKind>(scaling)?,
        deviation: parse::<DeviationKind>(deviation)?,
        grid,
        interval,
        s,
        seed,
        t0_mode,
    };
    let result = marktest::run_test(&pattern.0, &config).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("p_value", result.p_value)?;
    out.set_item("rank", result.rank)?;
    out.set_item("u", result.u)?;
    out.set_item("r", grid.values())?;
    out.set_item("t_data", result.t_data.into_values())?;
    out.set_item("t0", result.t0.into_values())?;
    out.set_item("residual", result.residual.into_values())?;
    Ok(out)
}

/// One pattern from a model given as JSON (same keys as the CLI's model files).
#[pyfunction]
#[pyo3(signature = (model_json, seed = 0))]
fn simulate(model_json: &str, seed: u64) -> PyResult<PyPattern> {
    let spec: ModelSpec =
        serde_json::from_str(model_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let sim = Simulator::new(spec).map_err(to_py)?;
    replicate_pattern(&sim, seed).map(PyPattern).map_err(to_py)
}

/// Exact power of the unscaled and scaled tests in a toy example, one tuple
/// `(mu3, unscaled, scaled)` per shift.
#[pyfunction]
#[pyo3(signature = (example, case, mu3, alpha = 0.05))]
fn toy_power_curve(example: u8, case: &str, mu3: Vec<f64>, alpha: f64) -> PyResult<Vec<(f64, f64, f64)>> {
    let case = match (example, case) {
        (1, "a") => ToyCase::Normal1a,
        (1, "b") => ToyCase::Normal1b,
        (2, "a") => ToyCase::Asymmetric2a,
        (2, "b") => ToyCase::Asymmetric2b,
        _ => return Err(PyValueError::new_err("example must be 1 or 2 and case 'a' or 'b'")),
    };
    let curve = marktest::toy_power_curve(case, &mu3, alpha).map_err(to_py)?;
    Ok(curve.into_iter().map(|p| (p.mu3, p.power_unscaled, p.power_scaled)).collect())
}

#[pyfunction]
fn folded_normal_cdf(y: f64, mu: f64, sigma: f64) -> PyResult<f64> {
    marktest::folded_normal_cdf(y, mu, sigma).map_err(to_py)
}

/// `(power, standard error)` from `k` rejections in `n` replicates.
#[pyfunction]
fn estimate_power(k: usize, n: usize) -> PyResult<(f64, f64)> {
    marktest::estimate_power(k, n).map_err(to_py)
}

#[pymodule]
fn marktest_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWindow>()?;
    m.add_class::<PyPattern>()?;
    m.add_function(wrap_pyfunction!(estimate_kf, m)?)?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(toy_power_curve, m)?)?;
    m.add_function(wrap_pyfunction!(folded_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_power, m)?)?;
    Ok(())
}
