//! Python bindings. Errors surface as `ValueError("[code] message")`.

use std::path::Path;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use holoshot::runner;
use holoshot::{
    build_lattice, build_triples, zero_excluded, Error, ExperimentConfig, RefinableFunction, Roi,
    SolveCoefficients, TargetParams, TripleVariant,
};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(format!("[{}] {e}", e.code()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Built-in complex-valued target function.
#[pyclass(module = "pyholoshot", frozen)]
struct TargetFunction(holoshot::TargetFunction);

#[pymethods]
impl TargetFunction {
    #[new]
    #[pyo3(signature = (name, dim, *, center=None, sigma=None, freq=None, order=None, phase=None, value=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        name: &str,
        dim: usize,
        center: Option<Vec<f64>>,
        sigma: Option<f64>,
        freq: Option<Vec<f64>>,
        order: Option<usize>,
        phase: Option<f64>,
        value: Option<Complex64>,
    ) -> PyResult<Self> {
        let params = TargetParams {
            center,
            sigma,
            freq,
            order,
            phase,
            value: value.map(|z| [z.re, z.im]),
        };
        holoshot::TargetFunction::builtin(name, dim, &params)
            .map(Self)
            .map_err(py_err)
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<Complex64> {
        self.0.eval(&x).map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn smoothness(&self) -> f64 {
        self.0.smoothness()
    }
}

/// Level-indexed reference wave schedule.
#[pyclass(module = "pyholoshot", frozen)]
struct WaveSequence(holoshot::WaveSequence);

#[pymethods]
impl WaveSequence {
    #[staticmethod]
    fn dyadic_plane(dim: usize, theta: f64) -> Self {
        Self(holoshot::WaveSequence::dyadic_plane(dim, theta))
    }

    #[staticmethod]
    fn dyadic_spherical(dim: usize, epsilon: f64) -> Self {
        Self(holoshot::WaveSequence::dyadic_spherical(dim, epsilon))
    }

    /// Value of `g_N` at `x`.
    fn eval(&self, level: u32, x: Vec<f64>) -> PyResult<Complex64> {
        self.0
            .wave_at(level)
            .and_then(|g| g.eval(&x))
            .map_err(py_err)
    }

    /// Exact admissibility ratio and certificate at `level` on the box
    /// `[lo, hi]`, as a dict.
    #[pyo3(signature = (level, lo, hi, margins, axis=0))]
    fn admissibility(
        &self,
        py: Python<'_>,
        level: u32,
        lo: Vec<f64>,
        hi: Vec<f64>,
        margins: Vec<u32>,
        axis: usize,
    ) -> PyResult<Py<PyAny>> {
        let roi = Roi::new(lo, hi).map_err(py_err)?;
        let report = build_lattice(&roi, &margins, level)
            .and_then(|l| build_triples(&l, self.0.natural_variant(axis)))
            .and_then(|t| self.0.report(level, &roi, &margins, &t))
            .map_err(py_err)?;
        to_python(py, &report)
    }
}

/// Base index with companion coordinates in lattice units.
type TripleRow = (Vec<i64>, Vec<f64>, Vec<f64>);

fn to_python<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(json_err)?;
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

/// Cardinal B-spline `B_m` at `x`.
#[pyfunction]
fn bspline(m: usize, x: f64) -> PyResult<f64> {
    holoshot::eval_bspline(m, x).map_err(py_err)
}

/// Mask coefficients of `B_m`.
#[pyfunction]
fn bspline_mask(m: usize) -> PyResult<Vec<f64>> {
    holoshot::bspline_mask(m)
        .map(|mask| mask.coefficients().to_vec())
        .map_err(py_err)
}

/// `Σ_k φ(x - k) - 1` for the tensor B-spline with the given orders.
#[pyfunction]
fn unit_partition_residual(orders: Vec<usize>, x: Vec<f64>) -> PyResult<f64> {
    RefinableFunction::tensor(&orders)
        .and_then(|phi| phi.unit_partition_residual(&x))
        .map_err(py_err)
}

/// Integer lattice indices for the box `[lo, hi]` at `level`.
#[pyfunction]
fn lattice_points(
    lo: Vec<f64>,
    hi: Vec<f64>,
    margins: Vec<u32>,
    level: u32,
) -> PyResult<Vec<Vec<i64>>> {
    let roi = Roi::new(lo, hi).map_err(py_err)?;
    build_lattice(&roi, &margins, level)
        .map(|l| l.points())
        .map_err(py_err)
}

/// `(axis, bound)` when the lattice avoids the origin at every level, else `None`.
#[pyfunction]
fn zero_exclusion(lo: Vec<f64>, hi: Vec<f64>, margins: Vec<u32>) -> PyResult<Option<(usize, f64)>> {
    let roi = Roi::new(lo, hi).map_err(py_err)?;
    zero_excluded(&roi, &margins)
        .map(|z| z.map(|z| (z.axis, z.bound)))
        .map_err(py_err)
}

/// Recovers `f` at a base point from the wave values `[g, g', g'']` and the
/// intensities `[I, I', I'']`. Returns `None` for a degenerate triple.
#[pyfunction]
fn solve(g: [Complex64; 3], intensities: [f64; 3]) -> Option<Complex64> {
    let c = SolveCoefficients::from_values(g);
    c.solve(intensities, c.default_tolerance())
}

/// Violated hypotheses of a TOML configuration as `(code, message)` pairs.
#[pyfunction]
fn validate(config: &str) -> PyResult<Vec<(String, String)>> {
    let config = ExperimentConfig::from_toml(config).map_err(py_err)?;
    Ok(config
        .validate()
        .into_iter()
        .map(|v| (v.code, v.message))
        .collect())
}

/// Runs the configured study and returns the report as a dict. With `out_dir`
/// the CSV and JSON artifacts are written there as well.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None))]
fn run_study(py: Python<'_>, config: &str, out_dir: Option<&str>) -> PyResult<Py<PyAny>> {
    let config = ExperimentConfig::from_toml(config).map_err(py_err)?;
    let report = py
        .detach(|| match out_dir {
            Some(dir) => runner::run(&config, Path::new(dir)).map(|o| o.report),
            None => config
                .resolve()
                .and_then(|r| r.study().run_with(r.levels.clone(), |_| Ok(()))),
        })
        .map_err(py_err)?;
    to_python(py, &report)
}

/// Plane triple variant along `axis` or the spherical one, for lattice checks.
#[pyfunction]
#[pyo3(signature = (lo, hi, margins, level, spherical=false, axis=0))]
fn triples(
    lo: Vec<f64>,
    hi: Vec<f64>,
    margins: Vec<u32>,
    level: u32,
    spherical: bool,
    axis: usize,
) -> PyResult<Vec<TripleRow>> {
    let roi = Roi::new(lo, hi).map_err(py_err)?;
    let variant = if spherical {
        TripleVariant::Spherical
    } else {
        TripleVariant::Plane { axis }
    };
    let set = build_lattice(&roi, &margins, level)
        .and_then(|l| build_triples(&l, variant))
        .map_err(py_err)?;
    Ok(set
        .triples()
        .iter()
        .map(|t| (t.k.clone(), t.k1.coords(), t.k2.coords()))
        .collect())
}

#[pymodule]
fn pyholoshot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TargetFunction>()?;
    m.add_class::<WaveSequence>()?;
    m.add_function(wrap_pyfunction!(bspline, m)?)?;
    m.add_function(wrap_pyfunction!(bspline_mask, m)?)?;
    m.add_function(wrap_pyfunction!(unit_partition_residual, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_points, m)?)?;
    m.add_function(wrap_pyfunction!(zero_exclusion, m)?)?;
    m.add_function(wrap_pyfunction!(triples, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
