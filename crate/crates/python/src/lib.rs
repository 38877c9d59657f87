//! Python bindings: grids, convex bodies, φ models and the flow solver.
//!
//! Fields cross the boundary as flat lists in node order. Heavy calls release
//! the GIL, so a φ given as a Python callable is evaluated under short GIL
//! acquisitions from the worker threads.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use orlicz_flow::{self as core, ConvexBody, Error, FlowConfig, FlowProblem, PhiArgMode, PhiModel, ScalarField, SphereGrid};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Discretized unit circle (`n = 2`) or sphere (`n = 3`).
#[pyclass(name = "Grid", frozen)]
#[derive(Clone)]
pub struct PyGrid {
    inner: Arc<SphereGrid>,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: usize, resolution: usize) -> PyResult<Self> {
        Ok(PyGrid { inner: core::build_grid(n, resolution).py()? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.inner.resolution()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(θ, φ)` of every node.
    fn angles(&self) -> Vec<(f64, f64)> {
        (0..self.inner.len()).map(|k| self.inner.angles(k)).collect()
    }

    /// Unit vectors of every node.
    fn nodes(&self) -> Vec<[f64; 3]> {
        (0..self.inner.len()).map(|k| self.inner.node(k)).collect()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    /// Quadrature of nodal values.
    fn integrate(&self, values: Vec<f64>) -> PyResult<f64> {
        let f = ScalarField::new(self.inner.clone(), values).py()?;
        core::integrate(&self.inner, &f).py()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, resolution={})", self.inner.dim(), self.inner.resolution())
    }
}

/// Uniformly convex body given by its sampled support function.
#[pyclass(name = "Body", frozen)]
#[derive(Clone)]
pub struct PyBody {
    inner: ConvexBody,
}

#[pymethods]
impl PyBody {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        Ok(PyBody { inner: ConvexBody::from_values(grid.inner.clone(), values).py()? })
    }

    #[staticmethod]
    fn ball(grid: &PyGrid, radius: f64) -> PyResult<Self> {
        Ok(PyBody { inner: ConvexBody::ball(grid.inner.clone(), radius).py()? })
    }

    #[staticmethod]
    #[pyo3(signature = (grid, radius, center))]
    fn offset_ball(grid: &PyGrid, radius: f64, center: Vec<f64>) -> PyResult<Self> {
        let mut v = [0.0; 3];
        if center.len() > 3 {
            return Err(PyValueError::new_err("center has more than three coordinates"));
        }
        v[..center.len()].copy_from_slice(&center);
        Ok(PyBody { inner: ConvexBody::offset_ball(grid.inner.clone(), radius, v).py()? })
    }

    #[staticmethod]
    fn ellipse(grid: &PyGrid, a: f64, b: f64) -> PyResult<Self> {
        Ok(PyBody { inner: ConvexBody::ellipse(grid.inner.clone(), a, b).py()? })
    }

    #[staticmethod]
    fn ellipsoid(grid: &PyGrid, axes: Vec<f64>) -> PyResult<Self> {
        Ok(PyBody { inner: ConvexBody::ellipsoid(grid.inner.clone(), &axes).py()? })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyBody { inner: core::io::read_body(&path).py()? })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        core::io::write_body(&path, &self.inner).py()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid().clone() }
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn convexity_margin(&self) -> f64 {
        self.inner.convexity_margin()
    }

    /// Boundary points `X(x) = h x + ∇h`.
    fn embedding(&self) -> Vec<[f64; 3]> {
        core::embedding(&self.inner)
    }

    /// Radial function in direction `xi`.
    fn radial(&self, xi: [f64; 3]) -> f64 {
        core::radial_eval(&self.inner, &xi)
    }

    fn reverse_radial_gauss(&self, xi: [f64; 3]) -> [f64; 3] {
        core::reverse_radial_gauss(&self.inner, &xi)
    }

    fn polar(&self, py: Python<'_>) -> PyResult<Self> {
        let inner = py.allow_threads(|| core::polar_body(&self.inner)).py()?;
        Ok(PyBody { inner })
    }

    fn gauss_curvature(&self) -> PyResult<Vec<f64>> {
        Ok(core::gauss_curvature(&self.inner).py()?.into_values())
    }

    fn integral_curvature_density(&self) -> Vec<f64> {
        core::integral_curvature_density(&self.inner).into_values()
    }

    fn total_integral_curvature(&self) -> f64 {
        core::total_integral_curvature(&self.inner)
    }

    /// Normal-arc length over directions `[start, end]` (circle only).
    fn radial_gauss_image_measure(&self, start: f64, end: f64) -> PyResult<f64> {
        core::radial_gauss_image_measure(&self.inner, start, end).py()
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __repr__(&self) -> String {
        let v = self.inner.values();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        format!("Body(n={}, nodes={}, h in [{lo:.6}, {hi:.6}])", self.inner.dim(), v.len())
    }
}

/// The function φ together with its primitive ϕ.
#[pyclass(name = "Phi", frozen)]
#[derive(Clone)]
pub struct PyPhi {
    inner: PhiModel,
}

#[pymethods]
impl PyPhi {
    #[staticmethod]
    fn power(p: f64) -> Self {
        PyPhi { inner: PhiModel::power(p) }
    }

    #[staticmethod]
    fn reciprocal() -> Self {
        PyPhi { inner: PhiModel::reciprocal() }
    }

    /// `φ` from a Python callable `t -> float`. Exceptions and non-numeric
    /// results evaluate to NaN, which the solver rejects.
    #[staticmethod]
    #[pyo3(signature = (f, name = "custom"))]
    fn custom(f: PyObject, name: &str) -> Self {
        let f = Arc::new(f);
        let inner = PhiModel::custom(name, move |t| {
            Python::with_gil(|py| f.call1(py, (t,)).and_then(|v| v.extract::<f64>(py)).unwrap_or(f64::NAN))
        });
        PyPhi { inner }
    }

    /// Log-log interpolation through `(t, φ(t))` points.
    #[staticmethod]
    fn tabulated(points: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(PyPhi { inner: PhiModel::tabulated(core::PhiTable::new(points).py()?) })
    }

    #[staticmethod]
    fn read_table(path: PathBuf) -> PyResult<Self> {
        Ok(PyPhi { inner: PhiModel::tabulated(core::PhiTable::read(&path).py()?) })
    }

    fn with_primitive_base(&self, base: f64) -> PyResult<Self> {
        Ok(PyPhi { inner: self.inner.clone().with_primitive_base(base).py()? })
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.inner.eval(t).py()
    }

    /// `ϕ(t) = ∫_base^t φ(s)/s ds`.
    fn varphi(&self, t: f64) -> PyResult<f64> {
        self.inner.varphi(t).py()
    }

    /// Tail estimates `(liminf at 0, limsup at infinity)`.
    fn limits(&self) -> (f64, f64) {
        self.inner.limits()
    }

    fn level_radius(&self, level: f64) -> Option<f64> {
        self.inner.level_radius(level)
    }

    fn __repr__(&self) -> String {
        format!("Phi({})", self.inner.label())
    }
}

fn parse_mode(mode: &str) -> PyResult<PhiArgMode> {
    mode.parse().py()
}

/// Solvability margins as a dict.
#[pyfunction]
fn check_solvability<'py>(py: Python<'py>, phi: &PyPhi, grid: &PyGrid, g: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let g = ScalarField::new(grid.inner.clone(), g).py()?;
    let r = core::check_solvability(&phi.inner, &g).py()?;
    let d = PyDict::new_bound(py);
    d.set_item("passed", r.passed)?;
    d.set_item("liminf_at_zero", r.liminf_at_zero)?;
    d.set_item("limsup_at_infinity", r.limsup_at_infinity)?;
    d.set_item("min_g", r.min_g)?;
    d.set_item("max_g", r.max_g)?;
    d.set_item("margin_upper", r.margin_upper)?;
    d.set_item("margin_lower", r.margin_lower)?;
    Ok(d)
}

/// `(holds, witness)` with `witness = (c, s)` when the condition fails.
#[pyfunction]
fn check_uniqueness(phi: &PyPhi) -> (bool, Option<(f64, f64)>) {
    let r = core::check_uniqueness_condition(&phi.inner);
    (r.holds, r.witness)
}

/// Result of a flow run.
#[pyclass(name = "Trace", frozen)]
pub struct PyTrace {
    #[pyo3(get)]
    termination: String,
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    functional: Vec<f64>,
    #[pyo3(get)]
    dissipation: Vec<f64>,
    #[pyo3(get)]
    residual_max: Vec<f64>,
    #[pyo3(get)]
    rollbacks: usize,
    #[pyo3(get)]
    solvability_passed: bool,
    #[pyo3(get)]
    body: PyBody,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn converged(&self) -> bool {
        self.termination == "converged"
    }

    fn __repr__(&self) -> String {
        format!("Trace({}, steps={})", self.termination, self.times.len().saturating_sub(1))
    }
}

/// Flow data `(g, φ)` with the argument mode of φ.
#[pyclass(name = "Problem", frozen)]
pub struct PyProblem {
    inner: FlowProblem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (grid, g, phi, mode = "radial"))]
    fn new(grid: &PyGrid, g: Vec<f64>, phi: &PyPhi, mode: &str) -> PyResult<Self> {
        let g = ScalarField::new(grid.inner.clone(), g).py()?;
        Ok(PyProblem { inner: FlowProblem::new(g, phi.inner.clone(), parse_mode(mode)?).py()? })
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode().to_string()
    }

    fn flow_speed(&self, py: Python<'_>, body: &PyBody) -> PyResult<Vec<f64>> {
        Ok(py.allow_threads(|| self.inner.flow_speed(&body.inner)).py()?.into_values())
    }

    fn residual(&self, py: Python<'_>, body: &PyBody) -> PyResult<Vec<f64>> {
        Ok(py.allow_threads(|| self.inner.ma_residual(&body.inner)).py()?.into_values())
    }

    fn functional(&self, py: Python<'_>, body: &PyBody) -> PyResult<f64> {
        py.allow_threads(|| self.inner.functional(&body.inner)).py()
    }

    fn functional_direct(&self, py: Python<'_>, body: &PyBody) -> PyResult<f64> {
        py.allow_threads(|| self.inner.functional_direct(&body.inner)).py()
    }

    fn dissipation(&self, py: Python<'_>, body: &PyBody) -> PyResult<f64> {
        py.allow_threads(|| self.inner.dissipation(&body.inner)).py()
    }

    /// One forward Euler step of exactly `dt`.
    fn euler_step(&self, py: Python<'_>, body: &PyBody, dt: f64) -> PyResult<PyBody> {
        let inner = py.allow_threads(|| self.inner.euler_step(&body.inner, dt)).py()?;
        Ok(PyBody { inner })
    }

    /// `(lower, upper)` bracket for the support function along the flow.
    fn apriori_bounds(&self, body: &PyBody) -> (f64, f64) {
        self.inner.apriori_support_bounds(&body.inner)
    }

    #[pyo3(signature = (body, *, max_steps = 1_000_000, tol_speed = 1e-6, tol_residual = 1e-4, dt_init = 1e-2))]
    fn run(
        &self,
        py: Python<'_>,
        body: &PyBody,
        max_steps: usize,
        tol_speed: f64,
        tol_residual: f64,
        dt_init: f64,
    ) -> PyResult<PyTrace> {
        let cfg = FlowConfig {
            mode: self.inner.mode(),
            max_steps,
            tol_speed,
            tol_residual,
            dt_init,
            ..FlowConfig::default()
        };
        let trace = py.allow_threads(|| self.inner.run(&body.inner, &cfg)).py()?;
        let col = |f: fn(&core::StepRecord) -> f64| trace.records.iter().map(f).collect::<Vec<f64>>();
        Ok(PyTrace {
            termination: trace.termination.to_string(),
            times: col(|r| r.t),
            functional: col(|r| r.functional),
            dissipation: col(|r| r.dissipation),
            residual_max: col(|r| r.residual_max),
            rollbacks: trace.rollbacks,
            solvability_passed: trace.solvability.passed,
            body: PyBody { inner: trace.final_state().body.clone() },
        })
    }
}

#[pymodule]
pub fn orlicz_flow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyBody>()?;
    m.add_class::<PyPhi>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(check_solvability, m)?)?;
    m.add_function(wrap_pyfunction!(check_uniqueness, m)?)?;
    Ok(())
}
