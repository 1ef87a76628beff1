//! Python bindings: scenarios, the full pipeline and a few building blocks.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use almgren::extension::{build_kernel, ExtensionKernel};
use almgren::report::{emit, parse_formats, to_csv, to_json, to_svg};
use almgren::scenario::{self, RunReport};
use almgren::sphere_eig;
use almgren::Error;

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.root() {
        Error::Numeric(_) => PyArithmeticError::new_err(msg),
        Error::Io { .. } => PyOSError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    /// A shipped scenario by name.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        scenario::Scenario::builtin(name).map(|inner| PyScenario { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        scenario::Scenario::from_toml(text).map(|inner| PyScenario { inner }).map_err(py_err)
    }

    /// A shipped name or a path to a TOML file.
    #[staticmethod]
    fn load(arg: &str) -> PyResult<Self> {
        scenario::Scenario::load(arg).map(|inner| PyScenario { inner }).map_err(py_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.radii()
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?}, s={}, N={})", self.inner.name, self.inner.s, self.inner.dim())
    }
}

#[pyclass(name = "Report", frozen)]
struct PyReport {
    inner: RunReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn m0(&self) -> usize {
        self.inner.verdict.m0
    }

    #[getter]
    fn gamma_hat(&self) -> f64 {
        self.inner.verdict.gamma_hat
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.verdict.beta.clone()
    }

    #[getter]
    fn route_gap(&self) -> f64 {
        self.inner.blowup.beta.relative_gap
    }

    #[getter]
    fn classified(&self) -> bool {
        self.inner.verdict.classified
    }

    #[getter]
    fn audits_pass(&self) -> bool {
        self.inner.verdict.audits_pass
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.verdict.outcome.exit_code()
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.frequency.profile.radii.clone()
    }

    #[getter]
    fn height(&self) -> Vec<f64> {
        self.inner.frequency.profile.height.clone()
    }

    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.inner.frequency.profile.energy.clone()
    }

    #[getter]
    fn frequency(&self) -> Vec<f64> {
        self.inner.frequency.profile.frequency.clone()
    }

    #[getter]
    fn diagnostics(&self) -> Vec<String> {
        self.inner.verdict.diagnostics.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner).map_err(py_err)
    }

    fn to_csv(&self) -> String {
        to_csv(&self.inner)
    }

    fn to_svg(&self) -> String {
        to_svg(&self.inner)
    }

    /// Writes the report files; returns their paths.
    #[pyo3(signature = (out_dir, formats = "csv,json,svg"))]
    fn emit(&self, out_dir: PathBuf, formats: &str) -> PyResult<Vec<PathBuf>> {
        let f = parse_formats(formats).map_err(py_err)?;
        emit(&self.inner, &out_dir, &f).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        almgren::report::from_json(text).map(|inner| PyReport { inner }).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Report({:?}, m0={}, gamma_hat={:.6}, outcome={:?})",
            self.inner.scenario.name, self.inner.verdict.m0, self.inner.verdict.gamma_hat, self.inner.verdict.outcome
        )
    }
}

#[pyclass(name = "Kernel", frozen)]
struct PyKernel {
    inner: ExtensionKernel,
}

#[pymethods]
impl PyKernel {
    #[new]
    fn new(s: f64) -> PyResult<Self> {
        build_kernel(s).map(|inner| PyKernel { inner }).map_err(py_err)
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    /// 2^{1−2s}Γ(1−s)/Γ(s).
    #[getter]
    fn kappa_oracle(&self) -> f64 {
        self.inner.kappa_oracle
    }

    #[getter]
    fn max_ode_residual(&self) -> f64 {
        self.inner.max_ode_residual
    }

    fn psi(&self, xi: f64) -> f64 {
        self.inner.psi(xi)
    }

    fn dpsi(&self, xi: f64) -> f64 {
        self.inner.dpsi(xi)
    }
}

/// Runs every stage of the pipeline, releasing the GIL meanwhile.
#[pyfunction]
fn run(py: Python<'_>, scenario: &PyScenario) -> PyResult<PyReport> {
    let sc = scenario.inner.clone();
    py.detach(move || scenario::run(&sc)).map(|inner| PyReport { inner }).map_err(py_err)
}

/// m-th eigenvalue of the weighted half-sphere problem.
#[pyfunction]
fn sphere_eigenvalue(m: usize, dim: usize, s: f64) -> PyResult<f64> {
    sphere_eig::eigenvalue(m, dim, s).map_err(py_err)
}

/// (eigenvalue, Rayleigh quotients, residuals) of the m-th eigenspace.
#[pyfunction]
fn eigenspace(m: usize, dim: usize, s: f64) -> PyResult<(f64, Vec<f64>, Vec<f64>)> {
    let e = sphere_eig::eigenspace_basis(m, dim, s).map_err(py_err)?;
    Ok((
        e.eigenvalue,
        e.functions.iter().map(|f| f.rayleigh).collect(),
        e.functions.iter().map(|f| f.residual).collect(),
    ))
}

#[pyfunction]
fn builtin_scenarios() -> Vec<&'static str> {
    scenario::builtin_names()
}

#[pymodule]
fn almgren_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyKernel>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(eigenspace, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_scenarios, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
