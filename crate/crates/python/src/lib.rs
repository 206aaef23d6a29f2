//! Python bindings: meshes, benchmark sweeps, discrete inf-sup values and
//! the stability constant calculators.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ncstokes::analysis::{self, Domain};
use ncstokes::assembly::{Projection, SaddleSystem};
use ncstokes::experiments::{gradient_problem, trig_exact, trig_source, ExperimentConfig, ExperimentReport};
use ncstokes::fe_spaces::{DofMap, ElementFamily};
use ncstokes::solver;
use ncstokes::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Dimension { .. } | Error::UnsupportedDegree(_) => {
            PyValueError::new_err(err.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn element(name: &str) -> PyResult<ElementFamily> {
    match name {
        "cr" => Ok(ElementFamily::CrouzeixRaviart),
        "fs" => Ok(ElementFamily::FortinSoulie),
        other => Err(PyValueError::new_err(format!("unknown element '{other}', expected 'cr' or 'fs'"))),
    }
}

fn projection(name: &str) -> PyResult<Projection> {
    name.parse().map_err(to_py)
}

/// Structured triangulation of the unit square.
#[pyclass(name = "Mesh", frozen)]
pub struct PyMesh {
    inner: ncstokes::mesh::Mesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(PyMesh { inner: ncstokes::mesh::Mesh::structured_unit_square(n).map_err(to_py)? })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_cells(&self) -> usize {
        self.inner.num_cells()
    }

    #[getter]
    fn num_facets(&self) -> usize {
        self.inner.num_facets()
    }

    /// Grid step `1 / n`.
    #[getter]
    fn h(&self) -> f64 {
        self.inner.stats().h_grid
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices.iter().map(|v| (v.coords[0], v.coords[1])).collect()
    }

    fn cells(&self) -> Vec<(usize, usize, usize)> {
        self.inner.cells.iter().map(|c| (c.vertex_ids[0], c.vertex_ids[1], c.vertex_ids[2])).collect()
    }

    /// Number of velocity dofs per component for `element`, and how many
    /// of them are free.
    fn dof_counts(&self, element_name: &str) -> PyResult<(usize, usize)> {
        let dm = DofMap::new(&self.inner, element(element_name)?);
        Ok((dm.total_dofs, dm.num_free()))
    }

    fn __repr__(&self) -> String {
        format!("Mesh(cells={}, h={})", self.inner.num_cells(), self.inner.stats().h_grid)
    }
}

/// Result of a benchmark sweep.
#[pyclass(name = "Report", frozen)]
pub struct PyReport {
    inner: ExperimentReport,
}

#[pymethods]
impl PyReport {
    fn csv(&self) -> String {
        self.inner.to_csv()
    }

    fn table(&self) -> String {
        self.inner.to_table()
    }

    /// `(element, projection, nu, n, h, eps0)` tuples.
    fn rows(&self) -> Vec<(String, String, f64, usize, f64, f64)> {
        self.inner
            .series
            .iter()
            .flat_map(|s| s.rows.iter())
            .map(|r| (r.element.to_string(), r.projection.to_string(), r.nu, r.n, r.h, r.eps0))
            .collect()
    }

    /// `(element, projection, nu, rate)` per series with two or more levels.
    fn rates(&self) -> Vec<(String, String, f64, f64)> {
        self.inner
            .series
            .iter()
            .filter_map(|s| s.rate.map(|r| (s.element.to_string(), s.projection.to_string(), s.nu, r)))
            .collect()
    }
}

/// Runs the `gradient` or `trig` benchmark. Omitted lists take the defaults.
#[pyfunction]
#[pyo3(signature = (benchmark, element_name, projections=None, nus=None, levels=None))]
fn run_experiment(
    py: Python<'_>,
    benchmark: &str,
    element_name: &str,
    projections: Option<Vec<String>>,
    nus: Option<Vec<f64>>,
    levels: Option<Vec<usize>>,
) -> PyResult<PyReport> {
    let family = element(element_name)?;
    let mut cfg = match benchmark {
        "gradient" => ExperimentConfig::gradient_default(family),
        "trig" => ExperimentConfig::trig_default(family),
        other => return Err(PyValueError::new_err(format!("unknown benchmark '{other}'"))),
    };
    if let Some(p) = projections {
        cfg.projections = p.iter().map(|s| projection(s)).collect::<PyResult<_>>()?;
    }
    if let Some(v) = nus {
        cfg.nus = v;
    }
    if let Some(l) = levels {
        cfg.levels = l;
    }
    cfg.validate().map_err(to_py)?;
    let report = py.detach(|| ncstokes::experiments::run(&cfg)).map_err(to_py)?;
    Ok(PyReport { inner: report })
}

/// Solves one benchmark instance and returns velocity, pressure and errors.
#[pyfunction]
#[pyo3(signature = (benchmark, element_name, n, nu, projection_name="none"))]
fn solve<'py>(
    py: Python<'py>,
    benchmark: &str,
    element_name: &str,
    n: usize,
    nu: f64,
    projection_name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let family = element(element_name)?;
    let proj = projection(projection_name)?;
    let mesh = ncstokes::mesh::Mesh::structured_unit_square(n).map_err(to_py)?;
    let vel = DofMap::new(&mesh, family);
    let pres = DofMap::new(&mesh, family.pressure_pair().expect("velocity element"));
    let (source, exact) = match benchmark {
        "gradient" => gradient_problem(),
        "trig" => (trig_source(nu), trig_exact()),
        other => return Err(PyValueError::new_err(format!("unknown benchmark '{other}'"))),
    };
    let (sol, full, metrics) = py
        .detach(|| -> ncstokes::Result<_> {
            let sys = SaddleSystem::assemble(&mesh, &vel, &pres, &source, proj, nu)?;
            let sol = solver::solve(&sys)?;
            let full = vel.expand_free_vector(&sol.u)?;
            let metrics = analysis::error_metrics(&mesh, &vel, &pres, &full, &sol.p, &exact)?;
            Ok((sol, full, metrics))
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("u", full)?;
    out.set_item("p", sol.p)?;
    out.set_item("eps0", metrics.eps0)?;
    out.set_item("pressure_error", metrics.l2_pressure_error)?;
    out.set_item("broken_h1_error", metrics.broken_h1_error)?;
    out.set_item("residual", sol.residual_norm)?;
    out.set_item("unknowns", sol.stats.unknowns)?;
    Ok(out)
}

/// Discrete inf-sup value of the element pair on the `n x n` mesh.
#[pyfunction]
fn infsup(py: Python<'_>, element_name: &str, n: usize) -> PyResult<f64> {
    let family = element(element_name)?;
    let mesh = ncstokes::mesh::Mesh::structured_unit_square(n).map_err(to_py)?;
    let vel = DofMap::new(&mesh, family);
    let pres = DofMap::new(&mesh, family.pressure_pair().expect("velocity element"));
    py.detach(|| analysis::discrete_infsup(&mesh, &vel, &pres)).map_err(to_py)
}

/// `C_div`, `C_min`, `C_max` and `C_stab` for a given `C_div` and viscosity.
#[pyfunction]
#[pyo3(signature = (c_div, nu, c_nc=None))]
fn stability_constants<'py>(py: Python<'py>, c_div: f64, nu: f64, c_nc: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = analysis::stability_constants(c_div, nu, c_nc).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("c_div", r.c_div)?;
    out.set_item("c_min", r.c_min)?;
    out.set_item("c_max", r.c_max)?;
    out.set_item("c_stab", r.c_stab)?;
    out.set_item("nu", r.nu)?;
    Ok(out)
}

/// Inf-sup lower bound of a domain star-shaped with respect to a ball.
#[pyfunction]
fn costabel_dauge_beta(rho: f64, radius: f64) -> PyResult<f64> {
    analysis::costabel_dauge_beta(rho, radius).map_err(to_py)
}

/// Inf-sup lower bound of a named domain (`ball`, `square`, `stretched`,
/// `l-shape`, `cross`).
#[pyfunction]
#[pyo3(signature = (domain, k=None))]
fn domain_beta(domain: &str, k: Option<f64>) -> PyResult<f64> {
    let d: Domain = domain.parse().map_err(to_py)?;
    analysis::named_domain_beta(d, k).map_err(to_py)
}

/// Least-squares slope of `log e` against `log h`.
#[pyfunction]
fn convergence_rate(h: Vec<f64>, e: Vec<f64>) -> PyResult<f64> {
    analysis::convergence_rate(&h, &e).map_err(to_py)
}

#[pymodule]
fn pyncstokes(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(infsup, m)?)?;
    m.add_function(wrap_pyfunction!(stability_constants, m)?)?;
    m.add_function(wrap_pyfunction!(costabel_dauge_beta, m)?)?;
    m.add_function(wrap_pyfunction!(domain_beta, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_rate, m)?)?;
    Ok(())
}
