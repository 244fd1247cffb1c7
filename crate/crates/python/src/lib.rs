//! Python bindings for `hexflow`.
//!
//! Vectors cross the boundary as lists of floats and matrices as lists of
//! rows. Library errors surface as `ValueError`.

use hexflow::conformal::{self, BackgroundMetric, ConformalFactor, CurvatureVector, LaplacianMatrix};
use hexflow::energy::{self, SolveStatus};
use hexflow::flows::{self, FlowSpec, FlowStatus};
use hexflow::{hexagon, io};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py<T>(r: hexflow::Result<T>) -> PyResult<T> {
    r.map_err(|e| PyValueError::new_err(e.to_string()))
}

fn matrix_rows(m: &LaplacianMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<LaplacianMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(format!("expected a square {n}x{n} matrix")));
    }
    Ok(LaplacianMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn factor_or_zeros(w: Option<Vec<f64>>, n: usize) -> PyResult<ConformalFactor> {
    match w {
        Some(w) => to_py(ConformalFactor::new(w)),
        None => Ok(ConformalFactor::zeros(n)),
    }
}

/// Combinatorial hexagon complex.
#[pyclass(name = "SurfaceComplex", frozen, module = "pyhexflow")]
pub struct PySurface {
    inner: hexflow::SurfaceComplex,
}

#[pymethods]
impl PySurface {
    #[staticmethod]
    fn pair_of_pants() -> Self {
        PySurface {
            inner: hexflow::SurfaceComplex::pair_of_pants(),
        }
    }

    #[staticmethod]
    fn one_holed_torus() -> Self {
        PySurface {
            inner: hexflow::SurfaceComplex::one_holed_torus(),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (num_faces, seed = 0))]
    fn random(num_faces: usize, seed: u64) -> PyResult<Self> {
        to_py(hexflow::SurfaceComplex::random(num_faces, seed)).map(|inner| PySurface { inner })
    }

    /// Parses the JSON surface format used by the command-line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        to_py(io::parse_surface(text)).map(|inner| PySurface { inner })
    }

    #[getter]
    fn num_faces(&self) -> usize {
        self.inner.num_faces()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn num_components(&self) -> usize {
        self.inner.num_components()
    }

    #[getter]
    fn euler_characteristic(&self) -> i64 {
        self.inner.euler_characteristic()
    }

    fn boundary_cycle_lengths(&self) -> Vec<usize> {
        self.inner.boundary_cycle_lengths()
    }

    fn edge_endpoints(&self, edge: usize) -> PyResult<(usize, usize)> {
        if edge >= self.inner.num_edges() {
            return Err(PyValueError::new_err(format!("edge {edge} out of range")));
        }
        let [i, j] = self.inner.edge_endpoints(edge);
        Ok((i, j))
    }

    /// Glued side pairs as `((face, slot), (face, slot))`.
    fn gluing_pairs(&self) -> Vec<((usize, usize), (usize, usize))> {
        self.inner
            .gluing_pairs()
            .into_iter()
            .map(|(p, q)| ((p.face, p.slot), (q.face, q.slot)))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SurfaceComplex(F={}, E={}, n={}, chi={})",
            self.inner.num_faces(),
            self.inner.num_edges(),
            self.inner.num_components(),
            self.inner.euler_characteristic()
        )
    }
}

#[pyclass(name = "SolveReport", frozen, get_all, module = "pyhexflow")]
pub struct PySolveReport {
    status: String,
    iterations: usize,
    w_star: Vec<f64>,
    residual_history: Vec<f64>,
}

#[pymethods]
impl PySolveReport {
    fn __repr__(&self) -> String {
        format!("SolveReport(status={:?}, iterations={})", self.status, self.iterations)
    }
}

/// Sampled flow trajectory; per-sample quantities are parallel lists.
#[pyclass(name = "FlowResult", frozen, get_all, module = "pyhexflow")]
pub struct PyFlowResult {
    status: String,
    accepted_steps: usize,
    rejected_steps: usize,
    t: Vec<f64>,
    w: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
    calabi_energy: Vec<f64>,
    potential_energy: Vec<f64>,
    boundary_margin: Vec<f64>,
}

#[pymethods]
impl PyFlowResult {
    fn __repr__(&self) -> String {
        format!(
            "FlowResult(status={:?}, t_final={}, samples={})",
            self.status,
            self.t.last().copied().unwrap_or(0.0),
            self.t.len()
        )
    }
}

fn solve_status(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterations => "max_iterations",
        SolveStatus::LineSearchFailed => "line_search_failed",
    }
}

fn flow_status(s: FlowStatus) -> &'static str {
    match s {
        FlowStatus::Converged => "converged",
        FlowStatus::HorizonReached => "horizon_reached",
        FlowStatus::StepUnderflow => "step_underflow",
    }
}

#[pyfunction]
fn arc_length(a: f64, b: f64, c: f64) -> PyResult<f64> {
    to_py(hexagon::arc_length(a, b, c))
}

#[pyfunction]
fn arc_length_partials(a: f64, b: f64, c: f64) -> PyResult<(f64, f64, f64)> {
    let [da, db, dc] = to_py(hexagon::arc_length_partials(a, b, c))?;
    Ok((da, db, dc))
}

#[pyfunction]
fn scale_metric(w: Vec<f64>, lengths: Vec<f64>, surface: &PySurface) -> PyResult<Vec<f64>> {
    let bg = to_py(BackgroundMetric::new(lengths))?;
    to_py(conformal::scale_metric(&ConformalFactor(w), &bg, &surface.inner))
}

#[pyfunction]
fn boundary_margin(w: Vec<f64>, lengths: Vec<f64>, surface: &PySurface) -> PyResult<f64> {
    let bg = to_py(BackgroundMetric::new(lengths))?;
    to_py(conformal::boundary_margin(&ConformalFactor(w), &bg, &surface.inner))
}

#[pyfunction]
fn is_admissible(w: Vec<f64>, lengths: Vec<f64>, surface: &PySurface) -> PyResult<bool> {
    let bg = to_py(BackgroundMetric::new(lengths))?;
    Ok(conformal::is_admissible(&ConformalFactor(w), &bg, &surface.inner))
}

#[pyfunction]
fn curvature(w: Vec<f64>, lengths: Vec<f64>, surface: &PySurface) -> PyResult<Vec<f64>> {
    let bg = to_py(BackgroundMetric::new(lengths))?;
    to_py(conformal::curvature_at(&ConformalFactor(w), &bg, &surface.inner)).map(|k| k.0)
}

#[pyfunction]
fn laplacian(w: Vec<f64>, lengths: Vec<f64>, surface: &PySurface) -> PyResult<Vec<Vec<f64>>> {
    let bg = to_py(BackgroundMetric::new(lengths))?;
    to_py(conformal::laplacian(&ConformalFactor(w), &bg, &surface.inner)).map(|m| matrix_rows(&m))
}

#[pyfunction]
fn fractional_power(delta: Vec<Vec<f64>>, s: f64) -> PyResult<Vec<Vec<f64>>> {
    let delta = matrix_from_rows(delta)?;
    to_py(flows::fractional_power(&delta, s)).map(|m| matrix_rows(&m))
}

#[pyfunction]
fn calabi_energy(k: Vec<f64>, k_bar: Vec<f64>) -> PyResult<f64> {
    to_py(energy::calabi_energy(&CurvatureVector(k), &CurvatureVector(k_bar)))
}

#[pyfunction]
fn potential_energy(w: Vec<f64>, k_bar: Vec<f64>, lengths: Vec<f64>, surface: &PySurface) -> PyResult<f64> {
    let bg = to_py(BackgroundMetric::new(lengths))?;
    to_py(energy::potential_energy(
        &ConformalFactor(w),
        &CurvatureVector(k_bar),
        &bg,
        &surface.inner,
    ))
}

#[pyfunction]
#[pyo3(signature = (k_bar, lengths, surface, w0 = None, tol = 1e-12, max_iter = 100))]
fn newton_solve(
    k_bar: Vec<f64>,
    lengths: Vec<f64>,
    surface: &PySurface,
    w0: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> PyResult<PySolveReport> {
    let bg = to_py(BackgroundMetric::new(lengths))?;
    let k_bar = to_py(CurvatureVector::new(k_bar))?;
    let w0 = factor_or_zeros(w0, surface.inner.num_components())?;
    let report = to_py(energy::newton_solve(&k_bar, &w0, &bg, &surface.inner, tol, max_iter))?;
    Ok(PySolveReport {
        status: solve_status(report.status).to_string(),
        iterations: report.iterations,
        w_star: report.w_star.0,
        residual_history: report.residual_history,
    })
}

#[pyfunction]
#[pyo3(signature = (s, k_bar, lengths, surface, w0 = None, tol = 1e-10, dt0 = 1e-2, t_max = 1e4, sample_every = 1))]
#[allow(clippy::too_many_arguments)]
fn run_flow(
    py: Python<'_>,
    s: f64,
    k_bar: Vec<f64>,
    lengths: Vec<f64>,
    surface: &PySurface,
    w0: Option<Vec<f64>>,
    tol: f64,
    dt0: f64,
    t_max: f64,
    sample_every: usize,
) -> PyResult<PyFlowResult> {
    let bg = to_py(BackgroundMetric::new(lengths))?;
    let k_bar = to_py(CurvatureVector::new(k_bar))?;
    let w0 = factor_or_zeros(w0, surface.inner.num_components())?;
    let mut spec = FlowSpec::new(s, k_bar, w0);
    spec.tol = tol;
    spec.dt0 = dt0;
    spec.t_max = t_max;
    spec.sample_every = sample_every;
    let cx = &surface.inner;
    let traj = to_py(py.detach(|| flows::run_flow(&spec, &bg, cx)))?;
    let samples = &traj.samples;
    Ok(PyFlowResult {
        status: flow_status(traj.status).to_string(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        t: samples.iter().map(|x| x.t).collect(),
        w: samples.iter().map(|x| x.w.0.clone()).collect(),
        k: samples.iter().map(|x| x.k.0.clone()).collect(),
        calabi_energy: samples.iter().map(|x| x.calabi_energy).collect(),
        potential_energy: samples.iter().map(|x| x.potential_energy).collect(),
        boundary_margin: samples.iter().map(|x| x.boundary_margin).collect(),
    })
}

#[pymodule]
fn pyhexflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySurface>()?;
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyFlowResult>()?;
    m.add_function(wrap_pyfunction!(arc_length, m)?)?;
    m.add_function(wrap_pyfunction!(arc_length_partials, m)?)?;
    m.add_function(wrap_pyfunction!(scale_metric, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_margin, m)?)?;
    m.add_function(wrap_pyfunction!(is_admissible, m)?)?;
    m.add_function(wrap_pyfunction!(curvature, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_power, m)?)?;
    m.add_function(wrap_pyfunction!(calabi_energy, m)?)?;
    m.add_function(wrap_pyfunction!(potential_energy, m)?)?;
    m.add_function(wrap_pyfunction!(newton_solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_flow, m)?)?;
    Ok(())
}
