//! Python bindings: run the solver, query single pieces of it, and run the
//! built-in self-checks. Matrices cross the boundary as nested lists.

use mcal::driver::{ground_energy as pair_ground_energy, HistoryRow, Mcal, McalConfig, RunReport};
use mcal::fem1d::Mesh1D;
use mcal::moments::MomentFamily;
use mcal::pair_space::{Kernel, PairSystem};
use mcal::sdp::{self, SdpOptions, SdpProblem};
use mcal::selftest::{run as run_checks, Suite};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: mcal::Error) -> PyErr {
    match e {
        mcal::Error::InvalidArgument(_)
        | mcal::Error::NonFinite(_)
        | mcal::Error::DimensionMismatch(_)
        | mcal::Error::DependentConstraints(_)
        | mcal::Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn kernel_from(name: &str, eps: f64) -> Result<Kernel, String> {
    match name {
        "softcore" => Ok(Kernel::SoftCoulomb { eps }),
        "exact" => Ok(Kernel::Coulomb),
        "none" => Ok(Kernel::Constant(0.0)),
        other => Err(format!("unknown kernel `{other}`, expected softcore, exact or none")),
    }
}

fn square(rows: Vec<Vec<f64>>, what: &str) -> Result<DMatrix<f64>, String> {
    let k = rows.len();
    if let Some(i) = rows.iter().position(|r| r.len() != k) {
        return Err(format!("{what}: row {i} has {} entries, expected {k}", rows[i].len()));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

fn nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Solver settings. Keyword names follow the command line flags.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    #[pyo3(get, set)]
    half_width: f64,
    #[pyo3(get, set)]
    intervals: usize,
    #[pyo3(get, set)]
    moments: usize,
    #[pyo3(get, set)]
    qvec: usize,
    #[pyo3(get, set)]
    kernel: String,
    #[pyo3(get, set)]
    eps: f64,
    #[pyo3(get, set)]
    tol_sdp: f64,
    #[pyo3(get, set)]
    tol_stop: f64,
    #[pyo3(get, set)]
    drop_tol: f64,
    #[pyo3(get, set)]
    max_iters: usize,
    #[pyo3(get, set)]
    seed: u64,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (
        half_width = 10.0, intervals = 100, moments = 20, qvec = 4, kernel = "softcore",
        eps = 1.0, tol_sdp = 1e-9, tol_stop = 1e-6, drop_tol = None, max_iters = 100, seed = None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        half_width: f64,
        intervals: usize,
        moments: usize,
        qvec: usize,
        kernel: &str,
        eps: f64,
        tol_sdp: f64,
        tol_stop: f64,
        drop_tol: Option<f64>,
        max_iters: usize,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let d = McalConfig::default();
        let cfg = Self {
            half_width,
            intervals,
            moments,
            qvec,
            kernel: kernel.to_string(),
            eps,
            tol_sdp,
            tol_stop,
            drop_tol: drop_tol.unwrap_or(d.drop_tol),
            max_iters,
            seed: seed.unwrap_or(d.seed),
        };
        cfg.to_config()?;
        Ok(cfg)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(half_width={}, intervals={}, moments={}, qvec={}, kernel={:?}, eps={}, tol_sdp={:e}, tol_stop={:e}, max_iters={})",
            self.half_width,
            self.intervals,
            self.moments,
            self.qvec,
            self.kernel,
            self.eps,
            self.tol_sdp,
            self.tol_stop,
            self.max_iters
        )
    }
}

impl PyConfig {
    fn to_config(&self) -> PyResult<McalConfig> {
        let config = McalConfig {
            half_width: self.half_width,
            intervals: self.intervals,
            moments: self.moments,
            q_vec: self.qvec,
            kernel: kernel_from(&self.kernel, self.eps).map_err(PyValueError::new_err)?,
            tol_sdp: self.tol_sdp,
            tol_stop: self.tol_stop,
            drop_tol: self.drop_tol,
            max_iters: self.max_iters,
            seed: self.seed,
            ..McalConfig::default()
        };
        config.validate().map_err(to_py)?;
        Ok(config)
    }
}

/// Outcome of a solver run.
#[pyclass(name = "Report", frozen, skip_from_py_object)]
struct PyReport {
    /// `converged`, `max-iterations` or `failed`.
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    error: Option<String>,
    #[pyo3(get)]
    upper: f64,
    #[pyo3(get)]
    lower: f64,
    #[pyo3(get)]
    bracket_width: f64,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    pool_size: usize,
    /// Hat coefficients of the last potential.
    #[pyo3(get)]
    potential: Vec<f64>,
    /// Mesh nodes, including both endpoints.
    #[pyo3(get)]
    nodes: Vec<f64>,
    #[pyo3(get)]
    density: Vec<f64>,
    #[pyo3(get)]
    target_density: Vec<f64>,
    #[pyo3(get)]
    moment_residuals: Vec<f64>,
    #[pyo3(get)]
    wall_time: f64,
    rows: Vec<HistoryRow>,
}

#[pymethods]
impl PyReport {
    /// One tuple `(n, F_n, Ftilde_n, E_vn, K_n, sdp_gap, lower_bound)` per iteration.
    #[getter]
    fn history(&self) -> Vec<(usize, f64, f64, f64, usize, f64, f64)> {
        self.rows
            .iter()
            .map(|r| {
                (
                    r.n,
                    r.dual_value,
                    r.primal_value,
                    r.defect,
                    r.pool_size,
                    r.sdp_gap,
                    r.lower_bound,
                )
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(status={:?}, iterations={}, upper={}, lower={}, bracket_width={:e})",
            self.status, self.iterations, self.upper, self.lower, self.bracket_width
        )
    }
}

impl PyReport {
    fn new(mcal: &Mcal, report: RunReport) -> Self {
        let nodes = mcal.system.mesh.nodes().to_vec();
        Self {
            status: report.status.as_str().to_string(),
            error: report.error,
            upper: report.upper,
            lower: report.lower,
            bracket_width: report.bracket_width,
            iterations: report.state.iteration,
            pool_size: report.state.pool.len(),
            potential: report.state.potential.iter().copied().collect(),
            density: nodes.iter().map(|&x| report.density.eval(x)).collect(),
            target_density: nodes.iter().map(|&x| mcal.target.rho.eval(x)).collect(),
            nodes,
            moment_residuals: report.moment_residuals,
            wall_time: report.wall_time,
            rows: report.state.history,
        }
    }
}

/// Runs the solver on the built-in target density. The GIL is released
/// while it works.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn run(py: Python<'_>, config: Option<PyConfig>) -> PyResult<PyReport> {
    let config = match config {
        Some(c) => c.to_config()?,
        None => McalConfig::default(),
    };
    py.detach(|| {
        let mcal = Mcal::new(config)?;
        let report = mcal.run()?;
        Ok(PyReport::new(&mcal, report))
    })
    .map_err(to_py)
}

/// Target moments `∫ φ_m ρ` of the built-in density.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn target_moments(config: Option<PyConfig>) -> PyResult<Vec<f64>> {
    let config = match config {
        Some(c) => c.to_config()?,
        None => McalConfig::default(),
    };
    let mcal = Mcal::new(config).map_err(to_py)?;
    Ok(mcal.b.iter().copied().collect())
}

/// Lowest eigenvalue of `H - Σ_i v(x_i)` where `v` is the hat combination
/// with coefficients `potential` on `len(potential)` equally spaced nodes.
#[pyfunction]
#[pyo3(signature = (potential, half_width = 10.0, intervals = 100, kernel = "softcore", eps = 1.0))]
fn ground_energy(potential: Vec<f64>, half_width: f64, intervals: usize, kernel: &str, eps: f64) -> PyResult<f64> {
    let kernel = kernel_from(kernel, eps).map_err(PyValueError::new_err)?;
    let family = MomentFamily::new(half_width, potential.len()).map_err(to_py)?;
    let mesh = Mesh1D::new(half_width, intervals).map_err(to_py)?;
    let system = PairSystem::new(mesh, Some(kernel)).map_err(to_py)?;
    pair_ground_energy(&system, |x| family.combine(&potential, x), &family.nodes()).map_err(to_py)
}

/// Solves `min ⟨C, X⟩` subject to `⟨A_j, X⟩ = b_j`, `X ⪰ 0`.
///
/// Returns a dict with `status`, `primal_value`, `dual_value`, `gap`, `x`,
/// `y` and `iterations`.
#[pyfunction]
#[pyo3(signature = (c, a, b, tol = 1e-9, max_iter = 200))]
fn solve_sdp<'py>(
    py: Python<'py>,
    c: Vec<Vec<f64>>,
    a: Vec<Vec<Vec<f64>>>,
    b: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let c = square(c, "C").map_err(PyValueError::new_err)?;
    let a = a
        .into_iter()
        .enumerate()
        .map(|(j, m)| square(m, &format!("A[{j}]")))
        .collect::<Result<Vec<_>, _>>()
        .map_err(PyValueError::new_err)?;
    let problem = SdpProblem::new(c, a, DVector::from_vec(b)).map_err(to_py)?;
    let opts = SdpOptions {
        tol,
        max_iter,
        ..SdpOptions::default()
    };
    let sol = py.detach(|| sdp::solve(&problem, &opts)).map_err(to_py)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("status", format!("{:?}", sol.status))?;
    out.set_item("primal_value", sol.primal_value)?;
    out.set_item("dual_value", sol.dual_value)?;
    out.set_item("gap", sol.gap)?;
    out.set_item("iterations", sol.iterations)?;
    out.set_item("x", nested(&sol.x))?;
    out.set_item("y", sol.y.iter().copied().collect::<Vec<_>>())?;
    Ok(out)
}

/// Runs one built-in self-check suite (`sdp`, `eigen`, `sparsify` or `fem`)
/// and returns `(name, passed, detail)` per check.
#[pyfunction]
fn selftest(py: Python<'_>, suite: &str) -> PyResult<Vec<(String, bool, String)>> {
    let suite = match suite {
        "sdp" => Suite::Sdp,
        "eigen" => Suite::Eigen,
        "sparsify" => Suite::Sparsify,
        "fem" => Suite::Fem,
        other => return Err(PyValueError::new_err(format!("unknown suite `{other}`"))),
    };
    let checks = py.detach(|| run_checks(suite));
    Ok(checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

#[pymodule]
fn mcal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(target_moments, m)?)?;
    m.add_function(wrap_pyfunction!(ground_energy, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sdp, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_names() {
        assert_eq!(kernel_from("softcore", 0.5), Ok(Kernel::SoftCoulomb { eps: 0.5 }));
        assert_eq!(kernel_from("exact", 1.0), Ok(Kernel::Coulomb));
        assert!(kernel_from("yukawa", 1.0).is_err());
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        assert!(square(vec![vec![1.0, 2.0], vec![3.0]], "C").is_err());
        let m = square(vec![vec![1.0, 2.0], vec![3.0, 4.0]], "C").unwrap();
        assert_eq!(nested(&m), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }
}
