//! Python module `spectra_svi`.
//!
//! Matrices cross the boundary as nested lists of Python numbers (complex or
//! real), row-major; block profiles are lists of such matrices.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;

use spectra_svi::harness::{run_grid, write_outputs, ExperimentConfig, HarnessError};
use spectra_svi::mimo::{self, ChannelSet, NetworkTopology};
use spectra_svi::{mirror, BlockProfile, Error, HermitianMatrix, Method, RngStream, SolverConfig, SviProblem};

type Rows = Vec<Vec<Complex64>>;

fn to_py_err(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn harness_err(e: HarnessError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Nested rows to a Hermitian matrix; ragged or non-Hermitian input is an error.
pub fn hermitian_from_rows(rows: &Rows) -> Result<HermitianMatrix, Error> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Shape { rows: n, cols: n, got: bad.len() });
    }
    HermitianMatrix::new(n, rows.iter().flatten().copied().collect())
}

pub fn rows_from_hermitian(a: &HermitianMatrix) -> Rows {
    let n = a.dim();
    (0..n).map(|i| (0..n).map(|j| a.get(i, j)).collect()).collect()
}

fn profile_from_rows(blocks: &[Rows]) -> Result<BlockProfile, Error> {
    Ok(BlockProfile::new(blocks.iter().map(hermitian_from_rows).collect::<Result<_, _>>()?))
}

fn rows_from_profile(p: &BlockProfile) -> Vec<Rows> {
    p.blocks().iter().map(rows_from_hermitian).collect()
}

/// Gibbs state `exp(Y) / tr exp(Y)`.
#[pyfunction]
fn gibbs_map(y: Rows) -> PyResult<Rows> {
    let y = hermitian_from_rows(&y).map_err(to_py_err)?;
    Ok(rows_from_hermitian(&mirror::gibbs_map(&y).map_err(to_py_err)?))
}

/// Mirror image onto `{X ⪰ 0, tr X ≤ p}`.
#[pyfunction]
fn gibbs_map_bounded(y: Rows, p: f64) -> PyResult<Rows> {
    let y = hermitian_from_rows(&y).map_err(to_py_err)?;
    Ok(rows_from_hermitian(&mirror::gibbs_map_bounded(&y, p).map_err(to_py_err)?))
}

/// `tr(X log X − X)`.
#[pyfunction]
fn quantum_entropy(x: Rows) -> PyResult<f64> {
    mirror::quantum_entropy(&hermitian_from_rows(&x).map_err(to_py_err)?).map_err(to_py_err)
}

/// `log tr exp(Y + I)`.
#[pyfunction]
fn conjugate_entropy(y: Rows) -> PyResult<f64> {
    mirror::conjugate_entropy(&hermitian_from_rows(&y).map_err(to_py_err)?).map_err(to_py_err)
}

#[pyfunction]
fn von_neumann_divergence(x: Rows, y: Rows) -> PyResult<f64> {
    let x = hermitian_from_rows(&x).map_err(to_py_err)?;
    let y = hermitian_from_rows(&y).map_err(to_py_err)?;
    mirror::von_neumann_divergence(&x, &y).map_err(to_py_err)
}

#[pyfunction]
fn fenchel_coupling(q: Rows, y: Rows) -> PyResult<f64> {
    let q = hermitian_from_rows(&q).map_err(to_py_err)?;
    let y = hermitian_from_rows(&y).map_err(to_py_err)?;
    mirror::fenchel_coupling(&q, &y).map_err(to_py_err)
}

/// MIMO throughput game on the seven-cell network with freshly drawn channels.
#[pyclass(module = "spectra_svi", frozen)]
struct MimoGame {
    topology: NetworkTopology,
    channels: ChannelSet,
    problem: SviProblem,
}

#[pymethods]
impl MimoGame {
    #[new]
    #[pyo3(signature = (m = 2, n = 2, sigma = 0.0, seed = 0, max_power = 1.0))]
    fn new(m: usize, n: usize, sigma: f64, seed: u64, max_power: f64) -> PyResult<Self> {
        let d = mimo::CANONICAL_DISTANCES.iter().map(|r| r.to_vec()).collect();
        let topology = NetworkTopology::new(d, vec![m; 7], vec![n; 7], max_power).map_err(to_py_err)?;
        let channels = mimo::sample_channels(&topology, &mut RngStream::seed_from_u64(seed));
        let problem = mimo::game_to_svi(&topology, channels.clone(), sigma).map_err(to_py_err)?;
        Ok(Self { topology, channels, problem })
    }

    #[getter]
    fn users(&self) -> usize {
        self.topology.users()
    }

    #[getter]
    fn oracle_bound(&self) -> f64 {
        self.problem.oracle_bound()
    }

    /// Every user at `p/m · I`.
    fn uniform_state(&self) -> Vec<Rows> {
        (0..self.topology.users())
            .map(|i| {
                let m = self.topology.tx_antennas(i);
                rows_from_hermitian(&HermitianMatrix::identity(m).scale(self.topology.max_power() / m as f64))
            })
            .collect()
    }

    /// Channel `H[tx][rx]` (zero-based users), `n_rx × m_tx`.
    fn channel(&self, tx: usize, rx: usize) -> PyResult<Rows> {
        if tx >= self.topology.users() || rx >= self.topology.users() {
            return Err(PyValueError::new_err("user index out of range"));
        }
        let h = self.channels.channel(tx, rx);
        Ok((0..h.rows()).map(|i| (0..h.cols()).map(|j| h.get(i, j)).collect()).collect())
    }

    /// Rate `R_i` of zero-based user `i` (nats).
    fn throughput(&self, state: Vec<Rows>, user: usize) -> PyResult<f64> {
        let x = profile_from_rows(&state).map_err(to_py_err)?;
        mimo::throughput(&self.channels, &x, user).map_err(to_py_err)
    }

    fn strong_gap(&self, state: Vec<Rows>) -> PyResult<f64> {
        let x = profile_from_rows(&state).map_err(to_py_err)?;
        x.check_feasible(self.problem.set()).map_err(to_py_err)?;
        self.problem.strong_gap(&x).map_err(to_py_err)
    }

    /// Runs one solver trajectory; `method` is `am-smd`, `m-smd` or `mel`.
    #[pyo3(signature = (method = "am-smd", iterations = 1000, seed = 0, lam = 0.0, gap_every = 10))]
    fn solve(&self, method: &str, iterations: usize, seed: u64, lam: f64, gap_every: usize) -> PyResult<RunSummary> {
        let method = match method {
            "am-smd" => Method::AmSmd,
            "m-smd" => Method::MSmd,
            "mel" => Method::Mel { lambda: lam },
            other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
        };
        let cfg = SolverConfig::new(method, iterations).gap_every(gap_every).seed(seed);
        let r = spectra_svi::run(&self.problem, &cfg).map_err(to_py_err)?;
        if let Some(e) = r.failure {
            return Err(to_py_err(e));
        }
        Ok(RunSummary { gap_trace: r.gap_trace, final_point: rows_from_profile(&r.final_point) })
    }
}

#[pyclass(module = "spectra_svi", frozen, get_all)]
struct RunSummary {
    /// `(iteration, strong gap)` pairs.
    gap_trace: Vec<(usize, f64)>,
    final_point: Vec<Rows>,
}

#[pymethods]
impl RunSummary {
    #[getter]
    fn final_gap(&self) -> Option<f64> {
        self.gap_trace.last().map(|&(_, g)| g)
    }
}

/// Runs an experiment config (TOML text) and writes its outputs to `out_dir`.
/// Returns the number of gap rows and the number of runs that stopped early.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str, out_dir: &str) -> PyResult<(usize, usize)> {
    let cfg = ExperimentConfig::parse(config, None).map_err(harness_err)?;
    let out = py.detach(|| run_grid(&cfg)).map_err(harness_err)?;
    write_outputs(&cfg, &out, std::path::Path::new(out_dir)).map_err(harness_err)?;
    Ok((out.records.len(), out.failures.len()))
}

#[pymodule]
#[pyo3(name = "spectra_svi")]
fn spectra_svi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gibbs_map, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_map_bounded, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(von_neumann_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(fenchel_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<MimoGame>()?;
    m.add_class::<RunSummary>()?;
    Ok(())
}
