//! Python bindings: model parameters, states, circuits, compilers, noise metrics and experiments.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qmpso::pipeline::{self, QmpsoSchedule, RunConfig};
use qmpso::{
    mps, CompileReport, ComplexTensor, DenseHamiltonian, Error, Init, NoiseModel, NoisyState, StaircaseCircuit, SweepConfig, TebdOptions,
};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for qmpso::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Transverse-field Ising chain `H = -J Σ Z Z - h Σ X` with Trotter step `dt`.
#[pyclass(name = "Tfim", frozen, from_py_object)]
#[derive(Clone)]
struct PyTfim(qmpso::TfimParams);

#[pymethods]
impl PyTfim {
    #[new]
    #[pyo3(signature = (sites, coupling = 1.0, field = 1.0, dt = 0.01))]
    fn new(sites: usize, coupling: f64, field: f64, dt: f64) -> PyResult<Self> {
        let p = qmpso::TfimParams { num_sites: sites, coupling, field, dt };
        p.validate().py()?;
        Ok(Self(p))
    }

    #[getter]
    fn sites(&self) -> usize {
        self.0.num_sites
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt
    }

    fn with_dt(&self, dt: f64) -> Self {
        Self(self.0.with_dt(dt))
    }

    fn __repr__(&self) -> String {
        format!("Tfim(sites={}, coupling={}, field={}, dt={})", self.0.num_sites, self.0.coupling, self.0.field, self.0.dt)
    }
}

#[pyclass(name = "Statevector", frozen, from_py_object)]
#[derive(Clone)]
struct PyStatevector(qmpso::Statevector);

#[pymethods]
impl PyStatevector {
    #[new]
    fn new(sites: usize, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self(qmpso::Statevector::new(sites, amplitudes).py()?))
    }

    /// `|0101...>`.
    #[staticmethod]
    fn neel(sites: usize) -> PyResult<Self> {
        Ok(Self(qmpso::Statevector::from_product(&qmpso::neel_product_state(sites)).py()?))
    }

    #[getter]
    fn sites(&self) -> usize {
        self.0.num_sites()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn fidelity(&self, other: &PyStatevector) -> PyResult<f64> {
        self.0.fidelity(&other.0).py()
    }

    fn expectation_z(&self, site: usize) -> PyResult<f64> {
        self.0.expectation_z(site).py()
    }

    fn magnetization(&self) -> Vec<f64> {
        qmpso::local_magnetization(&self.0)
    }

    #[pyo3(signature = (cut = None))]
    fn entropy(&self, cut: Option<usize>) -> PyResult<f64> {
        self.0.entropy_vn(cut.unwrap_or(self.0.num_sites() / 2)).py()
    }
}

#[pyclass(name = "Mps", frozen, from_py_object)]
#[derive(Clone)]
struct PyMps(qmpso::MatrixProductState);

#[pymethods]
impl PyMps {
    #[staticmethod]
    fn neel(sites: usize, chi: usize) -> PyResult<Self> {
        Ok(Self(qmpso::MatrixProductState::from_product(&qmpso::neel_product_state(sites), chi).py()?))
    }

    #[staticmethod]
    fn from_statevector(psi: &PyStatevector, chi: usize) -> PyResult<Self> {
        Ok(Self(qmpso::MatrixProductState::from_statevector(&psi.0, chi).py()?))
    }

    #[getter]
    fn sites(&self) -> usize {
        self.0.num_sites()
    }

    fn bond_dims(&self) -> Vec<usize> {
        self.0.bond_dims()
    }

    #[pyo3(signature = (cut = None))]
    fn entropy(&self, cut: Option<usize>) -> PyResult<f64> {
        self.0.entropy_vn(cut.unwrap_or(self.0.num_sites() / 2)).py()
    }

    fn overlap(&self, other: &PyMps) -> PyResult<Complex64> {
        self.0.overlap(&other.0).py()
    }

    fn to_statevector(&self) -> PyResult<PyStatevector> {
        Ok(PyStatevector(self.0.to_statevector().py()?))
    }
}

#[pyclass(name = "Circuit", frozen, from_py_object)]
#[derive(Clone)]
struct PyCircuit(StaircaseCircuit);

#[pymethods]
impl PyCircuit {
    /// Staircase of `layers` layers; identity gates, or seeded Haar-random gates when `seed` is given.
    #[new]
    #[pyo3(signature = (sites, layers, seed = None))]
    fn new(sites: usize, layers: usize, seed: Option<u64>) -> PyResult<Self> {
        let init = seed.map_or(Init::Identity, Init::RandomUnitary);
        Ok(Self(StaircaseCircuit::new_staircase(sites, layers, init).py()?))
    }

    #[staticmethod]
    fn trotter(model: &PyTfim, steps: usize) -> PyResult<Self> {
        Ok(Self(StaircaseCircuit::trotter(&model.0, steps).py()?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self(StaircaseCircuit::deserialize(text.as_bytes()).py()?))
    }

    fn to_json(&self) -> String {
        String::from_utf8(self.0.serialize()).expect("JSON is UTF-8")
    }

    #[getter]
    fn sites(&self) -> usize {
        self.0.num_sites()
    }

    #[getter]
    fn num_layers(&self) -> usize {
        self.0.num_layers()
    }

    #[getter]
    fn gate_count(&self) -> usize {
        self.0.gate_count()
    }

    fn apply(&self, psi: &PyStatevector) -> PyResult<PyStatevector> {
        Ok(PyStatevector(self.0.apply_to_statevector(&psi.0).py()?))
    }

    fn __repr__(&self) -> String {
        format!("Circuit(sites={}, layers={}, gates={})", self.0.num_sites(), self.0.num_layers(), self.0.gate_count())
    }
}

fn report_dict<'py>(py: Python<'py>, r: &CompileReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("initial_fidelity", r.initial_fidelity)?;
    d.set_item("final_fidelity", r.final_fidelity)?;
    d.set_item("fidelity_per_sweep", r.fidelity_per_sweep.clone())?;
    d.set_item("sweeps_used", r.sweeps_used)?;
    d.set_item("converged", r.converged)?;
    d.set_item("min_update_gain", r.min_update_gain)?;
    d.set_item("overlap", Complex64::new(r.overlap[0], r.overlap[1]))?;
    Ok(d)
}

fn sweep_config(max_sweeps: usize, delta: f64, warm_start: Option<&PyCircuit>) -> SweepConfig {
    SweepConfig { max_sweeps, convergence_delta: delta, warm_start: warm_start.map(|c| c.0.clone()) }
}

/// TEBD quench of the Néel state. Returns `(times, entropies, final_state)`.
#[pyfunction]
#[pyo3(signature = (model, chi, t_final, keep_every = 10))]
fn tebd(model: &PyTfim, chi: usize, t_final: f64, keep_every: usize) -> PyResult<(Vec<f64>, Vec<f64>, PyMps)> {
    let psi0 = qmpso::MatrixProductState::from_product(&qmpso::neel_product_state(model.0.num_sites), chi).py()?;
    let res = mps::tebd_evolve_with(&psi0, &model.0, t_final, &TebdOptions { keep_every, cut: None }).py()?;
    let last = PyMps(res.final_state().clone());
    Ok((res.trace.times, res.trace.entropy, last))
}

/// First time the half-chain entropy of a `chi` TEBD run comes within `margin` bits of `log2 chi`.
#[pyfunction]
#[pyo3(signature = (times, entropies, chi, margin = 0.05))]
fn t_max_detect(times: Vec<f64>, entropies: Vec<f64>, chi: usize, margin: f64) -> PyResult<f64> {
    let trace = qmpso::EntropyTrace { times, entropy: entropies, cut: 0 };
    mps::t_max_detect_with(&trace, chi, margin).py()
}

/// Compile a staircase circuit with `layers` layers that prepares `target` from the Néel state.
#[pyfunction]
#[pyo3(signature = (target, layers, max_sweeps = 2000, delta = 1e-8, warm_start = None))]
fn qmps_compile<'py>(
    py: Python<'py>,
    target: &PyMps,
    layers: usize,
    max_sweeps: usize,
    delta: f64,
    warm_start: Option<&PyCircuit>,
) -> PyResult<(PyCircuit, Bound<'py, PyDict>)> {
    let start = qmpso::MatrixProductState::from_product(&qmpso::neel_product_state(target.0.num_sites()), 1).py()?;
    let cfg = sweep_config(max_sweeps, delta, warm_start);
    let (c, r) = py.detach(|| qmpso::qmps_compile(&target.0, &start, layers, &cfg)).py()?;
    Ok((PyCircuit(c), report_dict(py, &r)?))
}

/// Compile a staircase circuit with `layers` layers that approximates the Trotter propagator at `t`.
#[pyfunction]
#[pyo3(signature = (model, t, layers, max_sweeps = 1000, delta = 1e-8, warm_start = None))]
fn qmpo_compile<'py>(
    py: Python<'py>,
    model: &PyTfim,
    t: f64,
    layers: usize,
    max_sweeps: usize,
    delta: f64,
    warm_start: Option<&PyCircuit>,
) -> PyResult<(PyCircuit, Bound<'py, PyDict>)> {
    let cfg = sweep_config(max_sweeps, delta, warm_start);
    let (c, r) = py.detach(|| qmpso::qmpo_compile(&model.0, t, layers, &cfg)).py()?;
    Ok((PyCircuit(c), report_dict(py, &r)?))
}

#[pyfunction]
#[pyo3(signature = (qmps, qmpo, t_max_mps, t_max_mpo, t, dt = 0.01, qmpo_rest = None))]
fn compose_qmpso(
    qmps: &PyCircuit,
    qmpo: &PyCircuit,
    t_max_mps: f64,
    t_max_mpo: f64,
    t: f64,
    dt: f64,
    qmpo_rest: Option<&PyCircuit>,
) -> PyResult<PyCircuit> {
    let schedule = QmpsoSchedule {
        t_max_mps,
        t_max_mpo,
        n_l_mps: qmps.0.num_layers(),
        n_l_mpo: qmpo.0.num_layers(),
        dt,
        target_t: t,
    };
    Ok(PyCircuit(pipeline::compose_qmpso(&schedule, &qmps.0, &qmpo.0, qmpo_rest.map(|c| &c.0)).py()?))
}

/// Exact propagation of the Néel state by dense diagonalization.
#[pyfunction]
fn exact_state(model: &PyTfim, t: f64) -> PyResult<PyStatevector> {
    let h = DenseHamiltonian::new(&model.0).py()?;
    let neel = qmpso::Statevector::from_product(&qmpso::neel_product_state(model.0.num_sites)).py()?;
    Ok(PyStatevector(qmpso::exact_propagate(&neel, &h, t).py()?))
}

/// Néel state evolved by the first-order Trotter circuit with the model's `dt`.
#[pyfunction]
fn trotter_state(model: &PyTfim, t: f64) -> PyResult<PyStatevector> {
    Ok(PyStatevector(qmpso::fine_trotter_reference(&model.0, t).py()?))
}

#[pyfunction]
fn alpha(epsilon: f64, gate_count: usize) -> PyResult<f64> {
    Ok(NoiseModel::new(epsilon).py()?.alpha(gate_count))
}

/// Fidelity of `alpha |psi><psi| + (1 - alpha) 1/2^L` with the pure `reference`.
#[pyfunction]
fn noisy_fidelity(psi: &PyStatevector, alpha: f64, reference: &PyStatevector) -> PyResult<f64> {
    let rho = NoisyState::new(psi.0.clone(), alpha).py()?;
    qmpso::noisy_fidelity(&rho, &reference.0).py()
}

#[pyfunction]
fn noisy_expectation_z(psi: &PyStatevector, alpha: f64, site: usize) -> PyResult<f64> {
    let rho = NoisyState::new(psi.0.clone(), alpha).py()?;
    qmpso::noisy_expectation_z(&rho, site).py()
}

/// Operator entanglement entropy of the noisy state across `cut` (half chain by default).
#[pyfunction]
#[pyo3(signature = (psi, alpha, cut = None))]
fn operator_entropy(psi: &PyStatevector, alpha: f64, cut: Option<usize>) -> PyResult<f64> {
    let l = psi.0.num_sites();
    let rho = NoisyState::new(psi.0.clone(), alpha).py()?.density_matrix().py()?;
    qmpso::operator_entropy(&rho, l, cut.unwrap_or(l / 2)).py()
}

#[pyfunction]
fn infidelity_per_site(fidelity: f64, sites: usize) -> PyResult<f64> {
    qmpso::infidelity_per_site(fidelity, sites).py()
}

#[pyfunction]
fn max_useful_layers(sites: usize) -> usize {
    qmpso::max_useful_layers(sites)
}

/// Canonical `(θ_xx, θ_yy, θ_zz)` of a 4x4 unitary given row-major.
#[pyfunction]
fn kak_angles(unitary: Vec<Complex64>) -> PyResult<(f64, f64, f64)> {
    let u = ComplexTensor::matrix(4, 4, unitary).py()?;
    let [a, b, c] = qmpso::kak_decompose(&u).py()?.canonical_angles;
    Ok((a, b, c))
}

/// Run a figure experiment; `overrides` is a JSON object merged over the preset. Returns the written paths.
#[pyfunction]
#[pyo3(signature = (name, out_dir, overrides = None))]
fn run_experiment(py: Python<'_>, name: &str, out_dir: PathBuf, overrides: Option<&str>) -> PyResult<Vec<String>> {
    let doc: serde_json::Value = match overrides {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => serde_json::json!({}),
    };
    let cfg = RunConfig::from_overrides(name, &doc).py()?;
    let files = py.detach(|| pipeline::run_experiment(&cfg, &out_dir)).py()?;
    Ok(files.into_iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
fn pyqmpso(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTfim>()?;
    m.add_class::<PyStatevector>()?;
    m.add_class::<PyMps>()?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(tebd, m)?)?;
    m.add_function(wrap_pyfunction!(t_max_detect, m)?)?;
    m.add_function(wrap_pyfunction!(qmps_compile, m)?)?;
    m.add_function(wrap_pyfunction!(qmpo_compile, m)?)?;
    m.add_function(wrap_pyfunction!(compose_qmpso, m)?)?;
    m.add_function(wrap_pyfunction!(exact_state, m)?)?;
    m.add_function(wrap_pyfunction!(trotter_state, m)?)?;
    m.add_function(wrap_pyfunction!(alpha, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_expectation_z, m)?)?;
    m.add_function(wrap_pyfunction!(operator_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(infidelity_per_site, m)?)?;
    m.add_function(wrap_pyfunction!(max_useful_layers, m)?)?;
    m.add_function(wrap_pyfunction!(kak_angles, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("EXPERIMENTS", pipeline::EXPERIMENTS.to_vec())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_python_exception_kinds() {
        Python::initialize();
        Python::attach(|py| {
            assert!(err(Error::Validation("x".into())).is_instance_of::<PyValueError>(py));
            assert!(err(Error::Io(std::io::Error::other("x"))).is_instance_of::<PyIOError>(py));
        });
    }
}
