//! Python bindings for `tqk`.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tqk::feature_map::{Entangler, FeatureMap, FeatureMapLayout, RotationPattern};
use tqk::kernel::{encode_all, kernel_from_states, KernelMode};
use tqk::sim::{grover_reflections, prepare_real_amplitudes, Statevector};

fn err(e: tqk::Error) -> PyErr {
    match e {
        tqk::Error::Validation(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("kernel must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// Trainable layout: `rotation` is "y" or "zyz", `entangler` is "cz",
/// "cnot" or "none".
#[pyclass(name = "FeatureMap", frozen)]
struct PyFeatureMap {
    inner: FeatureMapLayout,
}

#[pymethods]
impl PyFeatureMap {
    #[new]
    #[pyo3(signature = (n_qubits, layers, rotation = "y", entangler = "cz"))]
    fn new(n_qubits: usize, layers: usize, rotation: &str, entangler: &str) -> PyResult<Self> {
        let rotation = match rotation {
            "y" => RotationPattern::Y,
            "zyz" => RotationPattern::Zyz,
            r => return Err(PyValueError::new_err(format!("unknown rotation {r:?}"))),
        };
        let entangler = match entangler {
            "cz" => Entangler::LinearCz,
            "cnot" => Entangler::LinearCnot,
            "none" => Entangler::None,
            e => return Err(PyValueError::new_err(format!("unknown entangler {e:?}"))),
        };
        Ok(PyFeatureMap { inner: FeatureMapLayout::new(n_qubits, layers, rotation, entangler) })
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    /// Amplitudes of `|ψ(x; θ)>` as complex numbers.
    fn encode(&self, x: Vec<f64>, theta: Vec<f64>) -> PyResult<Vec<num_complex::Complex64>> {
        Ok(self.inner.encode(&x, &theta).map_err(err)?.amplitudes().to_vec())
    }

    /// Exact kernel matrix `|<ψ_i|ψ_j>|^power`.
    #[pyo3(signature = (xs, theta, power = 2))]
    fn kernel_matrix(&self, xs: Vec<Vec<f64>>, theta: Vec<f64>, power: u32) -> PyResult<Vec<Vec<f64>>> {
        let states = encode_all(&self.inner, &theta, &xs).map_err(err)?;
        Ok(to_rows(&kernel_from_states(&states, power, KernelMode::Exact).map_err(err)?.entries))
    }

    fn clustering_loss(&self, theta: Vec<f64>, xs: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
        tqk::feature_map::clustering_loss(&self.inner, &theta, &xs, &labels).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Bundled IRIS as `(features, labels, class_names)`, min-max scaled to
/// `[0, π]` unless `raw` is set.
#[pyfunction]
#[pyo3(signature = (raw = false))]
fn iris(raw: bool) -> PyResult<(Vec<Vec<f64>>, Vec<usize>, Vec<String>)> {
    let mut ds = tqk::data::iris().map_err(err)?;
    if !raw {
        ds = tqk::data::normalize(&ds, tqk::data::NormalizationMethod::angle()).map_err(err)?;
    }
    Ok((ds.features, ds.labels, ds.class_names))
}

/// Trains the layout on IRIS from θ = 0. Returns `(theta, initial_loss, best_loss)`.
#[pyfunction]
#[pyo3(signature = (layers = 2, per_class = 10, seed = 0, budget = 500))]
fn train_tqfm(layers: usize, per_class: usize, seed: u64, budget: usize) -> PyResult<(Vec<f64>, f64, f64)> {
    let ds = tqk::data::normalize(&tqk::data::iris().map_err(err)?, tqk::data::NormalizationMethod::angle())
        .map_err(err)?;
    let layout = FeatureMapLayout::new(4, layers, RotationPattern::Y, Entangler::LinearCz);
    let t = tqk::experiments::train_tqfm(&ds, layout, per_class, seed, budget, seed).map_err(err)?;
    Ok((t.theta, t.initial_loss, t.trace.best_value))
}

/// Exact dual SVM. Returns `(alpha, bias)`.
#[pyfunction]
fn classical_dual_solve(kernel: Vec<Vec<f64>>, labels: Vec<i8>, gamma: f64) -> PyResult<(Vec<f64>, f64)> {
    let s = tqk::svm::classical_dual_solve(&matrix(&kernel)?, &labels, gamma).map_err(err)?;
    Ok((s.alpha, s.bias))
}

/// Least-squares SVM. Returns `(alpha, bias)`.
#[pyfunction]
fn lsqsvm_solve(kernel: Vec<Vec<f64>>, labels: Vec<i8>, gamma: f64) -> PyResult<(Vec<f64>, f64)> {
    let s = tqk::svm::lsqsvm_solve(&matrix(&kernel)?, &labels, gamma).map_err(err)?;
    Ok((s.alpha, s.b))
}

/// Variational SVM in exact mode. Returns `(alpha, support_mask)`.
#[pyfunction]
#[pyo3(signature = (kernel, labels, gamma = 10.0, penalty = 10.0, seed = 0))]
fn train_svqsvm(
    kernel: Vec<Vec<f64>>,
    labels: Vec<i8>,
    gamma: f64,
    penalty: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<bool>)> {
    let svm = tqk::kernel::svm_matrix_from_entries(&matrix(&kernel)?, &labels, gamma).map_err(err)?;
    let m = tqk::svm::train_svqsvm(&svm, penalty, &tqk::svm::SvqsvmConfig::default(), seed).map_err(err)?;
    Ok((m.alpha, m.support_mask))
}

/// Probabilities after `iterations` amplification rounds on the real state
/// `amplitudes` with the given marked basis states.
#[pyfunction]
fn grover_probabilities(amplitudes: Vec<f64>, marked: Vec<bool>, iterations: usize) -> PyResult<Vec<f64>> {
    let n = amplitudes.len().trailing_zeros() as usize;
    let qubits: Vec<usize> = (0..n).collect();
    let prep = prepare_real_amplitudes(n, &qubits, &amplitudes).map_err(err)?;
    let state = Statevector::from_real(&amplitudes).map_err(err)?;
    Ok(grover_reflections(&state, &marked, &prep, iterations).map_err(err)?.probabilities())
}

#[pyfunction]
fn estimate_iteration_range(slots: usize) -> PyResult<(usize, usize)> {
    let r = tqk::multiclass::estimate_iteration_range(slots).map_err(err)?;
    Ok((r.r_min, r.r_max))
}

/// Runs an experiment from a JSON config string and returns the manifest
/// as JSON.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let config: tqk::cli::RunConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let manifest = tqk::cli::run(&config).map_err(err)?;
    serde_json::to_string(&manifest).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn tqk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeatureMap>()?;
    m.add_function(wrap_pyfunction!(iris, m)?)?;
    m.add_function(wrap_pyfunction!(train_tqfm, m)?)?;
    m.add_function(wrap_pyfunction!(classical_dual_solve, m)?)?;
    m.add_function(wrap_pyfunction!(lsqsvm_solve, m)?)?;
    m.add_function(wrap_pyfunction!(train_svqsvm, m)?)?;
    m.add_function(wrap_pyfunction!(grover_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_iteration_range, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
