//! Python bindings for `randcorr`.
//!
//! Structured results (verdicts, experiments, reports) are returned as plain
//! dictionaries decoded from the same JSON the command-line tool prints.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use randcorr::correlations as corr;
use randcorr::format::{self, StateSpec};
use randcorr::{qudit, shotsim, states, witness};
use randcorr::{BoundMode, ConfidenceLevel, ExperimentConfig, SettingTuple, Shots, Sidedness};
use serde::Serialize;

fn err(e: randcorr::Error) -> PyErr {
    match e {
        randcorr::Error::NumericDomain(_) | randcorr::Error::ImaginaryResidue { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn shots(k: Option<u64>) -> Shots {
    k.map_or(Shots::Infinite, Shots::Finite)
}

fn confidence(p: f64, one_sided: bool) -> PyResult<ConfidenceLevel> {
    let side = if one_sided { Sidedness::OneSided } else { Sidedness::TwoSided };
    ConfidenceLevel::with_sidedness(p, side).map_err(err)
}

/// A pure or mixed multi-qubit (or qudit) state.
#[pyclass(name = "State", module = "randcorr_py", frozen)]
struct PyState {
    inner: randcorr::State,
}

#[pymethods]
impl PyState {
    #[staticmethod]
    fn ghz(n: usize) -> PyResult<Self> {
        Ok(Self { inner: states::make_ghz(n).map_err(err)?.into() })
    }

    #[staticmethod]
    fn bell() -> Self {
        Self { inner: states::make_bell().into() }
    }

    /// Product of single-qubit pure states with the given Bloch vectors.
    #[staticmethod]
    fn product(bloch_vectors: Vec<[f64; 3]>) -> PyResult<Self> {
        Ok(Self { inner: states::make_product_state(&bloch_vectors).map_err(err)?.into() })
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed=0))]
    fn haar(n: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: states::haar_random_pure(n, seed).map_err(err)?.into() })
    }

    /// Qudit states: Haar-random pure state with the given local dimensions.
    #[staticmethod]
    #[pyo3(signature = (local_dims, seed=0))]
    fn haar_qudits(local_dims: Vec<usize>, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: states::haar_random_pure_dims(&local_dims, seed).map_err(err)?.into() })
    }

    /// Parses the JSON state format used by the command-line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = format::parse_state_json(text).map_err(err)?;
        Ok(Self { inner: spec.build().map_err(err)? })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&StateSpec::from_state(&self.inner)).expect("state spec is serializable")
    }

    /// `eps * self + (1 - eps) * white noise`.
    fn with_noise(&self, epsilon: f64) -> PyResult<Self> {
        Ok(Self { inner: states::mix_with_white_noise(&self.inner, epsilon).map_err(err)?.into() })
    }

    #[pyo3(signature = (seed=0))]
    fn randomly_rotated(&self, seed: u64) -> PyResult<Self> {
        let rot = states::LocalRotationSet::haar_random(self.inner.local_dims(), seed);
        Ok(Self { inner: states::apply_local_rotations(&self.inner, &rot).map_err(err)? })
    }

    #[getter]
    fn num_parties(&self) -> usize {
        self.inner.num_parties()
    }

    #[getter]
    fn local_dims(&self) -> Vec<usize> {
        self.inner.local_dims().to_vec()
    }

    #[getter]
    fn is_pure(&self) -> bool {
        matches!(self.inner, randcorr::State::Pure(_))
    }

    fn tensor(&self) -> PyResult<PyCorrelationTensor> {
        Ok(PyCorrelationTensor { inner: corr::correlation_tensor(&self.inner).map_err(err)? })
    }

    fn correlation_length(&self) -> PyResult<f64> {
        Ok(corr::correlation_tensor(&self.inner).map_err(err)?.length())
    }

    fn random_correlations(&self) -> PyResult<f64> {
        Ok(corr::correlation_tensor(&self.inner).map_err(err)?.random_correlations())
    }

    /// Correlation length over Gell-Mann generators with the calibrated scale.
    fn qudit_correlation_length(&self) -> PyResult<f64> {
        let bases = self
            .inner
            .local_dims()
            .iter()
            .map(|&d| qudit::gellmann_basis(d, qudit::calibrated_scale(d)))
            .collect::<randcorr::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(qudit::qudit_correlation_tensor(&self.inner, &bases).map_err(err)?.length())
    }

    fn __repr__(&self) -> String {
        let kind = if self.is_pure() { "pure" } else { "mixed" };
        format!("State({kind}, local_dims={:?})", self.inner.local_dims())
    }
}

/// Correlation tensor `T_{j1..jN}` with axes ordered x, y, z.
#[pyclass(name = "CorrelationTensor", module = "randcorr_py", frozen)]
struct PyCorrelationTensor {
    inner: corr::CorrelationTensor,
}

#[pymethods]
impl PyCorrelationTensor {
    #[getter]
    fn num_parties(&self) -> usize {
        self.inner.num_parties()
    }

    #[getter]
    fn entries(&self) -> Vec<f64> {
        self.inner.entries().to_vec()
    }

    /// Entry by letter label such as `"xyz"`.
    fn get(&self, label: &str) -> PyResult<f64> {
        self.inner.get_label(label).ok_or_else(|| PyValueError::new_err(format!("bad index label `{label}`")))
    }

    /// Correlation `E(u)` for one unit Bloch vector per party.
    fn value(&self, directions: Vec<[f64; 3]>) -> PyResult<f64> {
        let u = SettingTuple::from_components(&directions).map_err(err)?;
        self.inner.value(&u).map_err(err)
    }

    fn length(&self) -> f64 {
        self.inner.length()
    }

    fn random_correlations(&self) -> f64 {
        self.inner.random_correlations()
    }

    fn to_csv(&self) -> String {
        format::tensor_to_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.entries().len()
    }
}

/// Quantum correlation computed through the reference-qubit measurement model.
#[pyfunction]
fn reference_frame_correlation(state: &PyState, directions: Vec<[f64; 3]>) -> PyResult<f64> {
    let u = SettingTuple::from_components(&directions).map_err(err)?;
    corr::reference_frame_correlation(&state.inner, &u).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (state, m, seed=0))]
fn random_correlations_mc(py: Python<'_>, state: &PyState, m: u64, seed: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &corr::random_correlations_mc(&state.inner, m, seed).map_err(err)?)
}

#[pyfunction]
fn two_copy_spectrum(py: Python<'_>, n: usize) -> PyResult<Py<PyAny>> {
    to_py(py, &corr::two_copy_operator_spectrum(n).map_err(err)?)
}

/// Witness verdict for an estimate `r_hat`; `k=None` means infinitely many shots.
#[pyfunction]
#[pyo3(signature = (r_hat, n, m, k=None, confidence=0.954, one_sided=false, bound="pure"))]
#[allow(clippy::too_many_arguments)]
fn witness_decide(
    py: Python<'_>,
    r_hat: f64,
    n: usize,
    m: u64,
    k: Option<u64>,
    confidence: f64,
    one_sided: bool,
    bound: &str,
) -> PyResult<Py<PyAny>> {
    let bound: BoundMode = bound.parse().map_err(err)?;
    let conf = self::confidence(confidence, one_sided)?;
    to_py(py, &witness::witness_decide(r_hat, n, m, shots(k), conf, bound).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n, m, k=None))]
fn delta_mk(n: usize, m: u64, k: Option<u64>) -> PyResult<f64> {
    witness::delta_mk(n, m, shots(k)).map_err(err)
}

#[pyfunction]
fn chi_cdf(c: f64, n: usize) -> PyResult<f64> {
    witness::chi_cdf(c, n).map_err(err)
}

/// Level `c` above which a single product-state `E^2` is unlikely.
#[pyfunction]
#[pyo3(signature = (n, confidence=0.954, one_sided=false))]
fn single_setting_threshold(n: usize, confidence: f64, one_sided: bool) -> PyResult<f64> {
    let conf = self::confidence(confidence, one_sided)?;
    Ok(witness::single_setting_threshold(n, conf).map_err(err)?.c)
}

#[pyfunction]
fn ghz_noise_threshold(n: usize) -> PyResult<f64> {
    witness::ghz_noise_threshold(n).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (state, confidence=0.954, one_sided=false, samples=100_000, seed=0))]
fn detection_probability(
    py: Python<'_>,
    state: &PyState,
    confidence: f64,
    one_sided: bool,
    samples: u64,
    seed: u64,
) -> PyResult<f64> {
    let conf = self::confidence(confidence, one_sided)?;
    py.detach(|| witness::detection_probability(&state.inner, conf, samples, seed)).map_err(err)
}

/// Simulated experiment; returns the records and `r_mk` as a dictionary.
#[pyfunction]
#[pyo3(signature = (state, m, k=None, seed=0))]
fn run_experiment(py: Python<'_>, state: &PyState, m: u64, k: Option<u64>, seed: u64) -> PyResult<Py<PyAny>> {
    let config = ExperimentConfig { state: StateSpec::from_state(&state.inner), settings: m, shots: shots(k), seed };
    to_py(py, &shotsim::run_experiment_on(&state.inner, &config).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (k=Some(1000), confidence=0.954, one_sided=false, repetitions=10_000, seed=0))]
fn eight_photon_scenario(
    py: Python<'_>,
    k: Option<u64>,
    confidence: f64,
    one_sided: bool,
    repetitions: u64,
    seed: u64,
) -> PyResult<f64> {
    let conf = self::confidence(confidence, one_sided)?;
    py.detach(|| shotsim::eight_photon_scenario(shots(k), conf, repetitions, seed)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, d, num_states=200, seed=0))]
fn qudit_bound_check(py: Python<'_>, n: usize, d: usize, num_states: u64, seed: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &qudit::qudit_bound_check(n, d, num_states, seed).map_err(err)?)
}

#[pymodule]
fn randcorr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyCorrelationTensor>()?;
    m.add_function(wrap_pyfunction!(reference_frame_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(random_correlations_mc, m)?)?;
    m.add_function(wrap_pyfunction!(two_copy_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(witness_decide, m)?)?;
    m.add_function(wrap_pyfunction!(delta_mk, m)?)?;
    m.add_function(wrap_pyfunction!(chi_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(single_setting_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_noise_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(detection_probability, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(eight_photon_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(qudit_bound_check, m)?)?;
    m.add("SCHEMA_VERSION", randcorr::SCHEMA_VERSION)?;
    Ok(())
}
