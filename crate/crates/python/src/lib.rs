//! Python module `pydissipation`.

use dissipation::models::{
    mean_time_by_quadrature, ring_model, two_level_closed_forms, two_level_system, InitialState,
    MultiChannelSystem as CoreMultiChannel, TwoLevelParams,
};
use dissipation::spectral::spectral_model;
use dissipation::stats::{self, DecayTimeStats};
use dissipation::{poles, resolvent, QuantumSystem, C64};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: dissipation::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyArithmeticError::new_err(e.to_string())
    }
}

fn matrix(rows: Vec<Vec<C64>>) -> PyResult<DMatrix<C64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("hamiltonian must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Distinct levels with their overlaps with the decay state.
#[pyclass(frozen, name = "SpectralModel")]
pub struct SpectralModel {
    inner: dissipation::SpectralModel,
}

#[pymethods]
impl SpectralModel {
    /// Levels from energies and (unnormalised) weights.
    #[new]
    fn new(energies: Vec<f64>, weights: Vec<f64>) -> PyResult<Self> {
        let inner = dissipation::SpectralModel::from_weights(&energies, &weights).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_hamiltonian(hamiltonian: Vec<Vec<C64>>, decay_state: Vec<C64>) -> PyResult<Self> {
        let psi = DVector::from_vec(decay_state);
        let sys = QuantumSystem::new(matrix(hamiltonian)?, psi, 1.0).map_err(py_err)?;
        Ok(Self { inner: spectral_model(&sys).map_err(py_err)? })
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies()
    }

    #[getter]
    fn overlaps(&self) -> Vec<f64> {
        self.inner.overlaps()
    }

    /// Number of distinct levels with non-zero overlap.
    #[getter]
    fn winding(&self) -> usize {
        self.inner.winding()
    }

    fn resolvent(&self, s: C64) -> PyResult<C64> {
        resolvent::resolvent_at(&self.inner, s).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.levels().len()
    }

    fn __repr__(&self) -> String {
        format!("SpectralModel(levels={})", self.inner.levels().len())
    }
}

/// Poles of the Laplace-transformed amplitude and their residual coefficients.
#[pyclass(frozen, name = "PoleSet")]
pub struct PoleSet {
    inner: dissipation::PoleSet,
}

#[pymethods]
impl PoleSet {
    #[getter]
    fn poles(&self) -> Vec<C64> {
        self.inner.poles.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<C64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    fn is_exact(&self) -> PyResult<bool> {
        Ok(self.inner.diagnostics().map_err(py_err)?.is_exact())
    }

    fn moment(&self, m: usize) -> PyResult<f64> {
        stats::moment(&self.inner, m).map_err(py_err)
    }

    fn mean(&self) -> PyResult<f64> {
        stats::mean(&self.inner).map_err(py_err)
    }

    fn variance(&self) -> PyResult<f64> {
        stats::variance(&self.inner).map_err(py_err)
    }

    fn detection_probability(&self) -> PyResult<f64> {
        stats::detection_probability(&self.inner).map_err(py_err)
    }

    fn density(&self, t: f64) -> f64 {
        stats::decay_density(&self.inner, t)
    }

    fn conditional_mean(&self, theta: f64) -> PyResult<f64> {
        stats::conditional_mean(&self.inner, theta).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PoleSet(n={}, gamma={})", self.inner.len(), self.inner.gamma)
    }
}

#[pyfunction]
fn find_poles(model: &SpectralModel, gamma: f64) -> PyResult<PoleSet> {
    Ok(PoleSet { inner: poles::find_poles(&model.inner, gamma).map_err(py_err)? })
}

#[pyfunction]
#[pyo3(signature = (model, gamma, init_points = 64))]
fn compute_winding(model: &SpectralModel, gamma: f64, init_points: usize) -> PyResult<i64> {
    Ok(resolvent::compute_winding(&model.inner, gamma, init_points).map_err(py_err)?.winding)
}

/// `{"p_det", "mean", "variance", "moments"}` for one model and rate.
#[pyfunction]
#[pyo3(signature = (model, gamma, max_order = 4))]
fn moments<'py>(py: Python<'py>, model: &SpectralModel, gamma: f64, max_order: usize) -> PyResult<Bound<'py, PyDict>> {
    let set = poles::find_poles(&model.inner, gamma).map_err(py_err)?;
    let s = DecayTimeStats::from_poles(&set, max_order).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("p_det", s.p_det)?;
    d.set_item("mean", s.mean)?;
    d.set_item("variance", s.variance)?;
    d.set_item("moments", s.moments)?;
    Ok(d)
}

#[pyfunction]
fn two_level_model(delta: f64, omega: f64) -> PyResult<SpectralModel> {
    let p = TwoLevelParams::new(delta, omega, 1.0).map_err(py_err)?;
    let sys = two_level_system(p).map_err(py_err)?;
    Ok(SpectralModel { inner: spectral_model(&sys).map_err(py_err)? })
}

/// Closed-form poles of the two-level atom.
#[pyfunction]
fn two_level_poles(delta: f64, omega: f64, gamma: f64) -> PyResult<PoleSet> {
    let p = TwoLevelParams::new(delta, omega, gamma).map_err(py_err)?;
    Ok(PoleSet { inner: two_level_closed_forms(p).map_err(py_err)? })
}

#[pyfunction]
#[pyo3(signature = (length, hop = 1.0, epsilon = 0.0, seed = 0))]
fn ring(length: usize, hop: f64, epsilon: f64, seed: u64) -> PyResult<SpectralModel> {
    Ok(SpectralModel { inner: ring_model(length, hop, epsilon, seed).map_err(py_err)? })
}

/// Open chain decaying through several sites.
#[pyclass(frozen, name = "MultiChannelSystem")]
pub struct MultiChannelSystem {
    inner: CoreMultiChannel,
}

#[pymethods]
impl MultiChannelSystem {
    #[staticmethod]
    #[pyo3(signature = (length, sites, gamma, hop = 1.0))]
    fn line(length: usize, sites: Vec<usize>, gamma: f64, hop: f64) -> PyResult<Self> {
        Ok(Self { inner: CoreMultiChannel::line(length, hop, &sites, gamma).map_err(py_err)? })
    }

    #[getter]
    fn winding(&self) -> PyResult<usize> {
        self.inner.winding().map_err(py_err)
    }

    /// Mean detection time for the uniform mixture over channels, by propagation.
    #[pyo3(signature = (t_max = 1e8))]
    fn mixed_mean(&self, t_max: f64) -> PyResult<f64> {
        let q = mean_time_by_quadrature(&self.inner, &InitialState::DecaySubspaceMixed, t_max).map_err(py_err)?;
        Ok(q.mean)
    }
}

#[pymodule]
pub fn pydissipation(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", dissipation::VERSION)?;
    m.add_class::<SpectralModel>()?;
    m.add_class::<PoleSet>()?;
    m.add_class::<MultiChannelSystem>()?;
    m.add_function(wrap_pyfunction!(find_poles, m)?)?;
    m.add_function(wrap_pyfunction!(compute_winding, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(two_level_model, m)?)?;
    m.add_function(wrap_pyfunction!(two_level_poles, m)?)?;
    m.add_function(wrap_pyfunction!(ring, m)?)?;
    Ok(())
}
