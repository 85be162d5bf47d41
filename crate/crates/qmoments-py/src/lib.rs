//! Python bindings: moment states, potentials, hierarchy integration,
//! stationary solutions, inequality checks and the comparison diagnostics.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qmoments::diagnostics::{decompose, run_comparison, ComparisonSet};
use qmoments::harmonic::harmonic_stationary_quantum;
use qmoments::inequalities::{check_all, SchwarzSuite};
use qmoments::integrator::{estimate_period, integrate};
use qmoments::moments::keys;
use qmoments::stationary::{ground_energy_bounds, solve_quartic_stationary};
use qmoments::{Error, Flavor, TruncationPolicy};

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::InvalidState(_) | Error::Mismatch(_) | Error::DegreeOverflow { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Error::Numerical(_) | Error::Singular(_) | Error::ZeroHbar => PyArithmeticError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Centroid and central moments G^{a,b} (or C^{a,b}) up to a cutoff.
#[pyclass(name = "MomentSet", module = "pyqmoments", skip_from_py_object)]
#[derive(Clone)]
pub struct PyMomentSet {
    inner: qmoments::MomentSet,
}

#[pymethods]
impl PyMomentSet {
    #[new]
    #[pyo3(signature = (n_max, hbar, quantum=true))]
    fn new(n_max: usize, hbar: f64, quantum: bool) -> PyResult<Self> {
        let flavor = if quantum { Flavor::Quantum } else { Flavor::Classical };
        Ok(Self { inner: qmoments::MomentSet::zeros(flavor, hbar, n_max).map_err(err)? })
    }

    /// Minimum-uncertainty Gaussian with position variance width²/2.
    #[staticmethod]
    #[pyo3(signature = (width2, hbar, n_max, q0=0.0, p0=0.0))]
    fn gaussian(width2: f64, hbar: f64, n_max: usize, q0: f64, p0: f64) -> PyResult<Self> {
        let mut s = qmoments::gaussian_moments(width2, hbar, n_max).map_err(err)?;
        s.q = q0;
        s.p = p0;
        Ok(Self { inner: s })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: qmoments::MomentSet::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn get(&self, a: usize, b: usize) -> PyResult<f64> {
        if a + b < 2 || a + b > self.inner.n_max {
            return Err(PyValueError::new_err(format!("order {} outside 2..={}", a + b, self.inner.n_max)));
        }
        Ok(self.inner.get(a, b))
    }

    fn set(&mut self, a: usize, b: usize, value: f64) -> PyResult<()> {
        self.get(a, b)?;
        self.inner.set(a, b, value);
        Ok(())
    }

    /// {(a, b): value} for every stored moment.
    fn moments(&self) -> BTreeMap<(usize, usize), f64> {
        keys(self.inner.n_max).map(|k| ((k.a, k.b), self.inner.get(k.a, k.b))).collect()
    }

    fn to_classical(&self) -> Self {
        Self { inner: self.inner.to_classical() }
    }

    fn with_cutoff(&self, n_max: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_cutoff(n_max).map_err(err)? })
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    #[setter]
    fn set_q(&mut self, q: f64) {
        self.inner.q = q;
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[setter]
    fn set_p(&mut self, p: f64) {
        self.inner.p = p;
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.inner.hbar
    }

    #[getter]
    fn quantum(&self) -> bool {
        self.inner.flavor == Flavor::Quantum
    }

    fn __repr__(&self) -> String {
        format!(
            "MomentSet({:?}, n_max={}, hbar={}, q={}, p={})",
            self.inner.flavor, self.inner.n_max, self.inner.hbar, self.inner.q, self.inner.p
        )
    }
}

/// V(q) = Σ_k c_k q^k.
#[pyclass(name = "Potential", module = "pyqmoments", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPotential {
    inner: qmoments::PolynomialPotential,
}

#[pymethods]
impl PyPotential {
    /// `coefficients` maps power k to c_k.
    #[new]
    fn new(coefficients: BTreeMap<usize, f64>) -> Self {
        Self { inner: qmoments::PolynomialPotential::new(coefficients) }
    }

    #[staticmethod]
    fn quartic(lam: f64) -> Self {
        Self { inner: qmoments::PolynomialPotential::quartic(lam) }
    }

    #[staticmethod]
    #[pyo3(signature = (omega_sq, beta=0.0))]
    fn harmonic(omega_sq: f64, beta: f64) -> Self {
        Self { inner: qmoments::PolynomialPotential::harmonic(beta, omega_sq) }
    }

    fn __call__(&self, q: f64) -> f64 {
        self.inner.value(q)
    }

    fn coefficients(&self) -> BTreeMap<usize, f64> {
        self.inner.coefficients().clone()
    }

    /// Period of the point orbit through (q0, p0).
    fn period(&self, q0: f64, p0: f64) -> PyResult<f64> {
        estimate_period(&self.inner, q0, p0).map_err(err)
    }

    /// ⟨H⟩ of a moment state.
    fn energy(&self, state: &PyMomentSet) -> f64 {
        qmoments::effective_hamiltonian(&state.inner, &self.inner)
    }
}

#[pyclass(name = "Trajectory", module = "pyqmoments")]
pub struct PyTrajectory {
    inner: qmoments::integrator::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn h_eff(&self) -> Vec<f64> {
        self.inner.h_eff.clone()
    }

    fn q(&self) -> Vec<f64> {
        self.inner.q()
    }

    fn p(&self) -> Vec<f64> {
        self.inner.p()
    }

    fn moment(&self, a: usize, b: usize) -> Vec<f64> {
        self.inner.moment(a, b)
    }

    fn state(&self, i: usize) -> PyResult<PyMomentSet> {
        self.inner
            .states
            .get(i)
            .map(|s| PyMomentSet { inner: s.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("sample {i} of {}", self.inner.len())))
    }

    fn h_eff_drift(&self) -> f64 {
        self.inner.h_eff_drift()
    }

    #[getter]
    fn truncated(&self) -> bool {
        self.inner.is_truncated()
    }

    #[getter]
    fn stop(&self) -> String {
        format!("{:?}", self.inner.stop)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
#[pyo3(name = "integrate", signature = (state, potential, t_end, dt_out, n_max=None, rtol=1e-10, atol=1e-10))]
fn py_integrate(
    state: &PyMomentSet,
    potential: &PyPotential,
    t_end: f64,
    dt_out: f64,
    n_max: Option<usize>,
    rtol: f64,
    atol: f64,
) -> PyResult<PyTrajectory> {
    let policy = TruncationPolicy::new(n_max.unwrap_or(state.inner.n_max)).map_err(err)?;
    let tr = integrate(&state.inner, &potential.inner, policy, t_end, rtol, atol, dt_out).map_err(err)?;
    Ok(PyTrajectory { inner: tr })
}

#[pyfunction]
#[pyo3(name = "harmonic_stationary")]
fn py_harmonic_stationary(energy: f64, omega: f64, hbar: f64, n_max: usize) -> PyResult<PyMomentSet> {
    Ok(PyMomentSet { inner: harmonic_stationary_quantum(energy, omega, hbar, n_max).map_err(err)? })
}

/// Stationary moments of V = λq⁴ at energy E and position spread G^{0,2}.
#[pyfunction]
#[pyo3(name = "quartic_stationary")]
fn py_quartic_stationary(energy: f64, g02: f64, lam: f64, hbar: f64, n_max: usize) -> PyResult<PyMomentSet> {
    Ok(PyMomentSet { inner: solve_quartic_stationary(energy, g02, lam, hbar, n_max).map_err(err)?.state })
}

/// (lower, upper) ground-energy bounds in units of (ħ⁴λ)^{1/3}.
#[pyfunction]
#[pyo3(name = "ground_energy_bounds")]
fn py_ground_energy_bounds(lam: f64, hbar: f64, order: usize) -> PyResult<(f64, f64)> {
    let b = ground_energy_bounds(lam, hbar, order).map_err(err)?;
    Ok((b.lower, b.upper))
}

/// Margins of every constraint up to order 2·half_order: [(id, margin)].
#[pyfunction]
#[pyo3(name = "check_inequalities", signature = (state, half_order=None))]
fn py_check_inequalities(state: &PyMomentSet, half_order: Option<usize>) -> PyResult<Vec<(String, f64)>> {
    let suite = half_order.map(|r| SchwarzSuite::new(r, state.inner.hbar)).transpose().map_err(err)?;
    let rep = check_all(&state.inner, suite.as_ref()).map_err(err)?;
    Ok(rep.constraints.into_iter().map(|c| (c.id, c.margin)).collect())
}

/// Point, classical and quantum runs from a Gaussian; returns
/// {"gamma", "max_abs_delta_q", "max_abs_delta_p", "period"}.
#[pyfunction]
#[pyo3(name = "compare", signature = (potential, hbar, width2, q0, p0, n_max, periods=2.0, tol=1e-10, samples_per_period=512))]
#[allow(clippy::too_many_arguments)]
fn py_compare(
    potential: &PyPotential,
    hbar: f64,
    width2: f64,
    q0: f64,
    p0: f64,
    n_max: usize,
    periods: f64,
    tol: f64,
    samples_per_period: usize,
) -> PyResult<BTreeMap<String, f64>> {
    let r = run_comparison(&potential.inner, hbar, width2, q0, p0, n_max, periods, tol, samples_per_period).map_err(err)?;
    let cmp = ComparisonSet::new(&r.point, &r.classical, &r.quantum, r.period).map_err(err)?;
    let d = decompose(&cmp);
    Ok(BTreeMap::from([
        ("gamma".to_string(), d.gamma.unwrap_or(f64::NAN)),
        ("max_abs_delta_q".to_string(), d.max_abs_delta_q),
        ("max_abs_delta_p".to_string(), d.max_abs_delta_p),
        ("period".to_string(), r.period),
    ]))
}

#[pymodule]
fn pyqmoments(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMomentSet>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(py_integrate, m)?)?;
    m.add_function(wrap_pyfunction!(py_harmonic_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(py_quartic_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(py_ground_energy_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(py_check_inequalities, m)?)?;
    m.add_function(wrap_pyfunction!(py_compare, m)?)?;
    Ok(())
}
