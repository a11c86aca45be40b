//! Python bindings for `orbita`.

use orbita::continuation::{survey, ContinuationConfig, PerturbationModel};
use orbita::dynamics::{verify_torus, VerifyConfig};
use orbita::restricted3body::{candidate_tori, find_r3b_periodic, R3BConfig, R3BSearch};
use orbita::tori::{action_angle, find_torus, TorusConfig};
use orbita::{OrbitaError, PotentialSpec, RadialPotential, TimeMaps, TorusSolution};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

fn err(e: OrbitaError) -> PyErr {
    match e {
        OrbitaError::Parameter(_)
        | OrbitaError::Domain { .. }
        | OrbitaError::Order(_)
        | OrbitaError::NoMinimum(_)
        | OrbitaError::DegenerateCenter(_)
        | OrbitaError::Inadmissible { .. }
        | OrbitaError::InadmissibleRatio { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn value_to_py(py: Python<'_>, v: &Value) -> PyResult<PyObject> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py(py),
        },
        Value::String(s) => s.into_py(py),
        Value::Array(a) => {
            let items = a.iter().map(|x| value_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new_bound(py, items).into_py(py)
        }
        Value::Object(m) => {
            let d = PyDict::new_bound(py);
            for (k, x) in m {
                d.set_item(k, value_to_py(py, x)?)?;
            }
            d.into_py(py)
        }
    })
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let value = serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    value_to_py(py, &value)
}

/// A radial potential `V(r)`.
#[pyclass(name = "Potential", module = "orbita_py", frozen)]
#[derive(Clone)]
struct PyPotential {
    inner: RadialPotential,
}

#[pymethods]
impl PyPotential {
    #[staticmethod]
    #[pyo3(signature = (alpha, kappa = 1.0))]
    fn homogeneous(alpha: f64, kappa: f64) -> PyResult<Self> {
        Ok(Self {
            inner: RadialPotential::homogeneous(kappa, alpha).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (kappa = 1.0))]
    fn logarithmic(kappa: f64) -> PyResult<Self> {
        Ok(Self {
            inner: RadialPotential::logarithmic(kappa).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (lam, kappa = 1.0))]
    fn levi_civita(lam: f64, kappa: f64) -> PyResult<Self> {
        Ok(Self {
            inner: RadialPotential::levi_civita(kappa, lam).map_err(err)?,
        })
    }

    #[staticmethod]
    fn lennard_jones(varsigma: f64, sigma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: RadialPotential::lennard_jones(varsigma, sigma).map_err(err)?,
        })
    }

    /// Builds a potential from a JSON description such as `{"family": "homogeneous", ...}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: PotentialSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: RadialPotential::from_spec(&spec).map_err(err)?,
        })
    }

    fn value(&self, r: f64) -> f64 {
        self.inner.value(r)
    }

    #[pyo3(signature = (r, order = 1))]
    fn derivative(&self, r: f64, order: usize) -> f64 {
        self.inner.derivative(r, order)
    }

    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    fn spec(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, self.inner.spec())
    }

    fn __repr__(&self) -> String {
        format!("Potential({})", self.inner.label())
    }
}

/// `(−ω₀(L), H₀(L))`.
#[pyfunction]
fn energy_window(p: &PyPotential, l: f64) -> PyResult<(f64, f64)> {
    Ok(TimeMaps::new(&p.inner, l).map_err(err)?.energy_window())
}

/// `T`, `Θ`, their partial derivatives and `D` at `(H, L)`.
#[pyfunction]
fn time_maps(py: Python<'_>, p: &PyPotential, h: f64, l: f64) -> PyResult<PyObject> {
    let v = TimeMaps::new(&p.inner, l).and_then(|m| m.values(h)).map_err(err)?;
    to_py(py, &v)
}

/// Circular-orbit limits `((T, ∂_H T, ∂_L T), (Θ, ∂_H Θ, ∂_L Θ))`.
#[pyfunction]
fn circular_limits(py: Python<'_>, p: &PyPotential, l: f64) -> PyResult<PyObject> {
    let (r, a) = TimeMaps::new(&p.inner, l).map_err(err)?.circular_limits();
    to_py(py, &(r, a))
}

#[pyfunction]
fn action_angle_chart(py: Python<'_>, p: &PyPotential, r: f64, rdot: f64, theta: f64, l: f64) -> PyResult<PyObject> {
    to_py(py, &action_angle(&p.inner, r, rdot, theta, l).map_err(err)?)
}

/// An `(n, k)` invariant torus.
#[pyclass(name = "Torus", module = "orbita_py", frozen)]
#[derive(Clone)]
struct PyTorus {
    inner: TorusSolution,
}

#[pymethods]
impl PyTorus {
    #[getter(H)]
    fn h(&self) -> f64 {
        self.inner.H
    }

    #[getter(L)]
    fn l(&self) -> f64 {
        self.inner.L
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n
    }

    #[getter]
    fn k(&self) -> u32 {
        self.inner.k
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        })
    }

    /// Integrates one orbit and checks closure and winding numbers.
    fn verify(&self, py: Python<'_>) -> PyResult<PyObject> {
        let report = py.allow_threads(|| verify_torus(&self.inner, &VerifyConfig::default())).map_err(err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Torus(n={}, k={}, tau={}, H={}, L={})",
            self.inner.n, self.inner.k, self.inner.tau, self.inner.H, self.inner.L
        )
    }
}

#[pyfunction]
#[pyo3(signature = (p, tau, n, k, ell = 1, seed = None))]
fn find_torus_py(p: &PyPotential, tau: f64, n: u32, k: u32, ell: u32, seed: Option<(f64, f64)>) -> PyResult<PyTorus> {
    let cfg = TorusConfig {
        ell,
        seed,
        ..TorusConfig::default()
    };
    Ok(PyTorus {
        inner: find_torus(&p.inner, tau, n, k, &cfg).map_err(err)?,
    })
}

/// Periodic orbits of the problem driven by `ε cos(2πt/τ)⟨e, x⟩` near a torus.
#[pyfunction]
#[pyo3(signature = (torus, epsilon, direction = (1.0, 0.0), n_lambda = 8, n_phi = 8))]
fn continue_uniform_drive(
    py: Python<'_>,
    torus: &PyTorus,
    epsilon: f64,
    direction: (f64, f64),
    n_lambda: usize,
    n_phi: usize,
) -> PyResult<PyObject> {
    let t = &torus.inner;
    let report = py
        .allow_threads(|| {
            let p = t.potential()?;
            let model = PerturbationModel::uniform_drive(t.tau, [direction.0, direction.1], epsilon);
            survey(&model, &p, t, n_lambda, n_phi, &ContinuationConfig::default())
        })
        .map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn r3b_candidates(py: Python<'_>, alpha: f64, n: u32, k: u32, count: usize) -> PyResult<PyObject> {
    to_py(py, &candidate_tori(alpha, n, k, count).map_err(err)?)
}

/// `2π`-periodic orbits of the restricted three-body problem near the `index`-th candidate torus.
#[pyfunction]
#[pyo3(signature = (alpha, m, n, k, index = 0, n_lambda = 4, n_phi = 4))]
#[allow(clippy::too_many_arguments)]
fn r3b_periodic(
    py: Python<'_>,
    alpha: f64,
    m: f64,
    n: u32,
    k: u32,
    index: usize,
    n_lambda: usize,
    n_phi: usize,
) -> PyResult<PyObject> {
    let orbits = py
        .allow_threads(|| {
            let config = R3BConfig::new(alpha, m)?;
            let candidates = candidate_tori(alpha, n, k, index + 1)?;
            let search = R3BSearch {
                n_lambda,
                n_phi,
                ..R3BSearch::default()
            };
            find_r3b_periodic(&config, &candidates[index], &search)
        })
        .map_err(err)?;
    to_py(py, &orbits)
}

#[pymodule]
pub fn orbita_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPotential>()?;
    m.add_class::<PyTorus>()?;
    m.add_function(wrap_pyfunction!(energy_window, m)?)?;
    m.add_function(wrap_pyfunction!(time_maps, m)?)?;
    m.add_function(wrap_pyfunction!(circular_limits, m)?)?;
    m.add_function(wrap_pyfunction!(action_angle_chart, m)?)?;
    m.add("find_torus", wrap_pyfunction!(find_torus_py, m)?)?;
    m.add_function(wrap_pyfunction!(continue_uniform_drive, m)?)?;
    m.add_function(wrap_pyfunction!(r3b_candidates, m)?)?;
    m.add_function(wrap_pyfunction!(r3b_periodic, m)?)?;
    Ok(())
}
