//! Python bindings: spectra, nonlinearities, weights, trajectories, the
//! well-posedness constants and the experiment runner.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kirchhoff_core::bounds::{self, ConstantsBundle, LifespanCase, Regularity};
use kirchhoff_core::comparison;
use kirchhoff_core::dynamics::{self, SolveOptions, State};
use kirchhoff_core::harness::{self, ScenarioConfig};
use kirchhoff_core::model;
use kirchhoff_core::operator;

fn err(e: kirchhoff_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, name = "Spectrum")]
struct Spectrum(operator::Spectrum);

#[pymethods]
impl Spectrum {
    #[new]
    fn new(eigenvalues: Vec<f64>) -> PyResult<Self> {
        operator::Spectrum::new(eigenvalues).map(Self).map_err(err)
    }

    #[staticmethod]
    fn string_like(n: usize) -> PyResult<Self> {
        operator::Spectrum::string_like(n).map(Self).map_err(err)
    }

    #[staticmethod]
    fn sqrt_like(n: usize) -> PyResult<Self> {
        operator::Spectrum::sqrt_like(n).map(Self).map_err(err)
    }

    #[staticmethod]
    fn lacunary(n: usize) -> PyResult<Self> {
        operator::Spectrum::lacunary(n).map(Self).map_err(err)
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Spectrum({:?})", self.0.eigenvalues())
    }
}

#[pyclass(frozen, name = "Nonlinearity")]
struct Nonlinearity(model::Nonlinearity);

#[pymethods]
impl Nonlinearity {
    #[staticmethod]
    fn constant(nu0: f64) -> PyResult<Self> {
        model::Nonlinearity::constant(nu0).map(Self).map_err(err)
    }

    /// `m(σ) = ν₀ + slope·σ`.
    #[staticmethod]
    #[pyo3(signature = (nu0, slope = 1.0))]
    fn affine(nu0: f64, slope: f64) -> PyResult<Self> {
        model::Nonlinearity::affine(nu0, slope).map(Self).map_err(err)
    }

    #[getter]
    fn nu0(&self) -> f64 {
        self.0.nu0()
    }

    fn m(&self, sigma: f64) -> PyResult<f64> {
        self.0.m_value(sigma).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(frozen, name = "Weight")]
struct Weight(model::Weight);

#[pymethods]
impl Weight {
    #[staticmethod]
    fn zero() -> Self {
        Self(model::Weight::Zero)
    }

    #[staticmethod]
    fn linear(r0: f64) -> PyResult<Self> {
        model::Weight::linear(r0).map(Self).map_err(err)
    }

    #[staticmethod]
    fn quasi_analytic() -> Self {
        Self(model::Weight::QuasiAnalytic)
    }

    fn phi(&self, sigma: f64) -> f64 {
        self.0.phi(sigma)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Integrated trajectory sampled on a uniform grid.
#[pyclass(frozen, name = "Trajectory")]
struct Trajectory {
    inner: dynamics::Trajectory,
    spec: operator::Spectrum,
    nl: model::Nonlinearity,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.grid_states().map(|s| s.t).collect()
    }

    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        self.inner.grid_states().map(|s| s.u.coords.clone()).collect()
    }

    #[getter]
    fn v(&self) -> Vec<Vec<f64>> {
        self.inner.grid_states().map(|s| s.v.coords.clone()).collect()
    }

    #[getter]
    fn hamiltonian_drift(&self) -> Option<f64> {
        self.inner.meta.hamiltonian_drift
    }

    #[getter]
    fn accepted_steps(&self) -> usize {
        self.inner.meta.accepted_steps
    }

    /// `H` at each grid time.
    fn hamiltonian(&self) -> Vec<f64> {
        self.inner
            .grid_states()
            .map(|s| dynamics::hamiltonian(&self.spec, &self.nl, &s.u, &s.v))
            .collect()
    }

    /// Sobolev energy `E(u, u')` at each grid time.
    fn energy(&self) -> Vec<f64> {
        self.inner
            .grid_states()
            .map(|s| dynamics::sobolev_energy(&self.spec, &s.u, &s.v))
            .collect()
    }

    /// `log F_φ` at each grid time.
    fn log_f_phi(&self, weight: &Weight) -> Vec<f64> {
        self.inner
            .grid_states()
            .map(|s| dynamics::log_f_phi(&self.spec, &self.nl, &s.u, &s.v, &weight.0))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.grid.len()
    }
}

#[pyfunction]
#[pyo3(signature = (spectrum, nonlinearity, u0, u1, t_end, tol = 1e-10, samples = 1000))]
fn evolve(
    spectrum: &Spectrum,
    nonlinearity: &Nonlinearity,
    u0: Vec<f64>,
    u1: Vec<f64>,
    t_end: f64,
    tol: f64,
    samples: usize,
) -> PyResult<Trajectory> {
    let init = State::new(0.0, u0, u1);
    let opts = SolveOptions::new(tol).uniform_grid(0.0, t_end, samples);
    let inner = dynamics::evolve_kirchhoff(&spectrum.0, &nonlinearity.0, &init, t_end, &opts).map_err(err)?;
    Ok(Trajectory {
        inner,
        spec: spectrum.0.clone(),
        nl: nonlinearity.0.clone(),
    })
}

#[pyfunction]
fn hamiltonian(spectrum: &Spectrum, nonlinearity: &Nonlinearity, u: Vec<f64>, v: Vec<f64>) -> f64 {
    let s = State::new(0.0, u, v);
    dynamics::hamiltonian(&spectrum.0, &nonlinearity.0, &s.u, &s.v)
}

#[pyfunction]
fn sobolev_energy(spectrum: &Spectrum, z0: Vec<f64>, z1: Vec<f64>) -> f64 {
    let s = State::new(0.0, z0, z1);
    dynamics::sobolev_energy(&spectrum.0, &s.u, &s.v)
}

/// Regular-case constants for a reference run, as a dict.
#[pyfunction]
fn gammas<'py>(py: Python<'py>, trajectory: &Trajectory) -> PyResult<Bound<'py, PyDict>> {
    let cb = bounds::build_constants(&trajectory.spec, &trajectory.nl, &trajectory.inner, None).map_err(err)?;
    let gs = bounds::gammas(&cb);
    let d = PyDict::new(py);
    d.set_item("h0", cb.h0)?;
    d.set_item("r0", cb.r0)?;
    d.set_item("r1", cb.r1)?;
    d.set_item("r2", cb.r2)?;
    d.set_item("c0", cb.c0)?;
    d.set_item("l0", cb.l0)?;
    d.set_item("gamma1", gs.gamma1)?;
    d.set_item("gamma2", gs.gamma2)?;
    Ok(d)
}

/// `Γ₁, Γ₂` from explicit radii.
#[pyfunction]
#[pyo3(signature = (nonlinearity, h0, r0, r1, r2))]
fn gammas_from_radii(nonlinearity: &Nonlinearity, h0: f64, r0: f64, r1: f64, r2: f64) -> PyResult<(f64, f64)> {
    let cb = ConstantsBundle::from_radii(&nonlinearity.0, h0, r0, r1, Some(r2));
    bounds::gammas(&cb).regular().map_err(err)
}

/// Largest `T` with `E₀Γ₁e^{Γ₂T} < R₁²`.
#[pyfunction]
fn guaranteed_time(gamma1: f64, gamma2: f64, e0: f64, r1: f64) -> PyResult<f64> {
    let gs = bounds::GammaSet {
        gamma1,
        gamma2: Some(gamma2),
        gamma1_lambda: None,
        gamma2_lambda: None,
        gamma3: 2.0 * gamma1,
        gamma4: 0.0,
    };
    bounds::guaranteed_time(&gs, e0, r1, Regularity::Regular).map_err(err)
}

/// `case` is one of `finite_dimensional`, `analytic`, `quasi_analytic`,
/// `null_solution`.
#[pyfunction]
fn lifespan_lower_bound(case: &str, epsilon: f64, rate: f64) -> PyResult<f64> {
    let case: LifespanCase = serde_json::from_value(serde_json::Value::String(case.into()))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    bounds::lifespan_lower_bound(case, epsilon, rate, None)
        .map(|l| l.lower_bound)
        .map_err(err)
}

/// `(lhs, bound)` of the interpolation inequality.
#[pyfunction]
fn interpolate(a: Vec<f64>, lambdas: Vec<f64>, b: f64, weight: &Weight) -> PyResult<(f64, f64)> {
    let r = bounds::interpolate(&a, &lambdas, b, &weight.0).map_err(err)?;
    Ok((r.lhs, r.bound))
}

#[pyclass(frozen, name = "GrowthEnvelope")]
struct GrowthEnvelope(comparison::GrowthEnvelope);

#[pymethods]
impl GrowthEnvelope {
    #[staticmethod]
    fn analytic(c0: f64, c1: f64, r0: f64, f0: f64) -> PyResult<Self> {
        comparison::GrowthEnvelope::analytic(c0, c1, r0, f0).map(Self).map_err(err)
    }

    #[staticmethod]
    fn quasi_analytic(c0: f64, c1: f64, c2: f64, f0: f64) -> PyResult<Self> {
        comparison::GrowthEnvelope::quasi_analytic(c0, c1, c2, f0).map(Self).map_err(err)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    fn log_envelope(&self, t: f64) -> f64 {
        self.0.log_envelope(t)
    }

    /// Substitutes the envelope into its comparison ODE on `[0, t_end]`.
    #[pyo3(signature = (t_end = 3.0, n_grid = 1000))]
    fn is_supersolution(&self, t_end: f64, n_grid: usize) -> PyResult<bool> {
        comparison::verify_supersolution(&self.0, t_end, n_grid).map(|c| c.pass).map_err(err)
    }
}

/// Runs a JSON scenario and returns the result as JSON.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg = ScenarioConfig::from_json(config_json).map_err(err)?;
    let res = harness::run(&cfg).map_err(err)?;
    serde_json::to_string(&res).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn kirchhoff(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Spectrum>()?;
    m.add_class::<Nonlinearity>()?;
    m.add_class::<Weight>()?;
    m.add_class::<Trajectory>()?;
    m.add_class::<GrowthEnvelope>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_energy, m)?)?;
    m.add_function(wrap_pyfunction!(gammas, m)?)?;
    m.add_function(wrap_pyfunction!(gammas_from_radii, m)?)?;
    m.add_function(wrap_pyfunction!(guaranteed_time, m)?)?;
    m.add_function(wrap_pyfunction!(lifespan_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
