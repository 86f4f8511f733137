//! Python module `mlz`: models, scattering propagation and the closed-form
//! probabilities of mlz-core.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use mlz_core::families::{self, Breakage, FourStateParams, SlopeMap};
use mlz_core::integrability::{self, ResidualReport};
use mlz_core::propagator::{self, Readout};
use mlz_core::semiclassical;
use mlz_core::{CMatrix, Error, C64 as Complex64};

create_exception!(mlz, NotConvergedError, PyRuntimeError);
create_exception!(mlz, DegenerateSlopesError, PyValueError);

fn err(e: Error) -> PyErr {
    match e {
        Error::NotConverged { .. } => NotConvergedError::new_err(e.to_string()),
        Error::DegenerateSlopes { .. } => DegenerateSlopesError::new_err(e.to_string()),
        Error::StepUnderflow { .. } | Error::TooManySteps { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

type Rows = Vec<Vec<Complex64>>;

fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Linear multistate Landau-Zener model `H(t) = diag(Q) t²/2 + B t + A + K/t`.
#[pyclass(name = "DiabaticModel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel(mlz_core::DiabaticModel);

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (slopes, couplings, quadratic=None, coulomb=None, allow_degenerate=false))]
    fn new(
        slopes: Vec<f64>,
        couplings: Vec<Vec<Complex64>>,
        quadratic: Option<Vec<f64>>,
        coulomb: Option<Vec<f64>>,
        allow_degenerate: bool,
    ) -> PyResult<Self> {
        let n = slopes.len();
        if couplings.len() != n || couplings.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err(format!("couplings must be {n}x{n}")));
        }
        let a = CMatrix::from_fn(n, n, |i, j| couplings[i][j]);
        let mut m = mlz_core::DiabaticModel::new(slopes, a).map_err(err)?;
        if let Some(q) = quadratic {
            m = m.with_quadratic(q).map_err(err)?;
        }
        if let Some(k) = coulomb {
            m = m.with_coulomb(k).map_err(err)?;
        }
        Ok(Self(if allow_degenerate { m.allow_degenerate() } else { m }))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn slopes(&self) -> Vec<f64> {
        self.0.slopes().to_vec()
    }

    #[getter]
    fn couplings(&self) -> Vec<Vec<Complex64>> {
        rows(self.0.couplings())
    }

    #[getter]
    fn coulomb(&self) -> Vec<f64> {
        self.0.coulomb().to_vec()
    }

    fn hamiltonian(&self, t: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        self.0.hamiltonian_at(t).map(|h| rows(&h)).map_err(err)
    }

    fn adiabatic_energies(&self, t: f64) -> PyResult<Vec<f64>> {
        mlz_core::adiabatic_energies(&self.0, t).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DiabaticModel(n={}, slopes={:?})", self.0.n(), self.0.slopes())
    }
}

#[pyclass(name = "ScatterConfig", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    t_max: f64,
    rel_tol: f64,
    abs_tol: f64,
    rho: Option<f64>,
    window_check: f64,
    readout: String,
    step_ceiling: f64,
    max_steps: u64,
    extend_window: bool,
}

impl PyConfig {
    fn core(&self) -> PyResult<propagator::ScatterConfig> {
        let readout = match self.readout.as_str() {
            "adiabatic" => Readout::Adiabatic,
            "diabatic" => Readout::Diabatic,
            r => return Err(PyValueError::new_err(format!("readout must be 'adiabatic' or 'diabatic', got {r:?}"))),
        };
        let c = propagator::ScatterConfig {
            t_max: self.t_max,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            rho: self.rho,
            window_check: self.window_check,
            readout,
            step_ceiling: self.step_ceiling,
            max_steps: self.max_steps,
            extend_window: self.extend_window,
        };
        c.validate().map_err(err)?;
        Ok(c)
    }
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (t_max=None, rel_tol=None, abs_tol=None, rho=None, window_check=None, readout=None, step_ceiling=None, max_steps=None, extend_window=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        t_max: Option<f64>,
        rel_tol: Option<f64>,
        abs_tol: Option<f64>,
        rho: Option<f64>,
        window_check: Option<f64>,
        readout: Option<String>,
        step_ceiling: Option<f64>,
        max_steps: Option<u64>,
        extend_window: Option<bool>,
    ) -> PyResult<Self> {
        let d = propagator::ScatterConfig::default();
        let c = Self {
            t_max: t_max.unwrap_or(d.t_max),
            rel_tol: rel_tol.unwrap_or(d.rel_tol),
            abs_tol: abs_tol.unwrap_or(d.abs_tol),
            rho,
            window_check: window_check.unwrap_or(d.window_check),
            readout: readout.unwrap_or_else(|| "adiabatic".into()),
            step_ceiling: step_ceiling.unwrap_or(d.step_ceiling),
            max_steps: max_steps.unwrap_or(d.max_steps),
            extend_window: extend_window.unwrap_or(d.extend_window),
        };
        c.core()?;
        Ok(c)
    }

    fn __repr__(&self) -> String {
        format!("ScatterConfig(t_max={}, rel_tol={:e}, readout={:?})", self.t_max, self.rel_tol, self.readout)
    }
}

fn config(c: Option<&PyConfig>) -> PyResult<propagator::ScatterConfig> {
    c.map_or_else(|| Ok(propagator::ScatterConfig::default()), PyConfig::core)
}

#[pyclass(name = "ScatterResult", get_all, frozen)]
struct PyScatterResult {
    probabilities: Vec<f64>,
    amplitudes: Vec<Complex64>,
    avg_n: f64,
    window_deviation: f64,
    t_max_used: f64,
    norm_drift: f64,
    groups: Vec<Vec<usize>>,
    steps: u64,
}

impl From<propagator::ScatterResult> for PyScatterResult {
    fn from(r: propagator::ScatterResult) -> Self {
        Self {
            avg_n: propagator::expectation_n(&r.final_state),
            amplitudes: r.final_state.amplitudes,
            probabilities: r.probabilities,
            window_deviation: r.window_deviation,
            t_max_used: r.t_max_used,
            norm_drift: r.norm_drift,
            groups: r.groups,
            steps: r.stats.accepted + r.stats.rejected,
        }
    }
}

#[pymethods]
impl PyScatterResult {
    fn __repr__(&self) -> String {
        format!("ScatterResult(probabilities={:?}, norm_drift={:.1e})", self.probabilities, self.norm_drift)
    }
}

/// Scatter from diabatic level `level` (0-based) over `(−T, T)`.
#[pyfunction]
#[pyo3(signature = (model, level, config=None))]
fn propagate_scattering(py: Python<'_>, model: &PyModel, level: usize, config: Option<&PyConfig>) -> PyResult<PyScatterResult> {
    check_level(model, level)?;
    let cfg = self::config(config)?;
    let m = model.0.clone();
    py.detach(move || propagator::propagate_scattering(&m, level, &cfg)).map(Into::into).map_err(err)
}

/// Start on level `level` just after `t = 0` and propagate to `T`.
#[pyfunction]
#[pyo3(signature = (model, level, config=None))]
fn propagate_coulomb_halfline(py: Python<'_>, model: &PyModel, level: usize, config: Option<&PyConfig>) -> PyResult<PyScatterResult> {
    check_level(model, level)?;
    let cfg = self::config(config)?;
    let m = model.0.clone();
    py.detach(move || propagator::propagate_coulomb_halfline(&m, level, &cfg)).map(Into::into).map_err(err)
}

fn check_level(model: &PyModel, level: usize) -> PyResult<()> {
    if level >= model.0.n() {
        return Err(PyValueError::new_err(format!("level {level} out of range for {} levels", model.0.n())));
    }
    Ok(())
}

/// Full matrix `P[n][m]` of probabilities from level n to level m.
#[pyfunction]
#[pyo3(signature = (model, config=None))]
fn transition_matrix(py: Python<'_>, model: &PyModel, config: Option<&PyConfig>) -> PyResult<Vec<Vec<f64>>> {
    let cfg = self::config(config)?;
    let m = model.0.clone();
    py.detach(move || propagator::transition_matrix(&m, &cfg)).map(|r| r.matrix.p).map_err(err)
}

fn slope_map(name: &str, exponent: Option<f64>) -> PyResult<SlopeMap> {
    Ok(match name {
        "first_linear" => SlopeMap::FirstLinear,
        "constant" => SlopeMap::Constant,
        "opposed" => SlopeMap::Opposed,
        "first_power" => SlopeMap::FirstPower {
            exponent: exponent.ok_or_else(|| PyValueError::new_err("first_power needs an exponent"))?,
        },
        s => return Err(PyValueError::new_err(format!("unknown slope map {s:?}"))),
    })
}

fn breakage(name: &str) -> PyResult<Breakage> {
    Ok(match name {
        "none" => Breakage::None,
        "frozen_epsilon" => Breakage::FrozenEpsilon,
        "frozen_couplings" => Breakage::FrozenCouplings,
        s => return Err(PyValueError::new_err(format!("unknown breakage {s:?}"))),
    })
}

/// τ-parametrized three-state family with real couplings.
#[pyclass(name = "ThreeStateFamily", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFamily(families::ThreeStateFamily);

#[pymethods]
impl PyFamily {
    #[new]
    #[pyo3(signature = (gamma12, gamma13, gamma23, eps0, beta1=1.0, beta2=1.0, slope_map="first_linear", exponent=None, breakage="none"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        gamma12: f64,
        gamma13: f64,
        gamma23: f64,
        eps0: f64,
        beta1: f64,
        beta2: f64,
        slope_map: &str,
        exponent: Option<f64>,
        breakage: &str,
    ) -> PyResult<Self> {
        let f = families::ThreeStateFamily::real(gamma12, gamma13, gamma23, eps0, beta1, beta2)
            .with_slope_map(self::slope_map(slope_map, exponent)?)
            .broken(self::breakage(breakage)?);
        f.validate().map_err(err)?;
        Ok(Self(f))
    }

    fn model(&self, tau: f64) -> PyResult<PyModel> {
        self.0.model(tau).map(PyModel).map_err(err)
    }

    /// `(Q, L, D)` of the time-quadratic partner at τ.
    fn partner(&self, tau: f64) -> PyResult<(Vec<f64>, Rows, Rows)> {
        let p = self.0.partner(tau).map_err(err)?;
        Ok((p.q, rows(&p.l), rows(&p.d)))
    }

    fn triangle_area(&self, tau: f64) -> PyResult<f64> {
        self.0.triangle_area(tau).map_err(err)
    }
}

#[pyclass(name = "InvarianceReport", get_all, frozen)]
struct PyInvariance {
    tau: Vec<f64>,
    matrices: Vec<Vec<Vec<f64>>>,
    deviation_from_reference: f64,
    max_pairwise_deviation: f64,
    max_norm_drift: f64,
    max_residual: f64,
}

#[pyfunction]
#[pyo3(signature = (family, tau, config=None))]
fn invariance_sweep(py: Python<'_>, family: &PyFamily, tau: Vec<f64>, config: Option<&PyConfig>) -> PyResult<PyInvariance> {
    let cfg = self::config(config)?;
    let f = family.0.clone();
    let r = py.detach(move || integrability::invariance_sweep(&f, &tau, &cfg)).map_err(err)?;
    Ok(PyInvariance {
        tau: r.tau,
        matrices: r.matrices.into_iter().map(|m| m.p).collect(),
        deviation_from_reference: r.deviation_from_reference,
        max_pairwise_deviation: r.max_pairwise_deviation,
        max_norm_drift: r.max_norm_drift,
        max_residual: r.max_residual,
    })
}

#[pyclass(name = "ResidualReport", get_all, frozen)]
struct PyResidual {
    max_flatness: Option<f64>,
    max_commutator: Option<f64>,
    slope_coupling: f64,
    partner_slope: f64,
    partner_commutes: f64,
    max: f64,
}

impl From<ResidualReport> for PyResidual {
    fn from(r: ResidualReport) -> Self {
        Self {
            max: r.max(),
            max_flatness: r.max_flatness,
            max_commutator: r.max_commutator,
            slope_coupling: r.slope_coupling,
            partner_slope: r.partner_slope,
            partner_commutes: r.partner_commutes,
        }
    }
}

/// Zero-curvature and commutation residuals of the family on a (τ, t) grid.
#[pyfunction]
#[pyo3(signature = (family, tau=None, t=None))]
fn check_zero_curvature(family: &PyFamily, tau: Option<Vec<f64>>, t: Option<Vec<f64>>) -> PyResult<PyResidual> {
    let tau = tau.unwrap_or_else(integrability::default_tau_grid);
    let t = t.unwrap_or_else(integrability::default_t_grid);
    integrability::check_zero_curvature(&family.0, &tau, &t).map(Into::into).map_err(err)
}

#[pyfunction]
fn demo_three_state(b: f64, g: f64, eps: f64) -> PyResult<PyModel> {
    families::demo_three_state(b, g, eps).map(PyModel).map_err(err)
}

#[pyfunction]
fn reduced_two_state(b: f64, g: f64, eps: f64) -> PyResult<PyModel> {
    families::reduced_two_state(b, g, eps).map(PyModel).map_err(err)
}

/// First `n_levels` states of the bosonic chain, q-deformed when `q != 1`.
#[pyfunction]
#[pyo3(signature = (n_levels, beta, g, q=1.0))]
fn bosonic_chain(n_levels: usize, beta: f64, g: f64, q: f64) -> PyResult<PyModel> {
    families::bosonic_chain_sector(n_levels, beta, g)
        .and_then(|c| c.q_deform(q))
        .and_then(|c| c.model())
        .map(PyModel)
        .map_err(err)
}

/// Four-level model with `g1 = g e^{iφ}` and the other couplings `g`.
#[pyfunction]
fn four_state_model(b: f64, g: f64, phi: f64) -> PyResult<PyModel> {
    FourStateParams::phase_sweep(b, g, phi).model().map(PyModel).map_err(err)
}

#[pyclass(name = "DykhneResult", get_all, frozen)]
struct PyDykhne {
    t1: Complex64,
    t2: Complex64,
    action: f64,
    p: f64,
    eta: f64,
    tie: bool,
}

#[pyfunction]
#[pyo3(signature = (b, g, eps, eta=1.0))]
fn dykhne(b: f64, g: f64, eps: f64, eta: f64) -> PyResult<PyDykhne> {
    let r = semiclassical::dykhne(b, g, eps, eta).map_err(err)?;
    Ok(PyDykhne { t1: r.t1, t2: r.t2, action: r.action, p: r.p, eta: r.eta, tie: r.tie })
}

#[pyfunction]
#[pyo3(signature = (b, g, eps, eta=1.0))]
fn p3_semiclassical(b: f64, g: f64, eps: f64, eta: f64) -> PyResult<f64> {
    semiclassical::p3_semiclassical(b, g, eps, eta).map_err(err)
}

/// `(P11, P14, P_degenerate)` of the four-level model.
#[pyfunction]
fn p14_exact(b: f64, g: f64, phi: f64) -> PyResult<(f64, f64, f64)> {
    semiclassical::p14_exact(&FourStateParams::phase_sweep(b, g, phi)).map_err(err)
}

#[pyfunction]
fn p22_exact_eps0(g: f64, b: f64) -> f64 {
    semiclassical::p22_exact_eps0(g, b)
}

#[pyfunction]
fn avg_n_exact(g: f64, beta: f64) -> f64 {
    semiclassical::avg_n_exact(g, beta)
}

#[pyfunction]
fn be_survival(adiabaticity: Vec<Complex64>) -> f64 {
    semiclassical::be_survival(&adiabaticity)
}

#[pymodule]
fn mlz(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NotConvergedError", m.py().get_type::<NotConvergedError>())?;
    m.add("DegenerateSlopesError", m.py().get_type::<DegenerateSlopesError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyScatterResult>()?;
    m.add_class::<PyFamily>()?;
    m.add_class::<PyInvariance>()?;
    m.add_class::<PyResidual>()?;
    m.add_class::<PyDykhne>()?;
    m.add_function(wrap_pyfunction!(propagate_scattering, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_coulomb_halfline, m)?)?;
    m.add_function(wrap_pyfunction!(transition_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(invariance_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(check_zero_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(demo_three_state, m)?)?;
    m.add_function(wrap_pyfunction!(reduced_two_state, m)?)?;
    m.add_function(wrap_pyfunction!(bosonic_chain, m)?)?;
    m.add_function(wrap_pyfunction!(four_state_model, m)?)?;
    m.add_function(wrap_pyfunction!(dykhne, m)?)?;
    m.add_function(wrap_pyfunction!(p3_semiclassical, m)?)?;
    m.add_function(wrap_pyfunction!(p14_exact, m)?)?;
    m.add_function(wrap_pyfunction!(p22_exact_eps0, m)?)?;
    m.add_function(wrap_pyfunction!(avg_n_exact, m)?)?;
    m.add_function(wrap_pyfunction!(be_survival, m)?)?;
    Ok(())
}
