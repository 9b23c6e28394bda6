//! Python bindings: parameters, terrains and the main pipelines.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pulselab::dynamics::{self, DaeOptions, Family, Regime};
use pulselab::model::{self, ModelParams};
use pulselab::pde::{self, Boundary, PdeState, ReactionTreatment, RunOptions, StepOptions};
use pulselab::pulse::{self, Branch};
use pulselab::slowfield::{self, SlowGrid};
use pulselab::spectrum::{self, FastGrid, SmallEigForm, SmallEigInput};
use pulselab::PulseError;

fn err(e: PulseError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn branch(name: &str) -> PyResult<Branch> {
    match name {
        "minus" => Ok(Branch::Minus),
        "plus" => Ok(Branch::Plus),
        other => Err(PyValueError::new_err(format!("branch must be 'minus' or 'plus', got '{other}'"))),
    }
}

fn dae(mu: Option<f64>) -> DaeOptions {
    match mu {
        Some(mu) => DaeOptions { regime: Regime::Finite { mu }, ..Default::default() },
        None => DaeOptions::default(),
    }
}

#[pyclass(name = "ModelParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: ModelParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (a, m, d))]
    fn new(a: f64, m: f64, d: f64) -> PyResult<Self> {
        Ok(Self { inner: ModelParams::new(a, m, d).map_err(err)? })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn m(&self) -> f64 {
        self.inner.m
    }

    #[getter]
    fn d(&self) -> f64 {
        self.inner.d
    }

    /// `(epsilon, mu, tau, nu)`
    fn scales(&self) -> (f64, f64, f64, f64) {
        let s = model::derive_scales(&self.inner);
        (s.epsilon, s.mu, s.tau, s.nu)
    }

    fn __repr__(&self) -> String {
        format!("ModelParams(a={}, m={}, d={})", self.inner.a, self.inner.m, self.inner.d)
    }
}

#[pyclass(name = "Terrain", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTerrain {
    inner: pulselab::terrain::Terrain,
}

#[pymethods]
impl PyTerrain {
    /// Spec string such as `"flat"`, `"gaussian:1:0.5"` or `"scaled:0.01:sech:1:1"`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self { inner: pulselab::terrain::Terrain::parse(spec).map_err(err)? })
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn symmetric(&self) -> bool {
        self.inner.symmetric
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.kind.label()
    }

    /// `(f(x), g(x))`
    fn eval(&self, x: f64) -> PyResult<(f64, f64)> {
        self.inner.eval(x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Terrain('{}')", self.inner.kind.label())
    }
}

#[pyfunction]
fn check_assumptions<'py>(py: Python<'py>, params: &PyParams, terrain: &PyTerrain) -> PyResult<Bound<'py, PyDict>> {
    let r = model::check_assumptions(&params.inner, &terrain.inner);
    let d = PyDict::new(py);
    d.set_item("a1", r.a1)?;
    d.set_item("a2", r.a2)?;
    d.set_item("a3", r.a3)?;
    d.set_item("a4", r.a4)?;
    d.set_item("a5", r.a5)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("delta", r.delta)?;
    Ok(d)
}

/// `(u0_minus, u0_plus)`; either entry is `None` when that root is not positive and real.
#[pyfunction]
fn compute_u0(ub0: f64, cs0: f64, mu: f64) -> PyResult<(Option<f64>, Option<f64>)> {
    let r = pulse::compute_u0(ub0, cs0, mu).map_err(err)?;
    Ok((r.minus, r.plus))
}

#[pyfunction]
fn solve_slowfield<'py>(py: Python<'py>, terrain: &PyTerrain) -> PyResult<Bound<'py, PyDict>> {
    let sol = slowfield::solve(&terrain.inner, &SlowGrid::for_terrain(&terrain.inner)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("ub0", sol.ub0())?;
    d.set_item("cs0", sol.cs0)?;
    d.set_item("cu0", sol.cu0)?;
    d.set_item("x", sol.grid)?;
    d.set_item("u_b", sol.u_b)?;
    d.set_item("u_plus", sol.u_plus)?;
    d.set_item("u_minus", sol.u_minus)?;
    Ok(d)
}

#[pyfunction]
fn existence_check<'py>(py: Python<'py>, terrain: &PyTerrain, params: &PyParams) -> PyResult<Bound<'py, PyDict>> {
    let r = pulse::existence_check(&terrain.inner, &params.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("exists", r.exists)?;
    d.set_item("ub0", r.ub0)?;
    d.set_item("cs0", r.cs0)?;
    d.set_item("discriminant", r.discriminant)?;
    d.set_item("u0_minus", r.roots.and_then(|x| x.minus))?;
    d.set_item("u0_plus", r.roots.and_then(|x| x.plus))?;
    d.set_item("failure", r.failure())?;
    Ok(d)
}

/// Leading-order profile in physical variables: `x`, `U`, `V` plus `u0`.
#[pyfunction]
#[pyo3(signature = (terrain, params, branch_name = "minus"))]
fn assemble_profile<'py>(
    py: Python<'py>,
    terrain: &PyTerrain,
    params: &PyParams,
    branch_name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let p = pulse::assemble_profile(&terrain.inner, &params.inner, branch(branch_name)?).map_err(err)?;
    let (x, u, v) = p.physical();
    let d = PyDict::new(py);
    d.set_item("u0", p.u0)?;
    d.set_item("x", x)?;
    d.set_item("U", u)?;
    d.set_item("V", v)?;
    Ok(d)
}

/// `R(lambda)` of the fast nonlocal problem.
#[pyfunction]
fn eval_r(lambda: Complex64) -> PyResult<Complex64> {
    Ok(spectrum::eval_r(lambda, &FastGrid::default()).map_err(err)?.r)
}

#[pyfunction]
#[pyo3(signature = (half_width = 40.0, n = 4000, k = 3))]
fn reduced_operator_eigs(half_width: f64, n: usize, k: usize) -> PyResult<Vec<f64>> {
    spectrum::reduced_operator_eigs(half_width, n, k).map_err(err)
}

/// Real roots of `t22` (scaled eigenvalue) for one pulse branch.
#[pyfunction]
#[pyo3(signature = (terrain, params, branch_name = "minus"))]
fn large_eigenvalues(terrain: &PyTerrain, params: &PyParams, branch_name: &str) -> PyResult<Vec<f64>> {
    let r = spectrum::find_large_eigs(&terrain.inner, &params.inner, branch(branch_name)?, &Default::default())
        .map_err(err)?;
    Ok(r.roots)
}

#[pyfunction]
#[pyo3(signature = (form, terrain, tau, mu, u0, sigma = 1.0))]
fn small_eigenvalue(form: &str, terrain: &PyTerrain, tau: f64, mu: f64, u0: f64, sigma: f64) -> PyResult<f64> {
    let f = match form {
        "general" => SmallEigForm::General,
        "double-limit" => SmallEigForm::DoubleLimit,
        "height-function" => SmallEigForm::HeightFunction,
        "height-function-limit" => SmallEigForm::HeightFunctionLimit,
        "weak-curvature" => SmallEigForm::WeakCurvature { sigma },
        "strong-curvature" => SmallEigForm::StrongCurvature { sigma },
        other => return Err(PyValueError::new_err(format!("unknown form '{other}'"))),
    };
    let inp = SmallEigInput::from_terrain(&terrain.inner, tau, mu, u0);
    Ok(spectrum::small_eigenvalue(f, &inp).map_err(err)?.lambda)
}

#[pyfunction]
#[pyo3(signature = (terrain, positions, tau, mu = None))]
fn pulse_velocity(terrain: &PyTerrain, positions: Vec<f64>, tau: f64, mu: Option<f64>) -> PyResult<Vec<f64>> {
    dynamics::pulse_velocity(&terrain.inner, &positions, tau, &dae(mu)).map_err(err)
}

/// `(times, positions)` of the pulse-location ODE.
#[pyfunction]
#[pyo3(signature = (terrain, initial, t_end, tau, rtol = 1e-6, mu = None))]
fn integrate_pulse_ode(
    terrain: &PyTerrain,
    initial: Vec<f64>,
    t_end: f64,
    tau: f64,
    rtol: f64,
    mu: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let t = dynamics::integrate_pulse_ode(&terrain.inner, &initial, t_end, tau, rtol, &dae(mu)).map_err(err)?;
    Ok((t.times, t.positions))
}

#[pyfunction]
#[pyo3(signature = (terrain, lo, hi, mu = None))]
fn find_fixed_points(terrain: &PyTerrain, lo: f64, hi: f64, mu: Option<f64>) -> PyResult<Vec<f64>> {
    dynamics::find_fixed_points(&terrain.inner, lo, hi, &dae(mu)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (terrain, p, tau, mu = None))]
fn fixed_point_eigenvalue(terrain: &PyTerrain, p: f64, tau: f64, mu: Option<f64>) -> PyResult<f64> {
    Ok(dynamics::fixed_point_eigenvalue(&terrain.inner, p, tau, &dae(mu)).map_err(err)?.lambda)
}

/// Curvature `B_c` at which the centred pulse changes stability, if bracketed.
#[pyfunction]
fn critical_curvature(family: &str, amplitude: f64, b_lo: f64, b_hi: f64) -> PyResult<Option<f64>> {
    let fam: Family = family.parse().map_err(err)?;
    dynamics::critical_curvature(fam, amplitude, b_lo, b_hi, &DaeOptions::default()).map_err(err)
}

#[pyfunction]
fn two_pulse_t(p: f64, beta: f64) -> f64 {
    dynamics::two_pulse_t(p, beta)
}

#[pyfunction]
fn two_pulse_root(beta: f64) -> PyResult<f64> {
    dynamics::two_pulse_root(beta).map_err(err)
}

/// PDE run from seeded pulses; returns `times`, `tracks`, `x`, `U`, `V`, `steady`.
#[pyfunction]
#[pyo3(signature = (params, terrain, positions, t_end, sample_dt, x_lo = -30.0, x_hi = 30.0, dt = None, dx = None, periodic = false))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    params: &PyParams,
    terrain: &PyTerrain,
    positions: Vec<f64>,
    t_end: f64,
    sample_dt: f64,
    x_lo: f64,
    x_hi: f64,
    dt: Option<f64>,
    dx: Option<f64>,
    periodic: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let p = &params.inner;
    let boundary = if periodic { Boundary::Periodic } else { Boundary::Neumann };
    let x = PdeState::grid(x_lo, x_hi, dx.unwrap_or_else(|| pde::default_dx(p)), boundary).map_err(err)?;
    let (u, v) = pde::seed_pulses(p, &x, &positions);
    let init = PdeState::new(x, u, v, boundary).map_err(err)?;
    let opts = RunOptions {
        step: StepOptions { dt: dt.unwrap_or_else(|| pde::default_dt(p)), reaction: ReactionTreatment::LinearlyImplicit },
        t_end,
        sample_dt,
        steady_tol: 1e-9,
        keep_snapshots: false,
    };
    let run = py.detach(|| pde::run(p, &terrain.inner, init, &opts)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("times", run.times)?;
    d.set_item("tracks", run.tracks)?;
    d.set_item("steady", run.steady)?;
    d.set_item("x", run.final_state.x)?;
    d.set_item("U", run.final_state.u)?;
    d.set_item("V", run.final_state.v)?;
    Ok(d)
}

#[pymodule]
fn pulselab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyTerrain>()?;
    m.add_function(wrap_pyfunction!(check_assumptions, m)?)?;
    m.add_function(wrap_pyfunction!(compute_u0, m)?)?;
    m.add_function(wrap_pyfunction!(solve_slowfield, m)?)?;
    m.add_function(wrap_pyfunction!(existence_check, m)?)?;
    m.add_function(wrap_pyfunction!(assemble_profile, m)?)?;
    m.add_function(wrap_pyfunction!(eval_r, m)?)?;
    m.add_function(wrap_pyfunction!(reduced_operator_eigs, m)?)?;
    m.add_function(wrap_pyfunction!(large_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(small_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(pulse_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_pulse_ode, m)?)?;
    m.add_function(wrap_pyfunction!(find_fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_point_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(critical_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(two_pulse_t, m)?)?;
    m.add_function(wrap_pyfunction!(two_pulse_root, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
