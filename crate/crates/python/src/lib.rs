//! Python bindings for `pqlap`.
//!
//! Reports that already serialize to JSON (classification, energy reports)
//! are handed to Python as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use pqlap::energy::{e1_evaluate, e2_evaluate, geometric_radii, interior_radii, EnergyOptions};
use pqlap::io::{to_json, TrajectoryFile};
use pqlap::operator::{residual, GridFunctionPair};
use pqlap::shooting::{find_brackets, integral_form_residual, rescale_trajectory};

fn err(e: pqlap::Error) -> PyErr {
    match e {
        pqlap::Error::InvalidParams(_) | pqlap::Error::OutOfRange(_) | pqlap::Error::NotSuperhomogeneous { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = to_json(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn outcome_name(o: &pqlap::Outcome) -> &'static str {
    match o {
        pqlap::Outcome::UZeroFirst => "UZeroFirst",
        pqlap::Outcome::VZeroFirst => "VZeroFirst",
        pqlap::Outcome::Simultaneous(_) => "Simultaneous",
        pqlap::Outcome::NoZeroUpTo(_) => "NoZeroUpTo",
    }
}

#[pyclass(name = "ProblemParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams(pqlap::ProblemParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (n, p, q, delta, mu, radius=None))]
    fn new(n: u32, p: f64, q: f64, delta: f64, mu: f64, radius: Option<f64>) -> PyResult<Self> {
        let params = pqlap::ProblemParams::new(n, p, q, delta, mu).map_err(err)?;
        let params = match radius {
            Some(r) => params.with_radius(r).map_err(err)?,
            None => params,
        };
        Ok(PyParams(params))
    }

    #[getter]
    fn n(&self) -> u32 {
        self.0.n
    }
    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }
    #[getter]
    fn q(&self) -> f64 {
        self.0.q
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }
    #[getter]
    fn radius(&self) -> Option<f64> {
        self.0.radius
    }

    /// Closed-form quantities (`d`, `α`, `β`, `k1`, `k2`, `m_under`, `m_over`) as a dict.
    fn derived<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &pqlap::DerivedExponents::from_params(&self.0))
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "ProblemParams(n={}, p={}, q={}, delta={}, mu={}, radius={:?})",
            p.n, p.p, p.q, p.delta, p.mu, p.radius
        )
    }
}

#[pyclass(name = "Trajectory", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTrajectory(pqlap::Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn params(&self) -> PyParams {
        PyParams(self.0.params)
    }
    #[getter]
    fn a0(&self) -> f64 {
        self.0.a0
    }
    #[getter]
    fn b0(&self) -> f64 {
        self.0.b0
    }
    /// One of `UZeroFirst`, `VZeroFirst`, `Simultaneous`, `NoZeroUpTo`.
    #[getter]
    fn outcome(&self) -> &'static str {
        outcome_name(&self.0.outcome)
    }
    #[getter]
    fn last_radius(&self) -> f64 {
        self.0.last_radius()
    }
    /// `(r, u, v, flux_u, flux_v)` per node.
    #[getter]
    fn nodes(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        self.0
            .nodes
            .iter()
            .map(|s| (s.r, s.u, s.v, s.flux_u, s.flux_v))
            .collect()
    }
    fn __len__(&self) -> usize {
        self.0.nodes.len()
    }

    fn to_json(&self) -> PyResult<String> {
        TrajectoryFile::from_trajectory(&self.0)
            .to_json()
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        TrajectoryFile::from_json(text)
            .map(|f| PyTrajectory(f.to_trajectory()))
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn integral_form_residual(&self) -> f64 {
        integral_form_residual(&self.0)
    }

    /// The σ-map to the ball of radius `R/σ`.
    fn rescale(&self, sigma: f64) -> PyResult<Self> {
        rescale_trajectory(&self.0, sigma).map(PyTrajectory).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(outcome={}, nodes={}, last_radius={})",
            self.outcome(),
            self.0.nodes.len(),
            self.last_radius()
        )
    }
}

fn shooting_options(rtol: f64, r_max: f64) -> pqlap::ShootingOptions {
    pqlap::ShootingOptions {
        rtol,
        r_max,
        ..pqlap::ShootingOptions::default()
    }
}

/// Verdict and per-condition margins.
#[pyfunction]
fn classify<'py>(py: Python<'py>, params: &PyParams) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &pqlap::classify(&params.0).map_err(err)?)
}

#[pyfunction]
fn m_window(n: u32) -> (f64, f64) {
    pqlap::classifier::m_window(n)
}

#[pyfunction]
fn region_boundaries<'py>(py: Python<'py>, n: u32, m: f64, mu_grid: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &pqlap::classifier::region_boundaries(n, m, &mu_grid))
}

/// Integrates from `r = 0` with `u(0) = a0`, `v(0) = b0` up to the first zero.
#[pyfunction]
#[pyo3(signature = (params, a0, b0, r_max=1e4, rtol=1e-10))]
fn integrate(py: Python<'_>, params: &PyParams, a0: f64, b0: f64, r_max: f64, rtol: f64) -> PyResult<PyTrajectory> {
    let opts = shooting_options(rtol, r_max);
    let p = params.0;
    py.detach(|| pqlap::integrate_to_first_zero(&p, a0, b0, r_max, &opts))
        .map(PyTrajectory)
        .map_err(err)
}

/// `[(b, outcome or None)]` over a geometric grid of `v(0)` values.
#[pyfunction]
#[pyo3(signature = (params, a0=1.0, b_min=1e-3, b_max=1e3, count=60, r_max=1e4))]
fn scan(
    py: Python<'_>,
    params: &PyParams,
    a0: f64,
    b_min: f64,
    b_max: f64,
    count: usize,
    r_max: f64,
) -> PyResult<Vec<(f64, Option<&'static str>)>> {
    let opts = shooting_options(1e-10, r_max);
    let p = params.0;
    let entries = py
        .detach(|| pqlap::shoot_scan(&p, a0, b_min, b_max, count, r_max, &opts))
        .map_err(err)?;
    Ok(entries
        .iter()
        .map(|e| (e.b, e.outcome.as_ref().ok().map(outcome_name)))
        .collect())
}

/// Dirichlet solution on the ball of radius `params.radius`; returns the
/// rescaled trajectory and `b*`. Without a bracket a default scan is run first.
#[pyfunction]
#[pyo3(signature = (params, a0=1.0, bracket=None, r_max=1e4))]
fn solve(
    py: Python<'_>,
    params: &PyParams,
    a0: f64,
    bracket: Option<(f64, f64)>,
    r_max: f64,
) -> PyResult<(PyTrajectory, f64)> {
    let opts = shooting_options(1e-10, r_max);
    let p = params.0;
    let result = py.detach(|| -> pqlap::Result<pqlap::DirichletSolution> {
        let brackets = match bracket {
            Some(b) => vec![b],
            None => find_brackets(&pqlap::shoot_scan(&p, a0, 1e-3, 1e3, 60, r_max, &opts)?),
        };
        let mut last = pqlap::Error::InvalidBracket("no bracket found".into());
        for b in brackets {
            match pqlap::solve_dirichlet(&p, a0, b, &opts) {
                Ok(sol) => return Ok(sol),
                Err(e) => last = e,
            }
        }
        Err(last)
    });
    let sol = result.map_err(err)?;
    Ok((PyTrajectory(sol.trajectory), sol.b_star))
}

/// `(‖T(u, v) − (u, v)‖∞, ‖u‖∞ + ‖v‖∞)` on the trajectory nodes.
#[pyfunction]
fn operator_residual(py: Python<'_>, traj: &PyTrajectory) -> PyResult<(f64, f64)> {
    let t = &traj.0;
    py.detach(|| {
        let pair = GridFunctionPair::from_trajectory(t)?;
        let res = residual(&pair, &t.params, pair.radius())?;
        Ok((res, pair.sup_norm()))
    })
    .map_err(err)
}

/// Energy report as a dict: `E2` for trajectories ending at a zero, `E1`
/// (geometric samples in `[r_lo, r_hi]`) for positive ones.
#[pyfunction]
#[pyo3(signature = (traj, samples=60, r_lo=1e-2, r_hi=None))]
fn energy_check<'py>(
    py: Python<'py>,
    traj: &PyTrajectory,
    samples: usize,
    r_lo: f64,
    r_hi: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let t = &traj.0;
    let opts = EnergyOptions::default();
    let report = py.detach(|| {
        let (r0, last) = (t.nodes[0].r, t.last_radius());
        if matches!(t.outcome, pqlap::Outcome::NoZeroUpTo(_)) {
            let hi = r_hi.unwrap_or(1e-10 * last);
            e1_evaluate(t, &geometric_radii(r_lo, hi, samples), &opts)
        } else {
            e2_evaluate(t, &interior_radii(r0, last, samples, 1e-3 * (last - r0)), &opts)
        }
    });
    to_py(py, &report.map_err(err)?)
}

#[pymodule]
#[pyo3(name = "pqlap")]
fn pqlap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(m_window, m)?)?;
    m.add_function(wrap_pyfunction!(region_boundaries, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(operator_residual, m)?)?;
    m.add_function(wrap_pyfunction!(energy_check, m)?)?;
    Ok(())
}
