//! The integral operator
//!
//! ```text
//! T(u, v)(r) = ( ∫_r^R (s^{1−N} ∫₀^s t^{N−1}|v|^δ dt)^{1/(p−1)} ds ,
//!                ∫_r^R (s^{1−N} ∫₀^s t^{N−1}|u|^μ dt)^{1/(q−1)} ds )
//! ```
//!
//! on pairs of grid functions over `[0, R]`, used as a residual oracle for
//! shooting solutions and as a plain Picard iterator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::{gauss_kronrod_15, integrate, MonotoneCubic};
use crate::shooting::Trajectory;

pub const QUADRATURE_ABS_TOL: f64 = 1e-10;
pub const QUADRATURE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunctionPair {
    pub radii: Vec<f64>,
    pub u_values: Vec<f64>,
    pub v_values: Vec<f64>,
}

impl GridFunctionPair {
    pub fn new(radii: Vec<f64>, u_values: Vec<f64>, v_values: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != u_values.len() || radii.len() != v_values.len() {
            return Err(Error::Domain(
                "grid pair needs at least two nodes and matching lengths".into(),
            ));
        }
        if radii[0] != 0.0 {
            return Err(Error::Domain(format!("grid must start at r = 0, got {}", radii[0])));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("radii must increase strictly".into()));
        }
        if u_values.iter().chain(&v_values).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Domain("grid values must be finite and nonnegative".into()));
        }
        Ok(GridFunctionPair {
            radii,
            u_values,
            v_values,
        })
    }

    pub fn zeros(radii: Vec<f64>) -> Result<Self> {
        let n = radii.len();
        Self::new(radii, vec![0.0; n], vec![0.0; n])
    }

    /// Node values of a positive trajectory, with `(0, a0, b0)` prepended.
    /// Roundoff-level negatives at the final zero are clamped to 0.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let mut radii = vec![0.0];
        let mut u = vec![traj.a0];
        let mut v = vec![traj.b0];
        for s in traj.nodes.iter().filter(|s| s.r > 0.0) {
            radii.push(s.r);
            u.push(s.u.max(0.0));
            v.push(s.v.max(0.0));
        }
        Self::new(radii, u, v)
    }

    pub fn radius(&self) -> f64 {
        *self.radii.last().expect("validated nonempty")
    }

    pub fn sup_norm(&self) -> f64 {
        let m = |xs: &[f64]| xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        m(&self.u_values) + m(&self.v_values)
    }
}

/// `r ↦ ∫_r^R (s^{1−N} ∫₀^s t^{N−1}|w|^e dt)^{1/(m−1)} ds` at the nodes, with
/// the accumulated quadrature error estimate.
fn apply_component(radii: &[f64], w: &[f64], n: u32, m: f64, e: f64) -> Result<(Vec<f64>, f64)> {
    let interp = MonotoneCubic::new(radii.to_vec(), w.to_vec())?;
    let nm1 = n as i32 - 1;
    let inner_integrand = |t: f64| t.powi(nm1) * interp.eval(t).abs().powf(e);
    let big_r = *radii.last().unwrap();
    let k = radii.len();

    let mut inner = vec![0.0; k];
    let mut err = 0.0;
    for j in 0..k - 1 {
        let (a, b) = (radii[j], radii[j + 1]);
        let piece = integrate(
            inner_integrand,
            a,
            b,
            QUADRATURE_ABS_TOL * (b - a) / big_r,
            QUADRATURE_REL_TOL,
        )?;
        inner[j + 1] = inner[j] + piece.value;
        err += piece.error;
    }

    let mut out = vec![0.0; k];
    for j in (0..k - 1).rev() {
        let (a, b) = (radii[j], radii[j + 1]);
        let base = inner[j];
        let outer = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let (partial, _) = gauss_kronrod_15(&inner_integrand, a, s);
            ((base + partial).max(0.0) / s.powi(nm1)).powf(1.0 / (m - 1.0))
        };
        let piece = integrate(outer, a, b, QUADRATURE_ABS_TOL * (b - a) / big_r, QUADRATURE_REL_TOL)?;
        out[j] = out[j + 1] + piece.value;
        err += piece.error;
    }
    Ok((out, err))
}

fn check_radius(pair: &GridFunctionPair, radius: f64) -> Result<()> {
    let last = pair.radius();
    if (last - radius).abs() > 1e-12 * radius.max(1.0) {
        return Err(Error::Domain(format!(
            "grid ends at {last}, expected the ball radius {radius}"
        )));
    }
    Ok(())
}

/// `T(pair)` on the same nodes together with a quadrature error estimate.
pub fn apply_t_with_error(
    pair: &GridFunctionPair,
    params: &ProblemParams,
    radius: f64,
) -> Result<(GridFunctionPair, f64)> {
    check_radius(pair, radius)?;
    let (tu, eu) = apply_component(&pair.radii, &pair.v_values, params.n, params.p, params.delta)?;
    let (tv, ev) = apply_component(&pair.radii, &pair.u_values, params.n, params.q, params.mu)?;
    if tu.iter().chain(&tv).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { r: radius });
    }
    Ok((
        GridFunctionPair {
            radii: pair.radii.clone(),
            u_values: tu,
            v_values: tv,
        },
        eu.max(ev),
    ))
}

pub fn apply_t(pair: &GridFunctionPair, params: &ProblemParams, radius: f64) -> Result<GridFunctionPair> {
    apply_t_with_error(pair, params, radius).map(|(p, _)| p)
}

fn sup_distance(a: &GridFunctionPair, b: &GridFunctionPair) -> f64 {
    a.u_values
        .iter()
        .zip(&b.u_values)
        .chain(a.v_values.iter().zip(&b.v_values))
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `‖T(pair) − pair‖_∞` over the nodes.
pub fn residual(pair: &GridFunctionPair, params: &ProblemParams, radius: f64) -> Result<f64> {
    let t = apply_t(pair, params, radius)?;
    Ok(sup_distance(&t, pair))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardResult {
    pub pair: GridFunctionPair,
    pub converged: bool,
    /// Residual of each iterate, starting with the initial pair.
    pub history: Vec<f64>,
}

/// Iterates `pair ← T(pair)` until the residual drops to `tol` or `max_iter`
/// applications have been made. Divergence is a reported outcome.
pub fn picard_iterate(
    initial: &GridFunctionPair,
    params: &ProblemParams,
    radius: f64,
    max_iter: usize,
    tol: f64,
) -> Result<PicardResult> {
    let mut pair = initial.clone();
    let mut history = Vec::new();
    let mut next = apply_t(&pair, params, radius)?;
    for _ in 0..=max_iter {
        let res = sup_distance(&next, &pair);
        if !res.is_finite() {
            return Err(Error::NonFinite { r: radius });
        }
        history.push(res);
        if res <= tol {
            return Ok(PicardResult {
                pair,
                converged: true,
                history,
            });
        }
        if history.len() > max_iter {
            break;
        }
        pair = next;
        next = apply_t(&pair, params, radius)?;
    }
    Ok(PicardResult {
        pair,
        converged: false,
        history,
    })
}
