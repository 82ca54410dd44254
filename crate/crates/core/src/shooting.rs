//! Radial shooting: series startup at `r₀`, adaptive integration of the
//! flux form of the system up to the first zero, bisection on `v(0)` for the
//! Dirichlet problem, and the σ-scaling between ball radii.
//!
//! The integrated state is `(u, v, flux_u, flux_v)` with
//! `flux_u = r^{N-1} φ_p(u')`, so that
//!
//! ```text
//! u' = φ_p⁻¹(flux_u / r^{N-1}),   flux_u' = −r^{N-1} max(v, 0)^δ
//! v' = φ_q⁻¹(flux_v / r^{N-1}),   flux_v' = −r^{N-1} max(u, 0)^μ
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{dopri5_step, next_step_size, OdeSystem, Tolerance};
use crate::params::{compute_alpha_beta, compute_d, verify_exponent_identities, ProblemParams};
use crate::quadrature::{cumulative_integral, hermite};

/// `φ_m(x) = |x|^{m−2} x`.
#[inline]
pub fn phi(m: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(m - 2.0) * x
    }
}

/// Inverse of [`phi`]: `|s|^{1/(m−1)} sign(s)`.
#[inline]
pub fn phi_inv(m: f64, s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.abs().powf(1.0 / (m - 1.0)).copysign(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub r: f64,
    pub u: f64,
    pub v: f64,
    pub flux_u: f64,
    pub flux_v: f64,
}

impl State {
    fn from_array(r: f64, y: &[f64; 4]) -> Self {
        State {
            r,
            u: y[0],
            v: y[1],
            flux_u: y[2],
            flux_v: y[3],
        }
    }

    fn to_array(self) -> [f64; 4] {
        [self.u, self.v, self.flux_u, self.flux_v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEvent {
    pub component: Component,
    pub radius: f64,
    /// `|w(radius)|` after localization, from a direct integration step.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    UZeroFirst,
    VZeroFirst,
    Simultaneous(f64),
    NoZeroUpTo(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ProblemParams,
    pub a0: f64,
    pub b0: f64,
    pub nodes: Vec<State>,
    pub events: Vec<ZeroEvent>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn radii(&self) -> Vec<f64> {
        self.nodes.iter().map(|s| s.r).collect()
    }

    pub fn last_radius(&self) -> f64 {
        self.nodes.last().map_or(0.0, |s| s.r)
    }

    /// `(u', v')` at a node, recovered from the fluxes.
    pub fn derivatives(&self, state: &State) -> (f64, f64) {
        let w = state.r.powi(self.params.n as i32 - 1);
        (
            phi_inv(self.params.p, state.flux_u / w),
            phi_inv(self.params.q, state.flux_v / w),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Relative tolerance of the integrator.
    pub rtol: f64,
    /// Zero crossings are localized to `event_tol·max(1, r)`.
    pub event_tol: f64,
    /// Zeros of `u` and `v` closer than `simultaneity_tol·max(1, R)` count as one.
    pub simultaneity_tol: f64,
    /// Step cap relative to the current radius.
    pub max_rel_step: f64,
    pub max_step: Option<f64>,
    pub max_steps: usize,
    pub bisection_max_iter: usize,
    /// Integration horizon used by scans and the Dirichlet solver.
    pub r_max: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            rtol: 1e-10,
            event_tol: 1e-9,
            simultaneity_tol: 1e-8,
            max_rel_step: 0.1,
            max_step: None,
            max_steps: 500_000,
            bisection_max_iter: 200,
            r_max: 1e4,
        }
    }
}

struct RadialSystem {
    n_minus_one: i32,
    p: f64,
    q: f64,
    delta: f64,
    mu: f64,
}

impl RadialSystem {
    fn new(params: &ProblemParams) -> Self {
        RadialSystem {
            n_minus_one: params.n as i32 - 1,
            p: params.p,
            q: params.q,
            delta: params.delta,
            mu: params.mu,
        }
    }
}

impl OdeSystem<4> for RadialSystem {
    fn rhs(&self, r: f64, y: &[f64; 4]) -> [f64; 4] {
        let w = r.powi(self.n_minus_one);
        [
            phi_inv(self.p, y[2] / w),
            phi_inv(self.q, y[3] / w),
            -w * y[1].max(0.0).powf(self.delta),
            -w * y[0].max(0.0).powf(self.mu),
        ]
    }
}

/// Coefficients `(c_u, c_v)` of the leading corrections
/// `u ≈ a0 − c_u r^{p/(p−1)}`, `v ≈ b0 − c_v r^{q/(q−1)}`.
fn series_coefficients(params: &ProblemParams, a0: f64, b0: f64) -> (f64, f64) {
    let n = params.dim();
    let ProblemParams { p, q, delta, mu, .. } = *params;
    let cu = (b0.powf(delta) / n).powf(1.0 / (p - 1.0)) * (p - 1.0) / p;
    let cv = (a0.powf(mu) / n).powf(1.0 / (q - 1.0)) * (q - 1.0) / q;
    (cu, cv)
}

/// Radius at which the series correction is `1e-8·min(a0, b0)`, floored at `1e-10`.
pub fn startup_radius(params: &ProblemParams, a0: f64, b0: f64) -> f64 {
    let (cu, cv) = series_coefficients(params, a0, b0);
    let target = 1e-8 * a0.min(b0);
    let ru = (target / cu).powf((params.p - 1.0) / params.p);
    let rv = (target / cv).powf((params.q - 1.0) / params.q);
    ru.min(rv).max(1e-10)
}

/// Leading-order state at `r0` for the regular solution with `u(0) = a0`, `v(0) = b0`.
pub fn series_start(params: &ProblemParams, a0: f64, b0: f64, r0: f64) -> Result<State> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Startup(format!("startup radius must be positive, got {r0}")));
    }
    if !(a0 > 0.0 && b0 > 0.0) {
        return Err(Error::Startup(format!(
            "initial values must be positive (a0 = {a0}, b0 = {b0})"
        )));
    }
    let n = params.dim();
    let (cu, cv) = series_coefficients(params, a0, b0);
    let du = cu * r0.powf(params.p / (params.p - 1.0));
    let dv = cv * r0.powf(params.q / (params.q - 1.0));
    if du > 0.01 * a0 || dv > 0.01 * b0 {
        return Err(Error::Startup(format!(
            "r0 = {r0} too large: series correction uses {:.3}% of a0 and {:.3}% of b0",
            100.0 * du / a0,
            100.0 * dv / b0
        )));
    }
    let rn = r0.powi(params.n as i32);
    Ok(State {
        r: r0,
        u: a0 - du,
        v: b0 - dv,
        flux_u: -rn * b0.powf(params.delta) / n,
        flux_v: -rn * a0.powf(params.mu) / n,
    })
}

fn all_finite(y: &[f64; 4]) -> bool {
    y.iter().all(|x| x.is_finite())
}

struct Crossing {
    radius: f64,
    state: [f64; 4],
    residual: f64,
}

/// Locates the first zero of component `c` inside the accepted step
/// `[r, r + h]`: bisection on the cubic Hermite interpolant, then Newton
/// corrections with direct integration steps from `r`.
#[allow(clippy::too_many_arguments)]
fn localize_zero(
    sys: &RadialSystem,
    r: f64,
    y: &[f64; 4],
    f: &[f64; 4],
    h: f64,
    y_end: &[f64; 4],
    f_end: &[f64; 4],
    c: usize,
    tol: &Tolerance<4>,
    event_tol: f64,
) -> Result<Crossing> {
    let r_end = r + h;
    let interp = |t: f64| hermite(r, r_end, y[c], y_end[c], f[c], f_end[c], t);
    // first sign change of the interpolant on a fine sample
    let samples = 32;
    let (mut lo, mut hi) = (r, r_end);
    for k in 1..=samples {
        let t = if k == samples {
            r_end
        } else {
            r + h * k as f64 / samples as f64
        };
        if interp(t) <= 0.0 {
            hi = t;
            break;
        }
        lo = t;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if interp(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut root = 0.5 * (lo + hi);
    let integrate_to = |t: f64| dopri5_step(sys, r, y, f, t - r, tol).y;
    let mut state = integrate_to(root);
    for _ in 0..8 {
        let slope = sys.rhs(root, &state)[c];
        if !(slope < 0.0) || !all_finite(&state) {
            break;
        }
        let shift = state[c] / slope;
        let next = (root - shift).clamp(r + 1e-3 * h * f64::EPSILON, r_end + 0.01 * h);
        let done = (next - root).abs() <= 4.0 * f64::EPSILON * root;
        root = next;
        state = integrate_to(root);
        if done {
            break;
        }
    }
    if !all_finite(&state) {
        return Err(Error::NonFinite { r: root });
    }
    let slope = sys.rhs(root, &state)[c];
    let distance = if slope < 0.0 {
        (state[c] / slope).abs()
    } else {
        f64::INFINITY
    };
    if distance > event_tol * root.max(1.0) {
        return Err(Error::EventNotLocalized { r: root });
    }
    Ok(Crossing {
        radius: root,
        residual: state[c].abs(),
        state,
    })
}

/// Integrates from the series start until `u` or `v` first vanishes, or `r_max`.
pub fn integrate_to_first_zero(
    params: &ProblemParams,
    a0: f64,
    b0: f64,
    r_max: f64,
    opts: &ShootingOptions,
) -> Result<Trajectory> {
    if !(r_max > 0.0) {
        return Err(Error::Domain(format!("r_max must be positive, got {r_max}")));
    }
    let sys = RadialSystem::new(params);
    let r0 = startup_radius(params, a0, b0);
    if r0 >= r_max {
        return Err(Error::Domain(format!(
            "r_max = {r_max} is below the startup radius {r0}"
        )));
    }
    let start = series_start(params, a0, b0, r0)?;
    let tol = Tolerance {
        rtol: opts.rtol,
        atol: [1e-2 * opts.rtol * a0, 1e-2 * opts.rtol * b0, 1e-300, 1e-300],
    };

    let mut nodes = vec![start];
    let mut r = r0;
    let mut y = start.to_array();
    let mut f = sys.rhs(r, &y);
    let mut h = r0;
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { r, h });
        }
        let mut h_try = h.min(opts.max_rel_step * r);
        if let Some(cap) = opts.max_step {
            h_try = h_try.min(cap);
        }
        let hits_end = r + h_try >= r_max;
        if hits_end {
            h_try = r_max - r;
        }
        if h_try <= 1e-14 * r {
            return Err(Error::StepUnderflow { r, h: h_try });
        }
        let trial = dopri5_step(&sys, r, &y, &f, h_try, &tol);
        if !all_finite(&trial.y) || !trial.error.is_finite() {
            h = 0.25 * h_try;
            if h <= 1e-14 * r {
                return Err(Error::NonFinite { r });
            }
            continue;
        }
        if trial.error > 1.0 {
            h = next_step_size(h_try, trial.error);
            continue;
        }
        // near the start, limit the relative change of u and v per step
        if r < 100.0 * r0 && trial.y[0] > 0.0 && trial.y[1] > 0.0 {
            let du = (trial.y[0] - y[0]).abs() / y[0];
            let dv = (trial.y[1] - y[1]).abs() / y[1];
            if du.max(dv) > 1e-3 {
                h = 0.5 * h_try;
                continue;
            }
        }

        let r_new = if hits_end { r_max } else { r + h_try };
        let crossed_u = trial.y[0] <= 0.0;
        let crossed_v = trial.y[1] <= 0.0;
        if crossed_u || crossed_v {
            return finish_at_crossing(
                params,
                a0,
                b0,
                nodes,
                &sys,
                r,
                &y,
                &f,
                h_try,
                &trial.y,
                &trial.f_end,
                crossed_u,
                crossed_v,
                &tol,
                opts,
            );
        }

        check_monotone(r_new, &y, &trial.y, &tol)?;
        r = r_new;
        y = trial.y;
        f = trial.f_end;
        nodes.push(State::from_array(r, &y));
        h = next_step_size(h_try, trial.error);
        if hits_end {
            return Ok(Trajectory {
                params: *params,
                a0,
                b0,
                nodes,
                events: Vec::new(),
                outcome: Outcome::NoZeroUpTo(r_max),
            });
        }
    }
}

/// u, v and both fluxes are nonincreasing while u, v > 0.
fn check_monotone(r: f64, old: &[f64; 4], new: &[f64; 4], tol: &Tolerance<4>) -> Result<()> {
    for i in 0..4 {
        let slack = 10.0 * (tol.atol[i] + tol.rtol * old[i].abs().max(new[i].abs()));
        if new[i] > old[i] + slack {
            return Err(Error::Inconsistent(format!(
                "component {i} increased at r = {r}: {} -> {}",
                old[i], new[i]
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish_at_crossing(
    params: &ProblemParams,
    a0: f64,
    b0: f64,
    mut nodes: Vec<State>,
    sys: &RadialSystem,
    r: f64,
    y: &[f64; 4],
    f: &[f64; 4],
    h: f64,
    y_end: &[f64; 4],
    f_end: &[f64; 4],
    crossed_u: bool,
    crossed_v: bool,
    tol: &Tolerance<4>,
    opts: &ShootingOptions,
) -> Result<Trajectory> {
    let locate = |c| localize_zero(sys, r, y, f, h, y_end, f_end, c, tol, opts.event_tol);
    let cu = if crossed_u { Some(locate(0)?) } else { None };
    let cv = if crossed_v { Some(locate(1)?) } else { None };

    let mut events = Vec::new();
    if let Some(c) = &cu {
        events.push(ZeroEvent {
            component: Component::U,
            radius: c.radius,
            residual: c.residual,
        });
    }
    if let Some(c) = &cv {
        events.push(ZeroEvent {
            component: Component::V,
            radius: c.radius,
            residual: c.residual,
        });
    }

    // the first crossing ends the trajectory; the other zero is either
    // localized in the same step or extrapolated by one Newton step
    let (first, first_is_u, other_radius) = match (cu, cv) {
        (Some(a), Some(b)) => {
            if a.radius <= b.radius {
                let other = b.radius;
                (a, true, other)
            } else {
                let other = a.radius;
                (b, false, other)
            }
        }
        (Some(a), None) => {
            let slope = sys.rhs(a.radius, &a.state)[1];
            let other = if slope < 0.0 {
                a.radius - a.state[1] / slope
            } else {
                f64::INFINITY
            };
            (a, true, other)
        }
        (None, Some(b)) => {
            let slope = sys.rhs(b.radius, &b.state)[0];
            let other = if slope < 0.0 {
                b.radius - b.state[0] / slope
            } else {
                f64::INFINITY
            };
            (b, false, other)
        }
        (None, None) => unreachable!("called only after a crossing"),
    };

    let gap = (other_radius - first.radius).abs();
    let outcome = if gap <= opts.simultaneity_tol * first.radius.max(1.0) {
        Outcome::Simultaneous(0.5 * (first.radius + other_radius))
    } else if first_is_u {
        Outcome::UZeroFirst
    } else {
        Outcome::VZeroFirst
    };

    if first.radius > r {
        nodes.push(State::from_array(first.radius, &first.state));
    }
    Ok(Trajectory {
        params: *params,
        a0,
        b0,
        nodes,
        events,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub b: f64,
    pub outcome: Result<Outcome>,
}

/// Outcomes on a geometric grid of `b = v(0)` values, integrated in parallel.
pub fn shoot_scan(
    params: &ProblemParams,
    a0: f64,
    b_lo: f64,
    b_hi: f64,
    count: usize,
    r_max: f64,
    opts: &ShootingOptions,
) -> Result<Vec<ScanEntry>> {
    if !(0.0 < b_lo && b_lo < b_hi) || count < 2 {
        return Err(Error::Domain(format!(
            "scan needs 0 < b_lo < b_hi and count >= 2 (got {b_lo}, {b_hi}, {count})"
        )));
    }
    let ratio = (b_hi / b_lo).ln();
    let grid: Vec<f64> = (0..count)
        .map(|k| {
            if k == count - 1 {
                b_hi
            } else {
                b_lo * (ratio * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect();
    Ok(grid
        .par_iter()
        .map(|&b| ScanEntry {
            b,
            outcome: integrate_to_first_zero(params, a0, b, r_max, opts).map(|t| t.outcome),
        })
        .collect())
}

fn polarity(outcome: &Outcome) -> Option<bool> {
    match outcome {
        Outcome::UZeroFirst => Some(true),
        Outcome::VZeroFirst => Some(false),
        _ => None,
    }
}

/// Adjacent scan entries with opposite first-zero polarity, in scan order. A
/// grid point that already hits both zeros together is returned as `(b, b)`.
pub fn find_brackets(scan: &[ScanEntry]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (i, entry) in scan.iter().enumerate() {
        if let Ok(Outcome::Simultaneous(_)) = entry.outcome {
            out.push((entry.b, entry.b));
        }
        if let Some(next) = scan.get(i + 1) {
            let pol = |e: &ScanEntry| e.outcome.as_ref().ok().and_then(polarity);
            if let (Some(a), Some(b)) = (pol(entry), pol(next)) {
                if a != b {
                    out.push((entry.b, next.b));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSolution {
    pub params: ProblemParams,
    pub b_star: f64,
    /// Radius of the common zero before rescaling (with `u(0) = a0`).
    pub unscaled_radius: f64,
    pub trajectory: Trajectory,
    pub bisection_history: Vec<(f64, Outcome)>,
}

/// Bisection on `b = v(0)` (geometric midpoints) until the zeros of `u` and
/// `v` coincide, then σ-rescaling of the solution to the ball radius in `params`.
pub fn solve_dirichlet(
    params: &ProblemParams,
    a0: f64,
    bracket: (f64, f64),
    opts: &ShootingOptions,
) -> Result<DirichletSolution> {
    let radius = params
        .radius
        .ok_or_else(|| Error::InvalidParams("the Dirichlet problem needs a ball radius R".into()))?;
    let (mut b_lo, mut b_hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    if !(b_lo > 0.0) {
        return Err(Error::InvalidBracket(format!("bracket must be positive: {bracket:?}")));
    }
    let shoot = |b: f64| integrate_to_first_zero(params, a0, b, opts.r_max, opts);

    let mut history = Vec::new();
    let lo_traj = shoot(b_lo)?;
    history.push((b_lo, lo_traj.outcome));
    if let Outcome::Simultaneous(_) = lo_traj.outcome {
        return finish_dirichlet(params, radius, b_lo, lo_traj, history);
    }
    let hi_traj = shoot(b_hi)?;
    history.push((b_hi, hi_traj.outcome));
    if let Outcome::Simultaneous(_) = hi_traj.outcome {
        return finish_dirichlet(params, radius, b_hi, hi_traj, history);
    }
    let lo_pol = polarity(&lo_traj.outcome);
    let hi_pol = polarity(&hi_traj.outcome);
    match (lo_pol, hi_pol) {
        (Some(a), Some(b)) if a != b => {}
        _ => {
            return Err(Error::InvalidBracket(format!(
                "endpoints give {:?} and {:?}",
                lo_traj.outcome, hi_traj.outcome
            )))
        }
    }
    let lo_pol = lo_pol.unwrap();

    for _ in 0..opts.bisection_max_iter {
        let mid = (b_lo * b_hi).sqrt();
        if mid <= b_lo || mid >= b_hi {
            break;
        }
        let traj = shoot(mid)?;
        history.push((mid, traj.outcome));
        match polarity(&traj.outcome) {
            None => {
                if let Outcome::Simultaneous(_) = traj.outcome {
                    return finish_dirichlet(params, radius, mid, traj, history);
                }
                return Err(Error::InvalidBracket(format!(
                    "no zero up to r_max = {} at b = {mid}; candidate ground state",
                    opts.r_max
                )));
            }
            Some(pol) if pol == lo_pol => b_lo = mid,
            Some(_) => b_hi = mid,
        }
    }
    Err(Error::BisectionCap {
        iterations: history.len(),
    })
}

fn finish_dirichlet(
    params: &ProblemParams,
    radius: f64,
    b_star: f64,
    traj: Trajectory,
    history: Vec<(f64, Outcome)>,
) -> Result<DirichletSolution> {
    let r_star = match traj.outcome {
        Outcome::Simultaneous(r) => r,
        other => return Err(Error::Inconsistent(format!("not a Dirichlet trajectory: {other:?}"))),
    };
    let mut scaled = rescale_trajectory(&traj, r_star / radius)?;
    // the common zero sits at R up to the simultaneity tolerance
    if let Some(last) = scaled.nodes.last_mut() {
        last.r = radius;
    }
    scaled.outcome = Outcome::Simultaneous(radius);
    scaled.params = params.with_radius(radius)?;
    Ok(DirichletSolution {
        params: scaled.params,
        b_star,
        unscaled_radius: r_star,
        trajectory: scaled,
        bisection_history: history,
    })
}

/// The σ-map `u_σ(r) = σ^α u(σr)`, `v_σ(r) = σ^β v(σr)`, applied node by node.
pub fn rescale_trajectory(traj: &Trajectory, sigma: f64) -> Result<Trajectory> {
    let params = &traj.params;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Rescale(format!("scale factor must be positive, got {sigma}")));
    }
    if !verify_exponent_identities(params, 1e-12) {
        return Err(Error::Rescale(format!(
            "exponent identities fail (d = {})",
            compute_d(params)
        )));
    }
    let (alpha, beta) = compute_alpha_beta(params)?;
    let n1 = params.dim() - 1.0;
    let su = sigma.powf(alpha);
    let sv = sigma.powf(beta);
    let sfu = sigma.powf((alpha + 1.0) * (params.p - 1.0) - n1);
    let sfv = sigma.powf((beta + 1.0) * (params.q - 1.0) - n1);
    let nodes = traj
        .nodes
        .iter()
        .map(|s| State {
            r: s.r / sigma,
            u: su * s.u,
            v: sv * s.v,
            flux_u: sfu * s.flux_u,
            flux_v: sfv * s.flux_v,
        })
        .collect();
    let events = traj
        .events
        .iter()
        .map(|e| ZeroEvent {
            component: e.component,
            radius: e.radius / sigma,
            residual: match e.component {
                Component::U => su * e.residual,
                Component::V => sv * e.residual,
            },
        })
        .collect();
    let outcome = match traj.outcome {
        Outcome::Simultaneous(r) => Outcome::Simultaneous(r / sigma),
        Outcome::NoZeroUpTo(r) => Outcome::NoZeroUpTo(r / sigma),
        other => other,
    };
    let mut scaled_params = *params;
    if let Some(r) = params.radius {
        scaled_params.radius = Some(r / sigma);
    }
    Ok(Trajectory {
        params: scaled_params,
        a0: su * traj.a0,
        b0: sv * traj.b0,
        nodes,
        events,
        outcome,
    })
}

/// Sup-norm of `u(r) − [a0 − ∫₀^r φ_p⁻¹(s^{1−N} ∫₀^s t^{N−1} v^δ dt) ds]` and the
/// analogous expression for `v`, by cumulative quadrature on the trajectory's nodes.
pub fn integral_form_residual(traj: &Trajectory) -> f64 {
    let params = &traj.params;
    let n = params.dim();
    let nm1 = params.n as i32 - 1;
    let r: Vec<f64> = traj.radii();
    if r.is_empty() {
        return 0.0;
    }
    let r0 = r[0];
    let one = |own_start: f64, other_start: f64, own: Vec<f64>, other: Vec<f64>, m: f64, e: f64| {
        let inner_head = r0.powi(params.n as i32) * other_start.powf(e) / n;
        let integrand: Vec<f64> = r
            .iter()
            .zip(&other)
            .map(|(&t, &w)| t.powi(nm1) * w.max(0.0).powf(e))
            .collect();
        let inner: Vec<f64> = cumulative_integral(&r, &integrand)
            .into_iter()
            .map(|x| x + inner_head)
            .collect();
        let outer_integrand: Vec<f64> = r
            .iter()
            .zip(&inner)
            .map(|(&s, &i)| phi_inv(m, i / s.powi(nm1)))
            .collect();
        let c = (other_start.powf(e) / n).powf(1.0 / (m - 1.0)) * (m - 1.0) / m;
        let outer_head = c * r0.powf(m / (m - 1.0));
        cumulative_integral(&r, &outer_integrand)
            .into_iter()
            .zip(&own)
            .map(|(o, &w)| (w - (own_start - outer_head - o)).abs())
            .fold(0.0, f64::max)
    };
    let u: Vec<f64> = traj.nodes.iter().map(|s| s.u).collect();
    let v: Vec<f64> = traj.nodes.iter().map(|s| s.v).collect();
    let ru = one(traj.a0, traj.b0, u.clone(), v.clone(), params.p, params.delta);
    let rv = one(traj.b0, traj.a0, v, u, params.q, params.mu);
    ru.max(rv)
}

/// Least-squares slope of `ln y` against `ln r`.
pub fn fit_loglog_slope(r: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateReport {
    pub alpha: f64,
    pub beta: f64,
    pub slope_u: f64,
    pub slope_v: f64,
    /// `slope_u + α`
    pub deviation_u: f64,
    /// `slope_v + β`
    pub deviation_v: f64,
    pub fit_window: (f64, f64),
}

/// Integrates to `r_max` and compares log–log slopes on the last decade with
/// the decay exponents `−α`, `−β`. Diagnostic only.
pub fn ground_state_probe(
    params: &ProblemParams,
    a0: f64,
    b0: f64,
    r_max: f64,
    opts: &ShootingOptions,
) -> Result<GroundStateReport> {
    let (alpha, beta) = compute_alpha_beta(params)?;
    let traj = integrate_to_first_zero(params, a0, b0, r_max, opts)?;
    if !matches!(traj.outcome, Outcome::NoZeroUpTo(_)) {
        return Err(Error::ZeroCrossing(traj.outcome));
    }
    let window = (r_max / 10.0, r_max);
    let tail: Vec<&State> = traj.nodes.iter().filter(|s| s.r >= window.0).collect();
    if tail.len() < 3 {
        return Err(Error::Domain("too few nodes in the last decade".into()));
    }
    let r: Vec<f64> = tail.iter().map(|s| s.r).collect();
    let u: Vec<f64> = tail.iter().map(|s| s.u).collect();
    let v: Vec<f64> = tail.iter().map(|s| s.v).collect();
    let slope_u = fit_loglog_slope(&r, &u);
    let slope_v = fit_loglog_slope(&r, &v);
    Ok(GroundStateReport {
        alpha,
        beta,
        slope_u,
        slope_v,
        deviation_u: slope_u + alpha,
        deviation_v: slope_v + beta,
        fit_window: window,
    })
}
