//! Pohozaev-type functionals along radial trajectories.
//!
//! With `P_u = |u'|^{p−1}`, `P_v = |v'|^{q−1}`, upper limit `L` (the ball
//! radius for `E₂`, infinity for `E₁`) and
//!
//! ```text
//! I_u(r) = ∫_r^L s^{k−2} P_u ds,   J_u(r) = ∫_r^L s^{k−2} P_u u^μ ds   (same for v with δ)
//! E(r)   = r^{N+k−2} P_u P_v − N/(δ+1) r^{N−1} P_u I_v − N/(μ+1) r^{N−1} P_v I_u
//!          + r^N J_v + r^N J_u
//! E'(r)  = (k − N + N/(δ+1) + N/(μ+1)) r^{N+k−3} P_u P_v + r^{N−1} (G_u + G_v)
//! G_u    = N J_u − N/(μ+1) u^μ I_u,   G_v = N J_v − N/(δ+1) v^δ I_v
//! ```
//!
//! All formulas are written for `p ≤ q`; inputs with `p > q` are swapped
//! before evaluation and the per-component output is swapped back.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{compute_alpha_beta, compute_k1, compute_k2, normalize_orientation, ProblemParams};
use crate::quadrature::{gauss_kronrod_15, integrate, locate, quintic_hermite};
use crate::shooting::{phi_inv, Outcome, State, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyKind {
    E1,
    E2,
}

/// Values needed by the functionals at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub u: f64,
    pub v: f64,
    /// `|u'|^{p−1}`
    pub pu: f64,
    /// `|v'|^{q−1}`
    pub pv: f64,
}

/// A positive radial pair that can be evaluated anywhere in its domain.
pub trait Profile: Sync {
    fn eval(&self, r: f64) -> ProfilePoint;
    /// Strictly increasing nodes covering the domain; quadrature breaks there.
    fn breakpoints(&self) -> &[f64];
}

/// Quintic Hermite interpolation of a trajectory, using first and second
/// derivatives from the differential equations at each node.
#[derive(Debug, Clone)]
pub struct TrajectoryProfile {
    r: Vec<f64>,
    n_minus_one: i32,
    // value, first and second derivative per node for u, v, flux_u, flux_v
    data: [[Vec<f64>; 3]; 4],
}

impl TrajectoryProfile {
    pub fn new(params: &ProblemParams, nodes: &[State]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Domain("profile needs at least two nodes".into()));
        }
        if nodes[0].r <= 0.0 || nodes.windows(2).any(|w| !(w[1].r > w[0].r)) {
            return Err(Error::Domain("profile radii must be positive and increasing".into()));
        }
        let nm1 = params.n as i32 - 1;
        let big_n = params.dim();
        let mut data: [[Vec<f64>; 3]; 4] = Default::default();
        for s in nodes {
            let w = s.r.powi(nm1);
            let u = s.u.max(0.0);
            let v = s.v.max(0.0);
            let pu = (-s.flux_u / w).max(0.0);
            let pv = (-s.flux_v / w).max(0.0);
            let du = phi_inv(params.p, s.flux_u / w);
            let dv = phi_inv(params.q, s.flux_v / w);
            // P' = v^δ − (N−1) P / r for P = −flux/r^{N−1}
            let dpu = v.powf(params.delta) - (big_n - 1.0) * pu / s.r;
            let dpv = u.powf(params.mu) - (big_n - 1.0) * pv / s.r;
            let d2u = -pu.powf((2.0 - params.p) / (params.p - 1.0)) * dpu / (params.p - 1.0);
            let d2v = -pv.powf((2.0 - params.q) / (params.q - 1.0)) * dpv / (params.q - 1.0);
            let dfu = -w * v.powf(params.delta);
            let dfv = -w * u.powf(params.mu);
            let pow_deriv = |x: f64, e: f64, dx: f64| {
                if x > 0.0 {
                    e * x.powf(e - 1.0) * dx
                } else {
                    0.0
                }
            };
            let d2fu = -(big_n - 1.0) * s.r.powi(nm1 - 1) * v.powf(params.delta) - w * pow_deriv(v, params.delta, dv);
            let d2fv = -(big_n - 1.0) * s.r.powi(nm1 - 1) * u.powf(params.mu) - w * pow_deriv(u, params.mu, du);
            let columns = [
                (s.u, du, finite_or_zero(d2u)),
                (s.v, dv, finite_or_zero(d2v)),
                (s.flux_u, dfu, finite_or_zero(d2fu)),
                (s.flux_v, dfv, finite_or_zero(d2fv)),
            ];
            for (slot, (a, b, c)) in data.iter_mut().zip(columns) {
                slot[0].push(a);
                slot[1].push(b);
                slot[2].push(c);
            }
        }
        Ok(TrajectoryProfile {
            r: nodes.iter().map(|s| s.r).collect(),
            n_minus_one: nm1,
            data,
        })
    }

    fn component(&self, c: usize, i: usize, r: f64) -> f64 {
        let d = &self.data[c];
        quintic_hermite(
            self.r[i],
            self.r[i + 1],
            (d[0][i], d[0][i + 1]),
            (d[1][i], d[1][i + 1]),
            (d[2][i], d[2][i + 1]),
            r,
        )
    }
}

fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

impl Profile for TrajectoryProfile {
    fn eval(&self, r: f64) -> ProfilePoint {
        let i = locate(&self.r, r);
        let w = r.powi(self.n_minus_one);
        ProfilePoint {
            u: self.component(0, i, r).max(0.0),
            v: self.component(1, i, r).max(0.0),
            pu: (-self.component(2, i, r) / w).max(0.0),
            pv: (-self.component(3, i, r) / w).max(0.0),
        }
    }

    fn breakpoints(&self) -> &[f64] {
        &self.r
    }
}

/// The manufactured pair `u = r^{−α}`, `v = r^{−β}` (not a solution), whose
/// tail integrals are known in closed form.
#[derive(Debug, Clone)]
pub struct PowerLawProfile {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    nodes: Vec<f64>,
}

impl PowerLawProfile {
    /// Geometric breakpoints on `[r_lo, r_hi]`.
    pub fn new(params: &ProblemParams, r_lo: f64, r_hi: f64, count: usize) -> Result<Self> {
        let (alpha, beta) = compute_alpha_beta(params)?;
        if !(0.0 < r_lo && r_lo < r_hi) || count < 2 {
            return Err(Error::Domain("power-law profile needs 0 < r_lo < r_hi".into()));
        }
        let ratio = (r_hi / r_lo).ln() / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| r_lo * (ratio * i as f64).exp()).collect();
        nodes[count - 1] = r_hi;
        Ok(PowerLawProfile {
            alpha,
            beta,
            p: params.p,
            q: params.q,
            nodes,
        })
    }
}

impl Profile for PowerLawProfile {
    fn eval(&self, r: f64) -> ProfilePoint {
        ProfilePoint {
            u: r.powf(-self.alpha),
            v: r.powf(-self.beta),
            pu: (self.alpha * r.powf(-self.alpha - 1.0)).powf(self.p - 1.0),
            pv: (self.beta * r.powf(-self.beta - 1.0)).powf(self.q - 1.0),
        }
    }

    fn breakpoints(&self) -> &[f64] {
        &self.nodes
    }
}

/// Integrand index: `s^{k−2}P_u`, `s^{k−2}P_u u^μ`, `s^{k−2}P_v`, `s^{k−2}P_v v^δ`.
const I_U: usize = 0;
const J_U: usize = 1;
const I_V: usize = 2;
const J_V: usize = 3;

/// Power-law tails `∫_L^∞` of the four integrands, from decay constants
/// `|u'| ≤ C₁ r^{−α−1}`, `u ≤ C₀ r^{−α}` (and likewise for v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailModel {
    pub c1_u: f64,
    pub c0_u: f64,
    pub c1_v: f64,
    pub c0_v: f64,
    pub integrals: [f64; 4],
}

impl TailModel {
    fn fit<P: Profile>(profile: &P, params: &ProblemParams, k: f64, upper: f64) -> Result<Self> {
        let (alpha, beta) = compute_alpha_beta(params)?;
        let (p, q) = (params.p, params.q);
        let mut c = [0.0f64; 4];
        for &r in profile.breakpoints().iter().filter(|&&r| r >= upper / 10.0) {
            let pt = profile.eval(r);
            c[0] = c[0].max(pt.pu.powf(1.0 / (p - 1.0)) * r.powf(alpha + 1.0));
            c[1] = c[1].max(pt.u * r.powf(alpha));
            c[2] = c[2].max(pt.pv.powf(1.0 / (q - 1.0)) * r.powf(beta + 1.0));
            c[3] = c[3].max(pt.v * r.powf(beta));
        }
        let a_u = k - 2.0 - (alpha + 1.0) * (p - 1.0);
        let a_v = k - 2.0 - (beta + 1.0) * (q - 1.0);
        let tail = |coef: f64, e: f64| {
            if coef == 0.0 {
                Ok(0.0)
            } else if e < -1.0 {
                Ok(coef * upper.powf(e + 1.0) / -(e + 1.0))
            } else {
                Err(Error::TailTooLarge {
                    estimate: f64::INFINITY,
                    limit: 0.0,
                })
            }
        };
        let integrals = [
            tail(c[0].powf(p - 1.0), a_u)?,
            tail(c[0].powf(p - 1.0) * c[1].powf(params.mu), a_u - alpha * params.mu)?,
            tail(c[2].powf(q - 1.0), a_v)?,
            tail(c[2].powf(q - 1.0) * c[3].powf(params.delta), a_v - beta * params.delta)?,
        ];
        Ok(TailModel {
            c1_u: c[0],
            c0_u: c[1],
            c1_v: c[2],
            c0_v: c[3],
            integrals,
        })
    }
}

/// Evaluator of one functional on one profile; parameters are oriented (`p ≤ q`).
pub struct Functional<'a, P: Profile> {
    params: ProblemParams,
    k: f64,
    upper: f64,
    profile: &'a P,
    rel_tol: f64,
    /// `tails[c][j] = ∫_{x_j}^{upper} integrand_c`, without the tail model
    tails: [Vec<f64>; 4],
    tail_model: Option<TailModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrals {
    pub i_u: f64,
    pub j_u: f64,
    pub i_v: f64,
    pub j_v: f64,
}

impl<'a, P: Profile> Functional<'a, P> {
    /// `params` must already satisfy `p ≤ q`. With a tail model the integrals
    /// run to infinity, otherwise they stop at the last breakpoint.
    pub fn new(params: &ProblemParams, k: f64, profile: &'a P, infinite: bool, rel_tol: f64) -> Result<Self> {
        let x = profile.breakpoints();
        let upper = *x.last().ok_or_else(|| Error::Domain("empty profile".into()))?;
        let mut f = Functional {
            params: *params,
            k,
            upper,
            profile,
            rel_tol,
            tails: Default::default(),
            tail_model: None,
        };
        let m = x.len();
        let mut tails: [Vec<f64>; 4] = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
        for j in (0..m - 1).rev() {
            let pieces = f.interval_integrals(x[j], x[j + 1])?;
            for c in 0..4 {
                tails[c][j] = tails[c][j + 1] + pieces[c];
            }
        }
        f.tails = tails;
        if infinite {
            f.tail_model = Some(TailModel::fit(profile, params, k, upper)?);
        }
        Ok(f)
    }

    fn integrand(&self, c: usize, s: f64) -> f64 {
        let pt = self.profile.eval(s);
        let w = s.powf(self.k - 2.0);
        match c {
            I_U => w * pt.pu,
            J_U => w * pt.pu * pt.u.powf(self.params.mu),
            I_V => w * pt.pv,
            _ => w * pt.pv * pt.v.powf(self.params.delta),
        }
    }

    fn interval_integrals(&self, a: f64, b: f64) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (c, slot) in out.iter_mut().enumerate() {
            // the magnitude of a single rule sets the absolute floor
            let (rough, _) = gauss_kronrod_15(&|s| self.integrand(c, s), a, b);
            let floor = 1e-3 * self.rel_tol * rough.abs() + f64::MIN_POSITIVE;
            *slot = integrate(|s| self.integrand(c, s), a, b, floor, self.rel_tol)?.value;
        }
        Ok(out)
    }

    pub fn tail_model(&self) -> Option<&TailModel> {
        self.tail_model.as_ref()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn leading_coefficient(&self) -> f64 {
        let n = self.params.dim();
        self.k - n + n / (self.params.delta + 1.0) + n / (self.params.mu + 1.0)
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let x = self.profile.breakpoints();
        if !(r >= x[0] && r <= self.upper) {
            return Err(Error::Domain(format!(
                "radius {r} outside the profile domain [{}, {}]",
                x[0], self.upper
            )));
        }
        Ok(())
    }

    /// `∫_r^L` of the four integrands (truncated part only).
    pub fn truncated_integrals(&self, r: f64) -> Result<Integrals> {
        self.check_radius(r)?;
        let x = self.profile.breakpoints();
        let j = locate(x, r);
        let piece = if r == x[j + 1] {
            [0.0; 4]
        } else {
            self.interval_integrals(r, x[j + 1])?
        };
        let t = |c: usize| self.tails[c][j + 1] + piece[c];
        Ok(Integrals {
            i_u: t(I_U),
            j_u: t(J_U),
            i_v: t(I_V),
            j_v: t(J_V),
        })
    }

    /// Full integrals, including the tail model when present.
    pub fn integrals(&self, r: f64) -> Result<Integrals> {
        let mut i = self.truncated_integrals(r)?;
        if let Some(t) = &self.tail_model {
            i.i_u += t.integrals[I_U];
            i.j_u += t.integrals[J_U];
            i.i_v += t.integrals[I_V];
            i.j_v += t.integrals[J_V];
        }
        Ok(i)
    }

    fn terms_of_value(&self, r: f64, pt: &ProfilePoint, i: &Integrals) -> [f64; 5] {
        let n = self.params.dim();
        let rn1 = r.powi(self.params.n as i32 - 1);
        let rn = rn1 * r;
        [
            r.powf(n + self.k - 2.0) * pt.pu * pt.pv,
            -n / (self.params.delta + 1.0) * rn1 * pt.pu * i.i_v,
            -n / (self.params.mu + 1.0) * rn1 * pt.pv * i.i_u,
            rn * i.j_v,
            rn * i.j_u,
        ]
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        let pt = self.profile.eval(r);
        let i = self.integrals(r)?;
        Ok(self.terms_of_value(r, &pt, &i).iter().sum())
    }

    /// Part of `E(r)` contributed by the tail model.
    pub fn tail_contribution(&self, r: f64) -> f64 {
        match &self.tail_model {
            None => 0.0,
            Some(t) => {
                let pt = self.profile.eval(r);
                let i = Integrals {
                    i_u: t.integrals[I_U],
                    j_u: t.integrals[J_U],
                    i_v: t.integrals[I_V],
                    j_v: t.integrals[J_V],
                };
                // the boundary product carries no integral
                self.terms_of_value(r, &pt, &i)[1..].iter().sum()
            }
        }
    }

    /// `(G_u, G_v)` and their scales (sums of absolute values of the two terms).
    pub fn g_values(&self, r: f64) -> Result<((f64, f64), (f64, f64))> {
        let pt = self.profile.eval(r);
        let i = self.integrals(r)?;
        let n = self.params.dim();
        let (mu, delta) = (self.params.mu, self.params.delta);
        let gu = (n * i.j_u, n / (mu + 1.0) * pt.u.powf(mu) * i.i_u);
        let gv = (n * i.j_v, n / (delta + 1.0) * pt.v.powf(delta) * i.i_v);
        Ok((
            (gu.0 - gu.1, gv.0 - gv.1),
            (gu.0.abs() + gu.1.abs(), gv.0.abs() + gv.1.abs()),
        ))
    }

    /// Analytic derivative and the sum of absolute values of its five terms.
    pub fn derivative_with_scale(&self, r: f64) -> Result<(f64, f64)> {
        let pt = self.profile.eval(r);
        let i = self.integrals(r)?;
        let n = self.params.dim();
        let (mu, delta) = (self.params.mu, self.params.delta);
        let rn1 = r.powi(self.params.n as i32 - 1);
        let terms = [
            self.leading_coefficient() * r.powf(n + self.k - 3.0) * pt.pu * pt.pv,
            -n / (delta + 1.0) * rn1 * pt.v.powf(delta) * i.i_v,
            n * rn1 * i.j_v,
            -n / (mu + 1.0) * rn1 * pt.u.powf(mu) * i.i_u,
            n * rn1 * i.j_u,
        ];
        Ok((terms.iter().sum(), terms.iter().map(|t| t.abs()).sum()))
    }

    pub fn derivative(&self, r: f64) -> Result<f64> {
        self.derivative_with_scale(r).map(|(d, _)| d)
    }

    /// Central difference with step `h`, refined by Richardson extrapolation
    /// when the `h` and `h/2` estimates differ by more than 10%.
    pub fn finite_difference(&self, r: f64, h: f64) -> Result<f64> {
        let central = |h: f64| -> Result<f64> { Ok((self.value(r + h)? - self.value(r - h)?) / (2.0 * h)) };
        let d1 = central(h)?;
        let d2 = central(0.5 * h)?;
        if (d1 - d2).abs() > 0.1 * d2.abs() {
            Ok((4.0 * d2 - d1) / 3.0)
        } else {
            Ok(d2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyOptions {
    /// Finite-difference step relative to the domain length (`E₂`) or to the
    /// sample radius (`E₁`).
    pub fd_rel_step: f64,
    /// Bound on `|E'_analytic − E'_fd| / (1 + |E'_analytic|)`.
    pub derivative_tol: f64,
    /// Sign checks tolerate `sign_tol·(local scale)`.
    pub sign_tol: f64,
    /// `E₁` is refused when the tail part exceeds `tail_limit·max|E₁|`.
    pub tail_limit: f64,
    pub quadrature_rel_tol: f64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions {
            fd_rel_step: 1e-5,
            derivative_tol: 1e-6,
            sign_tol: 1e-8,
            tail_limit: 1e-6,
            quadrature_rel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub r: f64,
    pub e: f64,
    pub e_prime_analytic: f64,
    pub e_prime_finite_difference: f64,
    /// Sum of absolute values of the terms of `E'`.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GSample {
    pub r: f64,
    pub g_u: f64,
    pub g_v: f64,
    pub scale_u: f64,
    pub scale_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SignSummary {
    pub positive: usize,
    pub negative: usize,
    pub within_tolerance: usize,
}

impl SignSummary {
    fn add(&mut self, x: f64, tol: f64) {
        if x > tol {
            self.positive += 1;
        } else if x < -tol {
            self.negative += 1;
        } else {
            self.within_tolerance += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kind: EnergyKind,
    pub k_value: f64,
    pub leading_coefficient: f64,
    /// Whether `u` and `v` were exchanged to reach `p ≤ q`; samples of `G`
    /// are reported in the original labeling.
    pub swapped: bool,
    pub samples: Vec<EnergySample>,
    pub g_samples: Vec<GSample>,
    /// `E` at the smallest node and at the upper end (`R` or `r_max`).
    pub endpoint_values: (f64, f64),
    /// For `E₂`: `R^{N+k−2} |u'(R)|^{p−1} |v'(R)|^{q−1}` from the final node.
    pub boundary_product: Option<f64>,
    pub tail_error_estimate: Option<f64>,
    pub tail_model: Option<TailModel>,
    pub sign_summary: SignSummary,
    pub g_sign_summary: SignSummary,
    pub max_derivative_mismatch: f64,
    pub derivative_check_passed: bool,
}

/// Oriented copy of a trajectory (`p ≤ q`).
fn oriented(traj: &Trajectory) -> (Trajectory, bool) {
    let (params, swapped) = normalize_orientation(&traj.params);
    if !swapped {
        return (traj.clone(), false);
    }
    let nodes = traj
        .nodes
        .iter()
        .map(|s| State {
            r: s.r,
            u: s.v,
            v: s.u,
            flux_u: s.flux_v,
            flux_v: s.flux_u,
        })
        .collect();
    (
        Trajectory {
            params,
            a0: traj.b0,
            b0: traj.a0,
            nodes,
            events: traj.events.clone(),
            outcome: traj.outcome,
        },
        true,
    )
}

/// Uniform interior radii of `(lo, hi)`, kept `margin` away from both ends.
pub fn interior_radii(lo: f64, hi: f64, count: usize, margin: f64) -> Vec<f64> {
    let (a, b) = (lo + margin, hi - margin);
    (0..count)
        .map(|i| a + (b - a) * (i as f64 + 0.5) / count as f64)
        .collect()
}

/// Geometric interior radii of `(lo, hi)`.
pub fn geometric_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    (0..count)
        .map(|i| lo * (ratio * (i as f64 + 0.5) / count as f64).exp())
        .collect()
}

fn build_report<P: Profile>(
    kind: EnergyKind,
    f: &Functional<'_, P>,
    radii: &[f64],
    swapped: bool,
    opts: &EnergyOptions,
) -> Result<EnergyReport> {
    let x = f.profile.breakpoints();
    let lo = x[0];
    let hi = f.upper();
    // the infinite domain has no length; there the step is relative to r
    let step = |r: f64| match kind {
        EnergyKind::E2 => opts.fd_rel_step * (hi - lo),
        EnergyKind::E1 => opts.fd_rel_step * r,
    };
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.total_cmp(b));
    if let Some(&bad) = radii.iter().find(|&&r| !(r - step(r) >= lo && r + step(r) <= hi)) {
        return Err(Error::Domain(format!(
            "sample radius {bad} too close to the domain ends [{lo}, {hi}]"
        )));
    }
    let computed: Vec<Result<(EnergySample, GSample)>> = radii
        .par_iter()
        .map(|&r| {
            let e = f.value(r)?;
            let (d, scale) = f.derivative_with_scale(r)?;
            let fd = f.finite_difference(r, step(r))?;
            let ((gu, gv), (su, sv)) = f.g_values(r)?;
            let g = if swapped {
                GSample {
                    r,
                    g_u: gv,
                    g_v: gu,
                    scale_u: sv,
                    scale_v: su,
                }
            } else {
                GSample {
                    r,
                    g_u: gu,
                    g_v: gv,
                    scale_u: su,
                    scale_v: sv,
                }
            };
            Ok((
                EnergySample {
                    r,
                    e,
                    e_prime_analytic: d,
                    e_prime_finite_difference: fd,
                    scale,
                },
                g,
            ))
        })
        .collect();
    let mut samples = Vec::with_capacity(radii.len());
    let mut g_samples = Vec::with_capacity(radii.len());
    for c in computed {
        let (s, g) = c?;
        samples.push(s);
        g_samples.push(g);
    }

    let mut sign_summary = SignSummary::default();
    let mut g_sign_summary = SignSummary::default();
    let mut mismatch = 0.0f64;
    for (s, g) in samples.iter().zip(&g_samples) {
        sign_summary.add(s.e_prime_analytic, opts.sign_tol * s.scale);
        g_sign_summary.add(g.g_u, opts.sign_tol * g.scale_u);
        g_sign_summary.add(g.g_v, opts.sign_tol * g.scale_v);
        let m = (s.e_prime_analytic - s.e_prime_finite_difference).abs() / (1.0 + s.e_prime_analytic.abs());
        mismatch = mismatch.max(m);
        if !(s.e.is_finite() && s.e_prime_analytic.is_finite() && s.e_prime_finite_difference.is_finite()) {
            return Err(Error::NonFinite { r: s.r });
        }
    }

    let e_lo = f.value(lo)?;
    let e_hi = f.value(hi)?;
    let tail_error_estimate = f.tail_model().map(|_| {
        samples
            .iter()
            .map(|s| f.tail_contribution(s.r).abs())
            .chain([f.tail_contribution(lo).abs()])
            .fold(0.0, f64::max)
    });
    if let Some(est) = tail_error_estimate {
        let max_e = samples.iter().map(|s| s.e.abs()).fold(0.0, f64::max);
        let limit = opts.tail_limit * max_e;
        if est > limit {
            return Err(Error::TailTooLarge { estimate: est, limit });
        }
    }
    let boundary_product = match kind {
        EnergyKind::E2 => {
            let pt = f.profile.eval(hi);
            Some(hi.powf(f.params.dim() + f.k() - 2.0) * pt.pu * pt.pv)
        }
        EnergyKind::E1 => None,
    };

    Ok(EnergyReport {
        kind,
        k_value: f.k(),
        leading_coefficient: f.leading_coefficient(),
        swapped,
        samples,
        g_samples,
        endpoint_values: (e_lo, e_hi),
        boundary_product,
        tail_error_estimate,
        tail_model: f.tail_model().copied(),
        sign_summary,
        g_sign_summary,
        max_derivative_mismatch: mismatch,
        derivative_check_passed: mismatch <= opts.derivative_tol,
    })
}

fn e2_setup(traj: &Trajectory) -> Result<(Trajectory, bool, f64)> {
    let (t, swapped) = oriented(traj);
    let k = compute_k2(&t.params)?;
    Ok((t, swapped, k))
}

fn e1_setup(traj: &Trajectory) -> Result<(Trajectory, bool, f64)> {
    if !matches!(traj.outcome, Outcome::NoZeroUpTo(_)) {
        return Err(Error::ZeroCrossing(traj.outcome));
    }
    let (t, swapped) = oriented(traj);
    let k = compute_k1(&t.params)?;
    Ok((t, swapped, k))
}

/// `E₂` on `(r₀, R]` for a trajectory ending at `R` (normally a Dirichlet solution).
pub fn e2_evaluate(traj: &Trajectory, radii: &[f64], opts: &EnergyOptions) -> Result<EnergyReport> {
    let (t, swapped, k) = e2_setup(traj)?;
    let profile = TrajectoryProfile::new(&t.params, &t.nodes)?;
    let f = Functional::new(&t.params, k, &profile, false, opts.quadrature_rel_tol)?;
    build_report(EnergyKind::E2, &f, radii, swapped, opts)
}

pub fn e2_prime_analytic(traj: &Trajectory, r: f64) -> Result<f64> {
    let (t, _, k) = e2_setup(traj)?;
    let profile = TrajectoryProfile::new(&t.params, &t.nodes)?;
    Functional::new(
        &t.params,
        k,
        &profile,
        false,
        EnergyOptions::default().quadrature_rel_tol,
    )?
    .derivative(r)
}

/// `E₁` on a trajectory without zeros up to `r_max`, with fitted power-law tails.
pub fn e1_evaluate(traj: &Trajectory, radii: &[f64], opts: &EnergyOptions) -> Result<EnergyReport> {
    let (t, swapped, k) = e1_setup(traj)?;
    let profile = TrajectoryProfile::new(&t.params, &t.nodes)?;
    let f = Functional::new(&t.params, k, &profile, true, opts.quadrature_rel_tol)?;
    build_report(EnergyKind::E1, &f, radii, swapped, opts)
}

pub fn e1_prime_analytic(traj: &Trajectory, r: f64) -> Result<f64> {
    let (t, _, k) = e1_setup(traj)?;
    let profile = TrajectoryProfile::new(&t.params, &t.nodes)?;
    Functional::new(
        &t.params,
        k,
        &profile,
        true,
        EnergyOptions::default().quadrature_rel_tol,
    )?
    .derivative(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Which {
    U,
    V,
}

/// `G` for one component, on the finite domain (`E₂` weights) or the truncated
/// infinite one (`E₁` weights).
pub fn g_evaluate(traj: &Trajectory, which: Which, domain: EnergyKind, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (t, swapped, k) = match domain {
        EnergyKind::E1 => e1_setup(traj)?,
        EnergyKind::E2 => e2_setup(traj)?,
    };
    let profile = TrajectoryProfile::new(&t.params, &t.nodes)?;
    let f = Functional::new(
        &t.params,
        k,
        &profile,
        domain == EnergyKind::E1,
        EnergyOptions::default().quadrature_rel_tol,
    )?;
    radii
        .iter()
        .map(|&r| {
            let ((gu, gv), _) = f.g_values(r)?;
            let want_u = (which == Which::U) != swapped;
            Ok((r, if want_u { gu } else { gv }))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientReport {
    pub nodes: usize,
    /// Largest relative increase of `|u'|^{p−1}/r` between consecutive nodes.
    pub max_increase_u: f64,
    pub max_increase_v: f64,
    pub violations_u: usize,
    pub violations_v: usize,
    pub tolerance: f64,
}

impl QuotientReport {
    pub fn passed(&self) -> bool {
        self.violations_u == 0 && self.violations_v == 0
    }
}

/// Checks that `|u'|^{p−1}/r = −flux_u/r^N` and the analogue for `v` do not
/// increase along the nodes, up to a relative tolerance `1e-8`.
pub fn quotient_monotonicity_check(traj: &Trajectory) -> QuotientReport {
    let tol = 1e-8;
    let n = traj.params.n as i32;
    let quotients =
        |flux: fn(&State) -> f64| -> Vec<f64> { traj.nodes.iter().map(|s| -flux(s) / s.r.powi(n)).collect() };
    let qu = quotients(|s| s.flux_u);
    let qv = quotients(|s| s.flux_v);
    let scan = |q: &[f64]| {
        let mut worst = 0.0f64;
        let mut count = 0;
        for w in q.windows(2) {
            let inc = (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE);
            let inc = if w[0] == 0.0 && w[1] == 0.0 { 0.0 } else { inc };
            worst = worst.max(inc);
            if inc > tol {
                count += 1;
            }
        }
        (worst, count)
    };
    let (mu_, cu) = scan(&qu);
    let (mv, cv) = scan(&qv);
    QuotientReport {
        nodes: traj.nodes.len(),
        max_increase_u: mu_,
        max_increase_v: mv,
        violations_u: cu,
        violations_v: cv,
        tolerance: tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::{integrate_to_first_zero, solve_dirichlet, ShootingOptions};
    use approx::assert_relative_eq;

    fn pp(n: u32, p: f64, q: f64, delta: f64, mu: f64) -> ProblemParams {
        ProblemParams::new(n, p, q, delta, mu).unwrap()
    }

    fn zero_trajectory(params: ProblemParams, outcome: Outcome) -> Trajectory {
        let nodes = (1..=20)
            .map(|i| State {
                r: i as f64 * 0.05,
                u: 0.0,
                v: 0.0,
                flux_u: 0.0,
                flux_v: 0.0,
            })
            .collect();
        Trajectory {
            params,
            a0: 0.0,
            b0: 0.0,
            nodes,
            events: vec![],
            outcome,
        }
    }

    fn lane_emden_solution() -> Trajectory {
        let params = pp(3, 2.0, 2.0, 2.0, 2.0).with_radius(1.0).unwrap();
        solve_dirichlet(&params, 1.0, (0.5, 2.0), &ShootingOptions::default())
            .unwrap()
            .trajectory
    }

    #[test]
    fn zero_trajectory_has_zero_energy() {
        let params = pp(4, 2.0, 2.0, 3.0, 3.0);
        let t = zero_trajectory(params, Outcome::Simultaneous(1.0));
        let rep = e2_evaluate(&t, &interior_radii(0.05, 1.0, 5, 0.01), &EnergyOptions::default()).unwrap();
        assert!(rep.samples.iter().all(|s| s.e == 0.0 && s.e_prime_analytic == 0.0));
        assert!(rep.g_samples.iter().all(|g| g.g_u == 0.0 && g.g_v == 0.0));
        assert_eq!(e2_prime_analytic(&t, 0.5).unwrap(), 0.0);
        let t = zero_trajectory(params, Outcome::NoZeroUpTo(1.0));
        assert_eq!(e1_prime_analytic(&t, 0.5).unwrap(), 0.0);
        let q = quotient_monotonicity_check(&t);
        assert!(q.passed() && q.max_increase_u == 0.0);
    }

    #[test]
    fn critical_leading_coefficient_vanishes() {
        let t = zero_trajectory(pp(4, 2.0, 2.0, 3.0, 3.0), Outcome::Simultaneous(1.0));
        let rep = e2_evaluate(&t, &[0.5], &EnergyOptions::default()).unwrap();
        assert_eq!(rep.k_value, 2.0);
        assert_eq!(rep.leading_coefficient, 0.0);
    }

    #[test]
    fn e2_on_lane_emden_solution() {
        let t = lane_emden_solution();
        let r0 = t.nodes[0].r;
        let radii = interior_radii(r0, 1.0, 60, 1e-3);
        let rep = e2_evaluate(&t, &radii, &EnergyOptions::default()).unwrap();
        assert!(rep.derivative_check_passed, "mismatch {}", rep.max_derivative_mismatch);
        let bp = rep.boundary_product.unwrap();
        assert!(bp > 0.0);
        assert_relative_eq!(rep.endpoint_values.1, bp, max_relative = 1e-12);
        assert!(rep.endpoint_values.0.abs() <= 1e-6);
        // G vanishes at the right end
        let g = g_evaluate(&t, Which::U, EnergyKind::E2, &[1.0]).unwrap();
        assert_eq!(g[0].1, 0.0);
    }

    #[test]
    fn swapped_orientation_relabels_g() {
        let params = pp(4, 2.3, 2.1, 2.0, 2.2).with_radius(1.0).unwrap();
        let opts = ShootingOptions::default();
        let scan = crate::shooting::shoot_scan(&params, 1.0, 0.1, 10.0, 21, 1e4, &opts).unwrap();
        let br = crate::shooting::find_brackets(&scan)[0];
        let t = solve_dirichlet(&params, 1.0, br, &opts).unwrap().trajectory;
        let radii = interior_radii(t.nodes[0].r, 1.0, 10, 1e-3);
        let rep = e2_evaluate(&t, &radii, &EnergyOptions::default()).unwrap();
        assert!(rep.swapped);
        let gu = g_evaluate(&t, Which::U, EnergyKind::E2, &radii).unwrap();
        for (a, b) in rep.g_samples.iter().zip(&gu) {
            assert_eq!(a.g_u, b.1);
        }
    }

    #[test]
    fn power_law_tails_match_closed_form() {
        let params = pp(4, 2.1, 2.1, 4.0, 4.0);
        let (alpha, beta) = compute_alpha_beta(&params).unwrap();
        let k = compute_k1(&params).unwrap();
        let profile = PowerLawProfile::new(&params, 1.0, 1e3, 200).unwrap();
        let f = Functional::new(&params, k, &profile, true, 1e-13).unwrap();
        let r = 2.0;
        let trunc = f.truncated_integrals(r).unwrap();
        let tm = f.tail_model().unwrap();
        assert_relative_eq!(tm.c1_u, alpha, max_relative = 1e-12);
        assert_relative_eq!(tm.c0_v, 1.0, max_relative = 1e-12);
        // ∫_r^∞ s^{e} ds = r^{e+1}/(−e−1)
        let full = |c: f64, e: f64| c * r.powf(e + 1.0) / -(e + 1.0);
        let a_u = k - 2.0 - (alpha + 1.0) * 1.1;
        let a_v = k - 2.0 - (beta + 1.0) * 1.1;
        let cu = alpha.powf(1.1);
        let cv = beta.powf(1.1);
        let pairs = [
            (trunc.i_u, tm.integrals[0], full(cu, a_u)),
            (trunc.j_u, tm.integrals[1], full(cu, a_u - 4.0 * alpha)),
            (trunc.i_v, tm.integrals[2], full(cv, a_v)),
            (trunc.j_v, tm.integrals[3], full(cv, a_v - 4.0 * beta)),
        ];
        for (t, tail, exact) in pairs {
            assert!(((exact - t) - tail).abs() <= 1e-8 * exact.abs(), "{t} {tail} {exact}");
        }
    }

    #[test]
    fn e1_requires_no_crossing() {
        let params = pp(4, 1.9, 1.9, 2.0, 2.0);
        let t = integrate_to_first_zero(&params, 1.0, 1.0, 1e3, &ShootingOptions::default()).unwrap();
        assert!(matches!(
            e1_evaluate(&t, &[1.0], &EnergyOptions::default()),
            Err(Error::ZeroCrossing(_))
        ));
    }

    #[test]
    fn quotient_decreases_on_solution() {
        let t = lane_emden_solution();
        let q = quotient_monotonicity_check(&t);
        assert!(q.passed(), "{q:?}");
    }

    #[test]
    fn rejects_out_of_range_and_bad_radii() {
        let t = zero_trajectory(pp(3, 1.2, 1.3, 3.0, 3.0), Outcome::Simultaneous(1.0));
        assert!(matches!(
            e2_evaluate(&t, &[0.5], &EnergyOptions::default()),
            Err(Error::OutOfRange(_))
        ));
        let t = zero_trajectory(pp(4, 2.0, 2.0, 3.0, 3.0), Outcome::Simultaneous(1.0));
        assert!(e2_evaluate(&t, &[1.0], &EnergyOptions::default()).is_err());
    }
}
