//! Parameter tuple `(N, p, q, δ, μ[, R])` and the closed-form exponent algebra
//! shared by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A problem instance of the radial system
/// `-(r^{N-1} φ_p(u'))' = r^{N-1} v^δ`, `-(r^{N-1} φ_q(v'))' = r^{N-1} u^μ`.
///
/// Values are stored exactly as given. Use [`ProblemParams::new`] (or
/// deserialization, which goes through the same checks) to build one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ProblemParams {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    pub mu: f64,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "N")]
    n: u32,
    p: f64,
    q: f64,
    delta: f64,
    mu: f64,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

impl TryFrom<RawParams> for ProblemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let params = ProblemParams::new(raw.n, raw.p, raw.q, raw.delta, raw.mu)?;
        match raw.radius {
            Some(r) => params.with_radius(r),
            None => Ok(params),
        }
    }
}

impl From<ProblemParams> for RawParams {
    fn from(p: ProblemParams) -> Self {
        RawParams {
            n: p.n,
            p: p.p,
            q: p.q,
            delta: p.delta,
            mu: p.mu,
            radius: p.radius,
        }
    }
}

impl ProblemParams {
    pub fn new(n: u32, p: f64, q: f64, delta: f64, mu: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("N must be >= 2, got {n}")));
        }
        let checks = [("p", p, 1.0), ("q", q, 1.0), ("delta", delta, 0.0), ("mu", mu, 0.0)];
        for (name, value, bound) in checks {
            if !value.is_finite() || value <= bound {
                return Err(Error::InvalidParams(format!(
                    "{name} must be a finite number > {bound}, got {value}"
                )));
            }
        }
        Ok(ProblemParams {
            n,
            p,
            q,
            delta,
            mu,
            radius: None,
        })
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        self.radius = Some(radius);
        Ok(self)
    }

    /// Dimension as a float, for use inside formulas.
    #[inline]
    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// The simultaneous exchange `(p, δ) <-> (q, μ)`, i.e. relabelling `u <-> v`.
    pub fn swapped(&self) -> Self {
        ProblemParams {
            n: self.n,
            p: self.q,
            q: self.p,
            delta: self.mu,
            mu: self.delta,
            radius: self.radius,
        }
    }

    pub fn m_under(&self) -> f64 {
        self.p.min(self.q)
    }

    pub fn m_over(&self) -> f64 {
        self.p.max(self.q)
    }
}

/// Superhomogeneity gap `d = δμ − (p−1)(q−1)`. Its sign is not checked here.
pub fn compute_d(params: &ProblemParams) -> f64 {
    params.delta * params.mu - (params.p - 1.0) * (params.q - 1.0)
}

/// Decay exponents `(α, β)`; only defined for superhomogeneous systems.
pub fn compute_alpha_beta(params: &ProblemParams) -> Result<(f64, f64)> {
    let d = compute_d(params);
    if d <= 0.0 {
        return Err(Error::NotSuperhomogeneous { d });
    }
    let ProblemParams { p, q, delta, mu, .. } = *params;
    let alpha = (p * (q - 1.0) + delta * q) / d;
    let beta = (q * (p - 1.0) + mu * p) / d;
    Ok((alpha, beta))
}

/// Residuals of `1 − δβ = −(α+1)(p−1)` and `1 − μα = −(β+1)(q−1)` for the
/// supplied exponents, each scaled by the magnitude of its terms.
pub fn exponent_identity_residuals(params: &ProblemParams, alpha: f64, beta: f64) -> (f64, f64) {
    let ProblemParams { p, q, delta, mu, .. } = *params;
    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
    let first = rel(1.0 - delta * beta, -(alpha + 1.0) * (p - 1.0));
    let second = rel(1.0 - mu * alpha, -(beta + 1.0) * (q - 1.0));
    (first, second)
}

/// True iff both exponent identities hold to relative tolerance `tol`.
/// Non-superhomogeneous inputs return `false`.
pub fn verify_exponent_identities(params: &ProblemParams, tol: f64) -> bool {
    match compute_alpha_beta(params) {
        Ok((alpha, beta)) => {
            let (a, b) = exponent_identity_residuals(params, alpha, beta);
            a <= tol && b <= tol
        }
        Err(_) => false,
    }
}

fn require_oriented(params: &ProblemParams) -> Result<()> {
    if params.p > params.q {
        return Err(Error::OutOfRange(format!(
            "expected p <= q (got p = {}, q = {}); normalize orientation first",
            params.p, params.q
        )));
    }
    Ok(())
}

/// Subquadratic range of the unbounded-domain energy: `2N/(N+1) ≤ p ≤ q ≤ 2`.
pub fn in_e1_subquadratic_range(params: &ProblemParams) -> bool {
    let n = params.dim();
    2.0 * n / (n + 1.0) <= params.p && params.p <= params.q && params.q <= 2.0
}

/// Superquadratic range shared by both energies: `2 ≤ p ≤ q < N`.
pub fn in_superquadratic_range(params: &ProblemParams) -> bool {
    2.0 <= params.p && params.p <= params.q && params.q < params.dim()
}

/// Subquadratic range of the ball energy: `N/(N−1) < p ≤ q ≤ 2`.
pub fn in_e2_subquadratic_range(params: &ProblemParams) -> bool {
    let n = params.dim();
    n / (n - 1.0) < params.p && params.p <= params.q && params.q <= 2.0
}

/// Weight exponent of the energy on `(0, ∞)`.
pub fn compute_k1(params: &ProblemParams) -> Result<f64> {
    require_oriented(params)?;
    let ProblemParams { p, q, .. } = *params;
    let n = params.dim();
    if in_e1_subquadratic_range(params) {
        Ok(p + (n - p) / (p - 1.0) * (p - 2.0))
    } else if in_superquadratic_range(params) {
        Ok(q / (q - 1.0))
    } else {
        Err(Error::OutOfRange(format!(
            "k1 needs 2N/(N+1) <= p <= q <= 2 or 2 <= p <= q < N (N = {}, p = {p}, q = {q})",
            params.n
        )))
    }
}

/// Weight exponent of the energy on `(0, R]`.
pub fn compute_k2(params: &ProblemParams) -> Result<f64> {
    require_oriented(params)?;
    let ProblemParams { p, q, .. } = *params;
    let n = params.dim();
    if in_superquadratic_range(params) {
        Ok(q + (n - q) / (q - 1.0) * (q - 2.0))
    } else if in_e2_subquadratic_range(params) {
        Ok(p / (p - 1.0))
    } else {
        Err(Error::OutOfRange(format!(
            "k2 needs N/(N-1) < p <= q <= 2 or 2 <= p <= q < N (N = {}, p = {p}, q = {q})",
            params.n
        )))
    }
}

/// Returns parameters with `p ≤ q`, swapping `(p, δ) <-> (q, μ)` when needed.
pub fn normalize_orientation(params: &ProblemParams) -> (ProblemParams, bool) {
    if params.p > params.q {
        (params.swapped(), true)
    } else {
        (*params, false)
    }
}

/// Everything derivable in closed form from a parameter tuple. Entries that
/// are undefined for the given tuple are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedExponents {
    pub d: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub m_under: f64,
    pub m_over: f64,
}

impl DerivedExponents {
    /// k-values are computed on the oriented tuple, so they are always
    /// reported for the `p ≤ q` labelling.
    pub fn from_params(params: &ProblemParams) -> Self {
        let (oriented, _) = normalize_orientation(params);
        let ab = compute_alpha_beta(params).ok();
        DerivedExponents {
            d: compute_d(params),
            alpha: ab.map(|x| x.0),
            beta: ab.map(|x| x.1),
            k1: compute_k1(&oriented).ok(),
            k2: compute_k2(&oriented).ok(),
            m_under: params.m_under(),
            m_over: params.m_over(),
        }
    }
}
