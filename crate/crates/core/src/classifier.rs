//! Existence / nonexistence conditions for the radial Dirichlet system and
//! the region-boundary data behind the `(δ, μ)` and `m`-window plots.
//!
//! Every condition reports a margin oriented so that a positive value means
//! "strictly satisfied". For the `≤`-type nonexistence conditions this is
//! right side minus left side.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{compute_alpha_beta, compute_d, ProblemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConditionId {
    /// `d > 0`
    Superhomogeneity,
    /// `max(p, q) ≥ N`
    TrivialDimension,
    /// `max(α − (N−p)/(p−1), β − (N−q)/(q−1)) ≥ 0`
    Cmm,
    /// scalar case `p = q = m`, `δ = μ`: `1/(δ+1) > (N−m)/(Nm)`
    ScalarOptimal,
    /// `2N/(N+1) < p, q ≤ 2` and `1/(δ+1) + 1/(μ+1) > (N−m̲)/(N(m̲−1))`
    NewExistenceSubquadratic,
    /// `2 ≤ p, q < N` and `1/(δ+1) + 1/(μ+1) > (N(m̄−1)−m̄)/(N(m̄−1))`
    NewExistenceSuperquadratic,
    /// `2 ≤ p, q < N` and `1/(δ+1) + 1/(μ+1) ≤ (N−m̄)/(N(m̄−1))`
    NonexistenceSuperquadratic,
    /// `N/(N−1) < p, q ≤ 2` and `1/(δ+1) + 1/(μ+1) ≤ (N(m̲−1)−m̲)/(N(m̲−1))`
    NonexistenceSubquadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionResult {
    pub condition_id: ConditionId,
    pub hypotheses_hold: bool,
    /// NaN when the defining expression is undefined (e.g. `α` with `d ≤ 0`).
    pub inequality_margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Sense {
    Strict,
    NonStrict,
}

impl ConditionResult {
    fn new(condition_id: ConditionId, hypotheses_hold: bool, margin: f64, sense: Sense) -> Self {
        let holds = match sense {
            Sense::Strict => margin > 0.0,
            Sense::NonStrict => margin >= 0.0,
        };
        ConditionResult {
            condition_id,
            hypotheses_hold,
            inequality_margin: margin,
            satisfied: hypotheses_hold && holds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    NotSuperhomogeneous,
    ExistenceTrivialDimension,
    ExistenceScalarOptimal,
    ExistenceCMM,
    ExistenceNewSubquadratic,
    ExistenceNewSuperquadratic,
    NonexistenceSuperquadratic,
    NonexistenceSubquadratic,
    Unknown,
}

impl Verdict {
    pub fn is_existence(self) -> bool {
        matches!(
            self,
            Verdict::ExistenceTrivialDimension
                | Verdict::ExistenceScalarOptimal
                | Verdict::ExistenceCMM
                | Verdict::ExistenceNewSubquadratic
                | Verdict::ExistenceNewSuperquadratic
        )
    }

    pub fn is_nonexistence(self) -> bool {
        matches!(
            self,
            Verdict::NonexistenceSuperquadratic | Verdict::NonexistenceSubquadratic
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub details: Vec<ConditionResult>,
}

impl Classification {
    pub fn condition(&self, id: ConditionId) -> &ConditionResult {
        self.details
            .iter()
            .find(|c| c.condition_id == id)
            .expect("every condition is always evaluated")
    }
}

/// `1/(δ+1) + 1/(μ+1)`, the left side shared by the hyperbola-type conditions.
pub fn hyperbola_lhs(params: &ProblemParams) -> f64 {
    1.0 / (params.delta + 1.0) + 1.0 / (params.mu + 1.0)
}

/// Right side of the subquadratic new-existence condition at `m = m̲`.
pub fn existence_sub_rhs(n: f64, m: f64) -> f64 {
    (n - m) / (n * (m - 1.0))
}

/// Right side of the superquadratic new-existence condition at `m = m̄`.
pub fn existence_super_rhs(n: f64, m: f64) -> f64 {
    (n * (m - 1.0) - m) / (n * (m - 1.0))
}

/// Right side of the superquadratic nonexistence condition at `m = m̄`.
pub fn nonexistence_super_rhs(n: f64, m: f64) -> f64 {
    (n - m) / (n * (m - 1.0))
}

/// Right side of the subquadratic nonexistence condition at `m = m̲`.
pub fn nonexistence_sub_rhs(n: f64, m: f64) -> f64 {
    (n * (m - 1.0) - m) / (n * (m - 1.0))
}

pub fn check_h1(params: &ProblemParams) -> ConditionResult {
    ConditionResult::new(ConditionId::Superhomogeneity, true, compute_d(params), Sense::Strict)
}

pub fn check_trivial_dimension(params: &ProblemParams) -> ConditionResult {
    let d = compute_d(params);
    ConditionResult::new(
        ConditionId::TrivialDimension,
        d > 0.0,
        params.m_over() - params.dim(),
        Sense::NonStrict,
    )
}

pub fn cmm_margin(params: &ProblemParams) -> f64 {
    match compute_alpha_beta(params) {
        Ok((alpha, beta)) => {
            let n = params.dim();
            let a = alpha - (n - params.p) / (params.p - 1.0);
            let b = beta - (n - params.q) / (params.q - 1.0);
            a.max(b)
        }
        Err(_) => f64::NAN,
    }
}

pub fn check_cmm(params: &ProblemParams) -> ConditionResult {
    let hyp = compute_d(params) > 0.0 && params.m_over() < params.dim();
    ConditionResult::new(ConditionId::Cmm, hyp, cmm_margin(params), Sense::NonStrict)
}

/// Requires exact equality `p == q` and `δ == μ`.
pub fn check_scalar_optimal(params: &ProblemParams) -> ConditionResult {
    let n = params.dim();
    let m = params.p;
    let hyp = params.p == params.q && params.delta == params.mu && m < n && compute_d(params) > 0.0;
    // undefined off the diagonal
    let margin = if params.p == params.q && params.delta == params.mu {
        1.0 / (params.delta + 1.0) - (n - m) / (n * m)
    } else {
        f64::NAN
    };
    ConditionResult::new(ConditionId::ScalarOptimal, hyp, margin, Sense::Strict)
}

pub fn check_new_existence_subquadratic(params: &ProblemParams) -> ConditionResult {
    let n = params.dim();
    let lower = 2.0 * n / (n + 1.0);
    let in_range = |m: f64| lower < m && m <= 2.0;
    let hyp = compute_d(params) > 0.0 && in_range(params.p) && in_range(params.q);
    let margin = hyperbola_lhs(params) - existence_sub_rhs(n, params.m_under());
    ConditionResult::new(ConditionId::NewExistenceSubquadratic, hyp, margin, Sense::Strict)
}

pub fn check_new_existence_superquadratic(params: &ProblemParams) -> ConditionResult {
    let n = params.dim();
    let in_range = |m: f64| 2.0 <= m && m < n;
    let hyp = compute_d(params) > 0.0 && in_range(params.p) && in_range(params.q);
    let margin = hyperbola_lhs(params) - existence_super_rhs(n, params.m_over());
    ConditionResult::new(ConditionId::NewExistenceSuperquadratic, hyp, margin, Sense::Strict)
}

/// Returns `(superquadratic branch, subquadratic branch)`. Both need `N > 2`.
pub fn check_nonexistence(params: &ProblemParams) -> (ConditionResult, ConditionResult) {
    let n = params.dim();
    let base = compute_d(params) > 0.0 && params.n > 2;
    let lhs = hyperbola_lhs(params);

    let sup_range = |m: f64| 2.0 <= m && m < n;
    let sup = ConditionResult::new(
        ConditionId::NonexistenceSuperquadratic,
        base && sup_range(params.p) && sup_range(params.q),
        nonexistence_super_rhs(n, params.m_over()) - lhs,
        Sense::NonStrict,
    );

    let sub_lower = n / (n - 1.0);
    let sub_range = |m: f64| sub_lower < m && m <= 2.0;
    let sub = ConditionResult::new(
        ConditionId::NonexistenceSubquadratic,
        base && sub_range(params.p) && sub_range(params.q),
        nonexistence_sub_rhs(n, params.m_under()) - lhs,
        Sense::NonStrict,
    );
    (sup, sub)
}

/// Evaluates every condition and picks a verdict. Conclusive statements take
/// precedence over sufficient-only existence conditions.
pub fn classify(params: &ProblemParams) -> Result<Classification> {
    let h1 = check_h1(params);
    let trivial = check_trivial_dimension(params);
    let scalar = check_scalar_optimal(params);
    let (non_sup, non_sub) = check_nonexistence(params);
    let cmm = check_cmm(params);
    let new_sub = check_new_existence_subquadratic(params);
    let new_sup = check_new_existence_superquadratic(params);

    let details = vec![h1, trivial, scalar, non_sup, non_sub, cmm, new_sub, new_sup];

    let scalar_negative = scalar.hypotheses_hold && !scalar.satisfied;
    let any_existence =
        trivial.satisfied || scalar.satisfied || cmm.satisfied || new_sub.satisfied || new_sup.satisfied;
    let any_nonexistence = scalar_negative || non_sup.satisfied || non_sub.satisfied;
    if h1.satisfied && any_existence && any_nonexistence {
        let fired: Vec<_> = details.iter().filter(|c| c.satisfied).map(|c| c.condition_id).collect();
        return Err(Error::Inconsistent(format!(
            "existence and nonexistence both fire for {params:?}: {fired:?} (scalar negative: {scalar_negative})"
        )));
    }

    let verdict = if !h1.satisfied {
        Verdict::NotSuperhomogeneous
    } else if trivial.satisfied {
        Verdict::ExistenceTrivialDimension
    } else if scalar.hypotheses_hold {
        if scalar.satisfied {
            Verdict::ExistenceScalarOptimal
        } else if params.p >= 2.0 {
            Verdict::NonexistenceSuperquadratic
        } else {
            Verdict::NonexistenceSubquadratic
        }
    } else if non_sup.satisfied {
        Verdict::NonexistenceSuperquadratic
    } else if non_sub.satisfied {
        Verdict::NonexistenceSubquadratic
    } else if cmm.satisfied {
        Verdict::ExistenceCMM
    } else if new_sub.satisfied {
        Verdict::ExistenceNewSubquadratic
    } else if new_sup.satisfied {
        Verdict::ExistenceNewSuperquadratic
    } else {
        Verdict::Unknown
    };

    Ok(Classification { verdict, details })
}

/// `m`-range below and above 2 in which the new existence regions are nonempty.
pub fn m_window(n: u32) -> (f64, f64) {
    let n = n as f64;
    let lower = 2.0 * n / (n + 1.0);
    let upper = (3.0 * n + 1.0 + ((n - 1.0) * (n + 7.0)).sqrt()) * n / (2.0 * n * n + 2.0);
    (lower, upper)
}

/// Which hyperbola-type boundary to trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// New existence: subquadratic form for `m < 2`, superquadratic otherwise.
    NewExistence,
    /// Nonexistence: superquadratic form for `m ≥ 2`, subquadratic otherwise.
    Nonexistence,
}

fn boundary_rhs(n: f64, m: f64, boundary: Boundary) -> f64 {
    match (boundary, m < 2.0) {
        (Boundary::NewExistence, true) => existence_sub_rhs(n, m),
        (Boundary::NewExistence, false) => existence_super_rhs(n, m),
        (Boundary::Nonexistence, true) => nonexistence_sub_rhs(n, m),
        (Boundary::Nonexistence, false) => nonexistence_super_rhs(n, m),
    }
}

/// One row of the `(δ, μ)` boundary table for `p = q = m`. `None` marks a
/// grid point with no admissible positive `δ` (including `d ≤ 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionRow {
    pub mu: f64,
    pub delta_boundary_existence_new: Option<f64>,
    pub delta_boundary_nonexistence: Option<f64>,
    pub delta_boundary_cmm: Option<f64>,
}

const CMM_BRACKET: (f64, f64) = (1e-6, 1e3);
const CMM_BISECTIONS: usize = 80;

fn hyperbola_delta(n: f64, m: f64, mu: f64, boundary: Boundary) -> Option<f64> {
    let rest = boundary_rhs(n, m, boundary) - 1.0 / (mu + 1.0);
    if !(rest > 0.0 && rest < 1.0) {
        return None;
    }
    let delta = 1.0 / rest - 1.0;
    let d = delta * mu - (m - 1.0) * (m - 1.0);
    (delta > 0.0 && d > 0.0).then_some(delta)
}

/// Solves equality in the CMM condition for `δ` at fixed `μ` by bisection.
/// The margin is decreasing in `δ` on the superhomogeneous part of the bracket.
fn cmm_delta(n: u32, m: f64, mu: f64) -> Option<f64> {
    let margin = |delta: f64| -> Option<f64> {
        let params = ProblemParams::new(n, m, m, delta, mu).ok()?;
        let value = cmm_margin(&params);
        value.is_finite().then_some(value)
    };
    let d_zero = (m - 1.0) * (m - 1.0) / mu;
    let mut lo = CMM_BRACKET.0.max(d_zero * (1.0 + 1e-12));
    let mut hi = CMM_BRACKET.1;
    if lo >= hi {
        return None;
    }
    let f_lo = margin(lo)?;
    let f_hi = margin(hi)?;
    if f_lo < 0.0 || f_hi > 0.0 {
        return None;
    }
    for _ in 0..CMM_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        match margin(mid) {
            Some(v) if v >= 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
    }
    Some(0.5 * (lo + hi))
}

/// Boundary curves of the `(δ, μ)` plane for `p = q = m`, one row per `μ`.
pub fn region_boundaries(n: u32, m: f64, mu_grid: &[f64]) -> Vec<RegionRow> {
    let nf = n as f64;
    mu_grid
        .iter()
        .map(|&mu| {
            if !(mu > 0.0 && mu.is_finite()) {
                return RegionRow {
                    mu,
                    delta_boundary_existence_new: None,
                    delta_boundary_nonexistence: None,
                    delta_boundary_cmm: None,
                };
            }
            RegionRow {
                mu,
                delta_boundary_existence_new: hyperbola_delta(nf, m, mu, Boundary::NewExistence),
                delta_boundary_nonexistence: hyperbola_delta(nf, m, mu, Boundary::Nonexistence),
                delta_boundary_cmm: cmm_delta(n, m, mu),
            }
        })
        .collect()
}

/// Locates the point `δ = μ = t` where the condition behind `boundary`
/// changes truth value, by bisection on its margin along the diagonal.
pub fn diagonal_threshold(n: u32, m: f64, boundary: Boundary) -> Option<f64> {
    let margin = |t: f64| -> Option<f64> {
        let params = ProblemParams::new(n, m, m, t, t).ok()?;
        Some(match (boundary, m < 2.0) {
            (Boundary::NewExistence, true) => check_new_existence_subquadratic(&params).inequality_margin,
            (Boundary::NewExistence, false) => check_new_existence_superquadratic(&params).inequality_margin,
            (Boundary::Nonexistence, false) => check_nonexistence(&params).0.inequality_margin,
            (Boundary::Nonexistence, true) => check_nonexistence(&params).1.inequality_margin,
        })
    };
    // the margin is monotone in t along the diagonal
    let (mut lo, mut hi) = (1e-9, 1e9);
    let (f_lo, f_hi) = (margin(lo)?, margin(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = margin(mid)?;
        if f.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Classifies a whole grid; points are independent so the scan is parallel.
pub fn classify_grid(n: u32, p: f64, q: f64, deltas: &[f64], mus: &[f64]) -> Vec<(f64, f64, Result<Verdict>)> {
    use rayon::prelude::*;
    deltas
        .par_iter()
        .flat_map_iter(|&delta| {
            mus.iter().map(move |&mu| {
                let verdict = ProblemParams::new(n, p, q, delta, mu)
                    .and_then(|params| classify(&params))
                    .map(|c| c.verdict);
                (delta, mu, verdict)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pp(n: u32, p: f64, q: f64, delta: f64, mu: f64) -> ProblemParams {
        ProblemParams::new(n, p, q, delta, mu).unwrap()
    }

    #[test]
    fn h1_examples() {
        let c = check_h1(&pp(3, 2.0, 2.0, 1.0, 1.0));
        assert!(!c.satisfied && c.inequality_margin == 0.0);
        let c = check_h1(&pp(3, 2.0, 2.0, 3.0, 3.0));
        assert!(c.satisfied && c.inequality_margin == 8.0);
        let c = check_h1(&pp(3, 3.0, 3.0, 1.0, 1.0));
        assert!(!c.satisfied && c.inequality_margin == -3.0);
    }

    #[test]
    fn trivial_dimension_examples() {
        assert!(check_trivial_dimension(&pp(2, 2.0, 2.0, 3.0, 3.0)).satisfied);
        assert!(!check_trivial_dimension(&pp(4, 2.1, 2.1, 4.0, 4.0)).satisfied);
        assert!(check_trivial_dimension(&pp(3, 1.5, 3.5, 2.0, 2.0)).satisfied);
    }

    #[test]
    fn cmm_examples() {
        // d = 4 - 0.81 = 3.19, α = (1.9·0.9 + 3.8)/3.19
        let c = check_cmm(&pp(4, 1.9, 1.9, 2.0, 2.0));
        let alpha = (1.9 * 0.9 + 2.0 * 1.9) / 3.19;
        assert_relative_eq!(c.inequality_margin, alpha - 2.1 / 0.9, epsilon = 1e-12);
        assert_relative_eq!(c.inequality_margin, -0.6061, epsilon = 1e-4);
        assert!(!c.satisfied);

        // α = (2 + 16)/63 = 2/7
        let c = check_cmm(&pp(3, 2.0, 2.0, 8.0, 8.0));
        assert_relative_eq!(c.inequality_margin, 2.0 / 7.0 - 1.0, epsilon = 1e-12);
        assert!(!c.satisfied);

        let c = check_cmm(&pp(3, 2.0, 2.0, 1.2, 1.2));
        assert_relative_eq!(c.inequality_margin, 9.0, epsilon = 1e-12);
        assert!(c.satisfied);
    }

    #[test]
    fn scalar_examples() {
        let c = check_scalar_optimal(&pp(3, 2.0, 2.0, 4.0, 4.0));
        assert!(c.hypotheses_hold && c.satisfied);
        assert_relative_eq!(c.inequality_margin, 1.0 / 5.0 - 1.0 / 6.0, epsilon = 1e-15);
        let c = check_scalar_optimal(&pp(3, 2.0, 2.0, 5.0, 5.0));
        assert!(c.hypotheses_hold && !c.satisfied);
        assert_eq!(c.inequality_margin, 0.0);
        let c = check_scalar_optimal(&pp(4, 2.0, 2.0, 3.0, 3.0));
        assert!(c.hypotheses_hold && !c.satisfied);
        assert_eq!(c.inequality_margin, 0.0);
        // exact equality is required
        assert!(!check_scalar_optimal(&pp(4, 2.0, 2.0 + 1e-15, 3.0, 3.0)).hypotheses_hold);
        assert!(!check_scalar_optimal(&pp(3, 3.0, 3.0, 4.0, 4.0)).hypotheses_hold);
    }

    #[test]
    fn new_subquadratic_examples() {
        let c = check_new_existence_subquadratic(&pp(4, 1.9, 1.9, 2.0, 2.0));
        assert_relative_eq!(c.inequality_margin, 2.0 / 3.0 - 2.1 / 3.6, epsilon = 1e-14);
        assert!(c.satisfied);
        let c = check_new_existence_subquadratic(&pp(4, 1.9, 1.9, 4.0, 4.0));
        assert_relative_eq!(c.inequality_margin, 0.4 - 2.1 / 3.6, epsilon = 1e-14);
        assert!(!c.satisfied);
        let c = check_new_existence_subquadratic(&pp(4, 1.5, 1.5, 2.0, 2.0));
        assert!(!c.hypotheses_hold && !c.satisfied);
    }

    #[test]
    fn new_superquadratic_examples() {
        let c = check_new_existence_superquadratic(&pp(4, 2.1, 2.1, 2.0, 2.0));
        assert_relative_eq!(c.inequality_margin, 2.0 / 3.0 - 2.3 / 4.4, epsilon = 1e-14);
        assert!(c.satisfied);
        let c = check_new_existence_superquadratic(&pp(4, 2.1, 2.1, 4.0, 4.0));
        assert!(!c.satisfied);
        let c = check_new_existence_superquadratic(&pp(4, 2.0, 2.0, 2.0, 2.0));
        assert_relative_eq!(c.inequality_margin, 2.0 / 3.0 - 0.5, epsilon = 1e-14);
        assert!(c.satisfied);
    }

    #[test]
    fn nonexistence_examples() {
        let (sup, _) = check_nonexistence(&pp(4, 2.1, 2.1, 4.0, 4.0));
        assert!(sup.satisfied);
        assert_relative_eq!(sup.inequality_margin, 1.9 / 4.4 - 0.4, epsilon = 1e-14);
        let (_, sub) = check_nonexistence(&pp(4, 1.9, 1.9, 4.0, 4.0));
        assert!(sub.satisfied);
        assert_relative_eq!(sub.inequality_margin, 1.7 / 3.6 - 0.4, epsilon = 1e-14);
        let (sup, _) = check_nonexistence(&pp(4, 2.0, 2.0, 3.0, 3.0));
        assert!(sup.satisfied);
        assert_eq!(sup.inequality_margin, 0.0);
        // N = 2 is outside the theorem
        let (sup, sub) = check_nonexistence(&pp(2, 1.9, 1.9, 40.0, 40.0));
        assert!(!sup.hypotheses_hold && !sub.hypotheses_hold);
    }

    #[test]
    fn verdict_examples() {
        let v = |params| classify(&params).unwrap().verdict;
        // the scalar characterization outranks the sufficient conditions on the diagonal
        assert_eq!(v(pp(4, 1.9, 1.9, 2.0, 2.0)), Verdict::ExistenceScalarOptimal);
        assert_eq!(v(pp(4, 1.9, 1.9, 2.0, 2.1)), Verdict::ExistenceNewSubquadratic);
        assert_eq!(v(pp(4, 2.1, 2.1, 2.5, 2.6)), Verdict::ExistenceNewSuperquadratic);
        assert_eq!(v(pp(4, 2.1, 2.1, 4.0, 4.0)), Verdict::NonexistenceSuperquadratic);
        assert_eq!(v(pp(3, 2.0, 2.0, 1.0, 1.0)), Verdict::NotSuperhomogeneous);
        assert_eq!(v(pp(3, 2.0, 2.0, 4.0, 4.0)), Verdict::ExistenceScalarOptimal);
        assert_eq!(v(pp(3, 1.9, 1.9, 100.0, 100.0)), Verdict::NonexistenceSubquadratic);
        assert_eq!(v(pp(4, 2.0, 2.0, 3.0, 3.0)), Verdict::NonexistenceSuperquadratic);
        assert_eq!(v(pp(3, 1.5, 3.5, 2.0, 2.0)), Verdict::ExistenceTrivialDimension);
        assert_eq!(v(pp(3, 2.0, 2.0, 1.2, 1.5)), Verdict::ExistenceCMM);
        let c = classify(&pp(4, 1.9, 1.9, 2.0, 2.0)).unwrap();
        assert_eq!(c.details.len(), 8);
    }

    #[test]
    fn unknown_between_regions() {
        // between the nonexistence and new-existence curves, asymmetric so the
        // scalar characterization does not apply
        let params = pp(4, 2.1, 2.1, 3.3, 3.4);
        assert_eq!(classify(&params).unwrap().verdict, Verdict::Unknown);
        // N = 2 never reports nonexistence from the theorems
        let params = pp(2, 1.9, 1.8, 40.0, 41.0);
        assert_eq!(classify(&params).unwrap().verdict, Verdict::Unknown);
    }

    #[test]
    fn m_window_examples() {
        assert_eq!(m_window(3).0, 1.5);
        assert_relative_eq!(m_window(2).1, 2.0, epsilon = 1e-15);
        // (N−1)(N+7) = 33 at N = 4
        assert_relative_eq!(m_window(4).1, (13.0 + 33f64.sqrt()) * 4.0 / 34.0, epsilon = 1e-15);
        for n in 3..30 {
            let (lo, hi) = m_window(n);
            assert!(lo < 2.0 && 2.0 < hi, "N = {n}");
        }
    }

    #[test]
    fn region_boundary_examples() {
        let rows = region_boundaries(4, 2.0, &[3.0]);
        assert_relative_eq!(rows[0].delta_boundary_nonexistence.unwrap(), 3.0, epsilon = 1e-12);
        let rows = region_boundaries(4, 1.9, &[(4.0 * 0.9 + 1.9) / (4.0 * 0.9 - 1.9)]);
        assert_relative_eq!(
            rows[0].delta_boundary_nonexistence.unwrap(),
            rows[0].mu,
            epsilon = 1e-10
        );
        let mu = (9.0 * 2.1 - 12.0) / 1.9;
        let rows = region_boundaries(4, 2.1, &[mu]);
        assert_relative_eq!(rows[0].delta_boundary_nonexistence.unwrap(), mu, epsilon = 1e-10);
    }

    #[test]
    fn region_boundaries_mark_missing_points() {
        // tiny μ: 1/(μ+1) ≈ 1 exceeds every right side, no positive δ
        let rows = region_boundaries(4, 2.1, &[1e-3, -1.0]);
        assert!(rows[0].delta_boundary_nonexistence.is_none());
        assert!(rows[1].delta_boundary_cmm.is_none());
    }

    #[test]
    fn cmm_boundary_is_a_zero_of_the_margin() {
        for &m in &[1.9, 2.1] {
            for row in region_boundaries(4, m, &[0.5, 1.0, 2.0, 5.0]) {
                if let Some(delta) = row.delta_boundary_cmm {
                    let margin = cmm_margin(&pp(4, m, m, delta, row.mu));
                    assert!(margin.abs() < 1e-9, "m = {m}, mu = {}: {margin}", row.mu);
                }
            }
        }
    }

    #[test]
    fn specialization_at_p_q_two() {
        for &(delta, mu) in &[(1.0, 2.0), (3.0, 3.0), (0.5, 7.0)] {
            let params = pp(5, 2.0, 2.0, delta, mu);
            let a = check_new_existence_subquadratic(&params).inequality_margin;
            let b = check_new_existence_superquadratic(&params).inequality_margin;
            assert_relative_eq!(a, b, epsilon = 1e-15);
            let (sup, sub) = check_nonexistence(&params);
            assert_relative_eq!(sup.inequality_margin, sub.inequality_margin, epsilon = 1e-15);
            assert_relative_eq!(
                sup.inequality_margin,
                3.0 / 5.0 - hyperbola_lhs(&params),
                epsilon = 1e-15
            );
        }
    }

    proptest! {
        #[test]
        fn swap_invariance(n in 2u32..8, p in 1.2f64..4.0, q in 1.2f64..4.0,
                           delta in 0.05f64..10.0, mu in 0.05f64..10.0) {
            let params = pp(n, p, q, delta, mu);
            let a = classify(&params).unwrap();
            let b = classify(&params.swapped()).unwrap();
            prop_assert_eq!(a.verdict, b.verdict);
            for (x, y) in a.details.iter().zip(&b.details) {
                prop_assert_eq!(x.condition_id, y.condition_id);
                prop_assert_eq!(x.satisfied, y.satisfied);
                let close = (x.inequality_margin - y.inequality_margin).abs()
                    <= 1e-12 * (1.0 + x.inequality_margin.abs())
                    || (x.inequality_margin.is_nan() && y.inequality_margin.is_nan());
                prop_assert!(close);
            }
        }

        #[test]
        fn new_existence_margins_decrease(n in 3u32..8, m in 1.2f64..3.0,
                                          delta in 0.05f64..10.0, mu in 0.05f64..10.0,
                                          step in 0.01f64..2.0) {
            let base = pp(n, m, m, delta, mu);
            let more_d = pp(n, m, m, delta + step, mu);
            let more_m = pp(n, m, m, delta, mu + step);
            for f in [check_new_existence_subquadratic, check_new_existence_superquadratic] {
                prop_assert!(f(&more_d).inequality_margin < f(&base).inequality_margin);
                prop_assert!(f(&more_m).inequality_margin < f(&base).inequality_margin);
            }
        }

        #[test]
        fn unknown_only_when_superhomogeneous(n in 2u32..8, p in 1.2f64..4.0, q in 1.2f64..4.0,
                                              delta in 0.05f64..10.0, mu in 0.05f64..10.0) {
            let params = pp(n, p, q, delta, mu);
            let c = classify(&params).unwrap();
            if c.verdict == Verdict::Unknown {
                prop_assert!(compute_d(&params) > 0.0);
                prop_assert!(c.details.iter().all(|d| d.condition_id == ConditionId::Superhomogeneity || !d.satisfied));
            }
        }
    }
}
