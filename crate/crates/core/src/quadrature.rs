//! Quadrature and interpolation primitives: adaptive Gauss–Kronrod (7/15),
//! cumulative integration of node data, and monotone piecewise-cubic
//! interpolation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod evaluation; returns `(kronrod, |kronrod − gauss|)`.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const MAX_SEGMENTS: usize = 4000;

/// Globally adaptive integration: the segment with the largest error is
/// bisected until `error ≤ max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let (value, error) = gauss_kronrod_15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature {
                a,
                b,
                estimate: f64::INFINITY,
                tol: abs_tol.max(rel_tol * total.abs()),
            });
        }
        let tol = abs_tol.max(rel_tol * total.abs());
        if total_err <= tol {
            return Ok(Integral {
                value: total,
                error: total_err,
            });
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature {
                a,
                b,
                estimate: total_err,
                tol,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision; accept what we have
            return Ok(Integral {
                value: total,
                error: total_err,
            });
        }
        let (lv, le) = gauss_kronrod_15(&f, worst.a, mid);
        let (rv, re) = gauss_kronrod_15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
}

const GL3_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Cumulative integral `∫_{x_0}^{x_i} y` of node data, exact for piecewise
/// quintics: each interval integrates the polynomial through the six nearest
/// nodes (fewer when there are fewer nodes).
pub fn cumulative_integral(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let width = n.min(6);
    for i in 0..n - 1 {
        let (a, b) = (x[i], x[i + 1]);
        let start = i.saturating_sub(width / 2 - 1).min(n - width);
        let xs = &x[start..start + width];
        let ys = &y[start..start + width];
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let piece = GL3_X
            .iter()
            .zip(GL3_W)
            .map(|(&t, w)| w * lagrange(xs, ys, c + h * t))
            .sum::<f64>()
            * h;
        out[i + 1] = out[i] + piece;
    }
    out
}

fn lagrange(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..xs.len() {
        let mut basis = 1.0;
        for k in 0..xs.len() {
            if k != j {
                basis *= (t - xs[k]) / (xs[j] - xs[k]);
            }
        }
        acc += ys[j] * basis;
    }
    acc
}

/// Cubic Hermite interpolation on `[x0, x1]` from values and slopes.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of [`hermite`] with respect to `x`.
#[inline]
pub fn hermite_derivative(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Quintic Hermite interpolation on `[x0, x1]` from values, first and second derivatives.
#[inline]
pub fn quintic_hermite(x0: f64, x1: f64, y: (f64, f64), d: (f64, f64), s: (f64, f64), x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    y.0 * h0 + h * d.0 * h1 + h * h * s.0 * h2 + y.1 * h5 + h * d.1 * h4 + h * h * s.1 * h3
}

/// Index `i` with `x[i] <= t <= x[i+1]`, clamped to the valid range.
pub fn locate(x: &[f64], t: f64) -> usize {
    debug_assert!(x.len() >= 2);
    match x.partition_point(|&xi| xi <= t) {
        0 => 0,
        k => (k - 1).min(x.len() - 2),
    }
}

/// Monotone piecewise-cubic interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Domain(
                "interpolation needs at least two nodes and matching lengths".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("interpolation nodes must increase strictly".into()));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = s[0];
            d[1] = s[0];
        } else {
            for i in 1..n - 1 {
                if s[i - 1] * s[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], s[0], s[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        }
        Ok(MonotoneCubic { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = locate(&self.x, t);
        hermite(
            self.x[i],
            self.x[i + 1],
            self.y[i],
            self.y[i + 1],
            self.d[i],
            self.d[i + 1],
            t,
        )
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }
}

fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d.signum() != s0.signum() {
        0.0
    } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kronrod_is_exact_for_polynomials() {
        let (v, e) = gauss_kronrod_15(&|x: f64| x.powi(9) - 3.0 * x * x, 0.0, 2.0);
        assert_relative_eq!(v, 1024.0 / 10.0 - 8.0, epsilon = 1e-12);
        assert!(e < 1e-10);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(r.value, 2.0 / 3.0, epsilon = 1e-11);
        let r = integrate(|x: f64| (-x).exp(), 0.0, 30.0, 1e-13, 1e-13).unwrap();
        assert_relative_eq!(r.value, 1.0 - (-30f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn adaptive_reports_failure() {
        let res = integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-12, 1e-12);
        assert!(matches!(res, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn cumulative_is_exact_for_quintics() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).powf(1.3)).collect();
        let f = |t: f64| 0.3 * t.powi(5) + 2.0 * t * t * t - t + 0.5;
        let big_f = |t: f64| 0.05 * t.powi(6) + 0.5 * t.powi(4) - 0.5 * t * t + 0.5 * t;
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        let c = cumulative_integral(&x, &y);
        for (ci, &xi) in c.iter().zip(&x) {
            assert_relative_eq!(*ci, big_f(xi) - big_f(x[0]), epsilon = 1e-9, max_relative = 1e-12);
        }
    }

    #[test]
    fn cumulative_converges_at_sixth_order() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64 * 3.0).collect();
            let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
            let c = cumulative_integral(&x, &y);
            (c[n] - (1.0 - 3f64.cos())).abs()
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 50.0, "ratio {ratio}");
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let (a, b) = (0.3, 1.7);
        for &t in &[0.3, 0.5, 1.1, 1.7] {
            assert_relative_eq!(hermite(a, b, f(a), f(b), df(a), df(b), t), f(t), epsilon = 1e-13);
            assert_relative_eq!(
                hermite_derivative(a, b, f(a), f(b), df(a), df(b), t),
                df(t),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn quintic_hermite_reproduces_quintic() {
        let f = |x: f64| x.powi(5) - 2.0 * x.powi(3) + x - 4.0;
        let df = |x: f64| 5.0 * x.powi(4) - 6.0 * x * x + 1.0;
        let d2f = |x: f64| 20.0 * x.powi(3) - 12.0 * x;
        let (a, b) = (-0.4, 1.3);
        for &t in &[-0.4, 0.0, 0.77, 1.3] {
            let got = quintic_hermite(a, b, (f(a), f(b)), (df(a), df(b)), (d2f(a), d2f(b)), t);
            assert_relative_eq!(got, f(t), epsilon = 1e-13);
        }
    }

    #[test]
    fn monotone_cubic_reproduces_linear_data() {
        let x = vec![0.0, 0.5, 1.5, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|t| 3.0 - 0.5 * t).collect();
        let m = MonotoneCubic::new(x, y).unwrap();
        for &t in &[0.1, 0.7, 1.9, 3.3] {
            assert_relative_eq!(m.eval(t), 3.0 - 0.5 * t, epsilon = 1e-14);
        }
    }

    #[test]
    fn monotone_cubic_rejects_bad_nodes() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_cubic_preserves_monotonicity(steps in proptest::collection::vec((0.01f64..1.0, 0.0f64..1.0), 3..20)) {
            let mut x = vec![0.0];
            let mut y = vec![10.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() - dy);
            }
            let m = MonotoneCubic::new(x.clone(), y).unwrap();
            let end = *x.last().unwrap();
            let mut prev = m.eval(0.0);
            for k in 1..=400 {
                let v = m.eval(end * k as f64 / 400.0);
                prop_assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }
}
