//! Dormand–Prince 5(4) embedded Runge–Kutta step with FSAL.
//!
//! Only the single step and the step-size controller live here; the driver
//! loop (events, caps, invariants) belongs to the shooting module.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem<const D: usize> {
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D];
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<const D: usize> {
    pub rtol: f64,
    pub atol: [f64; D],
}

#[derive(Debug, Clone, Copy)]
pub struct Trial<const D: usize> {
    pub y: [f64; D],
    /// `f(t + h, y)`, reusable as the first stage of the next step.
    pub f_end: [f64; D],
    /// Weighted RMS error; the step is acceptable when `≤ 1`.
    pub error: f64,
}

pub fn dopri5_step<S: OdeSystem<D>, const D: usize>(
    sys: &S,
    t: f64,
    y: &[f64; D],
    f0: &[f64; D],
    h: f64,
    tol: &Tolerance<D>,
) -> Trial<D> {
    let mut k = [[0.0; D]; 7];
    k[0] = *f0;
    for s in 1..7 {
        let mut ys = *y;
        for (i, yi) in ys.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..s {
                acc += A[s][j] * k[j][i];
            }
            *yi += h * acc;
        }
        k[s] = sys.rhs(t + C[s] * h, &ys);
        if s == 6 {
            // stage 7 is evaluated at the fifth-order solution itself
            let mut sum = 0.0;
            for i in 0..D {
                let mut err = 0.0;
                for (j, e) in E.iter().enumerate() {
                    err += e * k[j][i];
                }
                err *= h;
                let scale = tol.atol[i] + tol.rtol * y[i].abs().max(ys[i].abs());
                sum += (err / scale).powi(2);
            }
            return Trial {
                y: ys,
                f_end: k[6],
                error: (sum / D as f64).sqrt(),
            };
        }
    }
    unreachable!("loop returns at the last stage")
}

/// Standard controller: `h·0.9·err^{-1/5}`, growth limited to `[0.2, 5]`.
pub fn next_step_size(h: f64, error: f64) -> f64 {
    let factor = if error == 0.0 {
        5.0
    } else {
        (0.9 * error.powf(-0.2)).clamp(0.2, 5.0)
    };
    h * factor
}
