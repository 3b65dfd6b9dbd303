//! Explicit Dormand-Prince 5(4) integrator with adaptive step control,
//! used to transport block solutions along the negative real axis.

use crate::error::{Result, TodaError};

/// Right-hand side of `dy/dt = f(t, y)`; writes the derivative into `dydt`.
pub trait OdeSystem {
    fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]);
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeSystem for F {
    fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]) {
        self(t, y, dydt)
    }
}

/// Integrator configuration. Accuracy is controlled by the mixed tolerance
/// `atol + rtol * |y|` per component.
#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on `|h|`.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { rtol: 1e-12, atol: 1e-14, max_step: 1e-2, max_steps: 2_000_000 }
    }
}

// Dormand-Prince coefficients (the classical 5(4) pair).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
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
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dopri5 {
    /// Integrate from `t0` to `t1` (either direction) starting at `y0`;
    /// returns the state at `t1`.
    pub fn integrate<S: OdeSystem>(&self, sys: &S, t0: f64, t1: f64, y0: &[f64]) -> Result<Vec<f64>> {
        let dim = y0.len();
        if dim == 0 || !t0.is_finite() || !t1.is_finite() {
            return Err(TodaError::OdeFailure("empty state or non-finite endpoints".into()));
        }
        if t0 == t1 {
            return Ok(y0.to_vec());
        }
        let dir = (t1 - t0).signum();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k = vec![vec![0.0f64; dim]; 7];
        let mut h = dir * self.max_step.min((t1 - t0).abs());
        let mut ytmp = vec![0.0f64; dim];
        let mut y5 = vec![0.0f64; dim];
        let mut y4 = vec![0.0f64; dim];
        for _ in 0..self.max_steps {
            if (t - t1) * dir >= 0.0 {
                return Ok(y);
            }
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
            }
            // FSAL not exploited; seven stages per trial step.
            for s in 0..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += h * A[s][j] * kj[i];
                    }
                    ytmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                sys.eval(t + C[s] * h, &ytmp, &mut tail[0]);
            }
            let mut err = 0.0f64;
            for i in 0..dim {
                let mut v5 = y[i];
                let mut v4 = y[i];
                for s in 0..7 {
                    v5 += h * B5[s] * k[s][i];
                    v4 += h * B4[s] * k[s][i];
                }
                y5[i] = v5;
                y4[i] = v4;
                let sc = self.atol + self.rtol * y[i].abs().max(v5.abs());
                let e = (v5 - v4) / sc;
                err += e * e;
            }
            err = (err / dim as f64).sqrt();
            if err <= 1.0 {
                t += h;
                y.copy_from_slice(&y5);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).clamp(-self.max_step, self.max_step);
            if h.abs() < 1e-15 * t.abs().max(1.0) {
                return Err(TodaError::OdeFailure(format!(
                    "step size underflow at t = {t}"
                )));
            }
        }
        Err(TodaError::OdeFailure(format!(
            "no convergence within {} steps (t = {t}, target {t1})",
            self.max_steps
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn exponential_growth_forward_and_backward() {
        let solver = Dopri5::default();
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let fwd = solver.integrate(&f, 0.0, 1.0, &[1.0]).unwrap();
        assert!(close(fwd[0], 1f64.exp(), 1e-12), "{}", fwd[0]);
        let bwd = solver.integrate(&f, 0.0, -1.0, &[1.0]).unwrap();
        assert!(close(bwd[0], (-1f64).exp(), 1e-12), "{}", bwd[0]);
    }

    #[test]
    fn harmonic_oscillator_round_trip() {
        let solver = Dopri5::default();
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let tau = 2.0 * std::f64::consts::PI;
        let out = solver.integrate(&f, 0.0, tau, &[1.0, 0.0]).unwrap();
        assert!(close(out[0], 1.0, 1e-10) && out[1].abs() < 1e-10, "{out:?}");
    }

    #[test]
    fn linear_system_matches_closed_form() {
        // y' = [[0, 1], [2, 1]] y has eigenvalues 2 and -1.
        // With y0 = (1, 2) (eigenvector of 2): y(t) = e^{2t} y0.
        let solver = Dopri5::default();
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = 2.0 * y[0] + y[1];
        };
        let out = solver.integrate(&f, 0.0, 0.7, &[1.0, 2.0]).unwrap();
        let s = (2.0 * 0.7f64).exp();
        assert!(close(out[0], s, 1e-11) && close(out[1], 2.0 * s, 1e-11), "{out:?}");
    }

    #[test]
    fn time_dependent_coefficient() {
        // y' = y / t from t=1 to t=3: y = C t.
        let solver = Dopri5::default();
        let f = |t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] / t;
        let out = solver.integrate(&f, 1.0, 3.0, &[2.0]).unwrap();
        assert!(close(out[0], 6.0, 1e-12), "{}", out[0]);
        // and moving toward the singularity but stopping before it
        let out = solver.integrate(&f, 1.0, 0.05, &[2.0]).unwrap();
        assert!(close(out[0], 0.1, 1e-11), "{}", out[0]);
    }

    #[test]
    fn step_budget_enforced() {
        let solver = Dopri5 { max_steps: 10, ..Dopri5::default() };
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        assert!(matches!(
            solver.integrate(&f, 0.0, 1.0, &[1.0]),
            Err(TodaError::OdeFailure(_))
        ));
    }
}
