//! Adaptive Dormand-Prince 5(4) integrator for autonomous systems, just
//! enough for the Lotka-Volterra attractivity heuristic.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

/// Integrates `y' = f(y)` from `t0` to `t1` in place. `h` carries the step
/// size between calls so chunked integration does not restart cold.
pub fn integrate<F>(
    f: &F,
    y: &mut [f64],
    t0: f64,
    t1: f64,
    h: &mut f64,
    tol: &Tolerances,
) -> Result<()>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut t = t0;
    if *h <= 0.0 || !h.is_finite() {
        *h = ((t1 - t0) * 1e-3).max(1e-6);
    }
    f(y, &mut k[0]);
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::Ode(format!("step budget exhausted at t = {t}")));
        }
        let step = h.min(t1 - t);

        stage(&mut tmp, y, step, &k, &[A21]);
        f(&tmp, &mut k[1]);
        stage(&mut tmp, y, step, &k, &[A31, A32]);
        f(&tmp, &mut k[2]);
        stage(&mut tmp, y, step, &k, &[A41, A42, A43]);
        f(&tmp, &mut k[3]);
        stage(&mut tmp, y, step, &k, &[A51, A52, A53, A54]);
        f(&tmp, &mut k[4]);
        stage(&mut tmp, y, step, &k, &[A61, A62, A63, A64, A65]);
        f(&tmp, &mut k[5]);
        stage(&mut y5, y, step, &k, &[A71, 0.0, A73, A74, A75, A76]);
        f(&y5, &mut k[6]);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = step
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let scale = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            return Err(Error::Ode(format!("non-finite state at t = {t}")));
        }

        if err <= 1.0 {
            t += step;
            y.copy_from_slice(&y5);
            k.swap(0, 6);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        *h = step * factor;
        if *h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Ode(format!("step size underflow at t = {t}")));
        }
    }
    Ok(())
}

fn stage(out: &mut [f64], y: &[f64], h: f64, k: &[Vec<f64>], a: &[f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (j, aj) in a.iter().enumerate() {
            acc += aj * k[j][i];
        }
        out[i] = y[i] + h * acc;
    }
}
