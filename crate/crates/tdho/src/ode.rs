//! Adaptive Dormand–Prince 5(4) integration for small fixed-size ODE systems.
//!
//! The solver steps with the classic DOPRI5 embedded pair and PI-free step
//! control, clamping steps so that requested output times are hit exactly
//! (no interpolation error enters stored samples). System sizes here are 2-3
//! components, so everything stays on the stack via const generics.

use crate::error::{Error, Result};

/// Dormand–Prince 5(4) Butcher tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// 5th-order weights (identical to the last tableau row: FSAL pair).
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Embedded 4th-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const MAX_STEPS: usize = 2_000_000;

/// Integrate dy/dt = f(t, y) from `t0` through every time in `t_out`
/// (strictly increasing, `t_out[0] >= t0`), returning the state at each
/// requested time. Absolute and relative tolerances are both `tol`.
pub fn integrate_to<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    t0: f64,
    y0: [f64; N],
    t_out: &[f64],
    tol: f64,
) -> Result<Vec<[f64; N]>> {
    let mut out = Vec::with_capacity(t_out.len());
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y)?;
    let mut h = initial_step(t_out.last().copied().unwrap_or(t0) - t0, tol);
    let mut steps = 0usize;

    for &target in t_out {
        if target < t - 1e-12 {
            return Err(Error::Domain(format!(
                "output times must be non-decreasing: {target} after reaching {t}"
            )));
        }
        while t < target {
            if steps >= MAX_STEPS {
                return Err(Error::Integration {
                    tau: t,
                    reason: format!("step budget of {MAX_STEPS} exhausted"),
                });
            }
            steps += 1;
            let h_try = h.min(target - t);

            // Seven stages; stage 0 reuses the FSAL derivative.
            let mut k = [[0.0; N]; 7];
            k[0] = k0;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for i in 0..N {
                        ys[i] += h_try * A[s][j] * kj[i];
                    }
                }
                k[s] = f(t + C[s] * h_try, &ys)?;
            }

            let mut y5 = y;
            let mut y4 = y;
            for (s, ks) in k.iter().enumerate() {
                for i in 0..N {
                    y5[i] += h_try * B5[s] * ks[i];
                    y4[i] += h_try * B4[s] * ks[i];
                }
            }

            // RMS of the componentwise scaled error estimate.
            let mut err = 0.0;
            for i in 0..N {
                let scale = tol + tol * y[i].abs().max(y5[i].abs());
                let e = (y5[i] - y4[i]) / scale;
                err += e * e;
            }
            let err = (err / N as f64).sqrt();

            if err <= 1.0 {
                t += h_try;
                y = y5;
                k0 = k[6]; // FSAL: last stage is f at the new point.
                if !y.iter().all(|v| v.is_finite()) {
                    return Err(Error::Integration {
                        tau: t,
                        reason: "solution became non-finite".into(),
                    });
                }
            }
            let scale = if err == 0.0 {
                MAX_SCALE
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
            };
            h = (h_try * scale).max(1e-14);
        }
        out.push(y);
    }
    Ok(out)
}

fn initial_step(span: f64, tol: f64) -> f64 {
    (span.abs() * 1e-3).max(tol.sqrt() * 1e-2).clamp(1e-8, 0.1)
}
