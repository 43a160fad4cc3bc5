//! Embedded adaptive Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! One integrator serves every model in the crate: the three collective Bloch
//! equations, per-site ensembles of thousands of reals, vectorized density
//! matrices. Steps are clamped to land exactly on requested sample times, so
//! sampled values carry no interpolation error and conservation checks see
//! the integrated state itself.

use crate::error::{Error, Result};

/// Right-hand side of an autonomous-in-form ODE system dy/dt = f(t, y).
pub trait OdeSystem {
    fn rhs(&mut self, t: f64, y: &[f64], dydt: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Relative tolerance per component.
    pub rtol: f64,
    /// Absolute tolerance per component.
    pub atol: f64,
    /// Initial step; None picks a conservative guess from the first sample gap.
    pub h_init: Option<f64>,
    /// Hard cap on accepted+rejected steps, as a runaway guard.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            max_steps: 200_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }
}

// Dormand–Prince 5(4) tableau (FSAL, 7 stages).
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// 5th-order minus embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate from `t0`, invoking `on_sample(sys, index, t, y)` at every time
/// in `samples` (strictly increasing, all ≥ t0). The state at t0 is reported
/// as a sample only if `samples[0] == t0`. The system is handed to the
/// callback so observables can be read with model context.
pub fn integrate_sampled<S: OdeSystem>(
    sys: &mut S,
    t0: f64,
    y0: &[f64],
    samples: &[f64],
    opts: &OdeOptions,
    mut on_sample: impl FnMut(&mut S, usize, f64, &[f64]) -> Result<()>,
) -> Result<Vec<f64>> {
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut sample_idx = 0;
    while sample_idx < samples.len() && samples[sample_idx] <= t {
        if samples[sample_idx] < t0 {
            return Err(Error::Range("sample time precedes t0".into()));
        }
        on_sample(sys, sample_idx, t, &y)?;
        sample_idx += 1;
    }
    if sample_idx >= samples.len() {
        return Ok(y);
    }
    let t_end = *samples.last().unwrap();

    let mut h = opts.h_init.unwrap_or((samples[sample_idx] - t) * 1e-3);
    let mut fsal_valid = false;
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration {
                t,
                reason: format!("exceeded {} steps", opts.max_steps),
                last_state: y,
            });
        }
        // Clamp the step to the next sample time.
        let t_target = samples[sample_idx];
        let mut hitting_sample = false;
        if t + h >= t_target {
            h = t_target - t;
            hitting_sample = true;
        }
        let h_floor = 16.0 * f64::EPSILON * t.abs().max(t_target.abs());
        if h <= h_floor && !hitting_sample {
            return Err(Error::Integration {
                t,
                reason: "step size underflow".into(),
                last_state: y,
            });
        }

        if !fsal_valid {
            sys.rhs(t, &y, &mut k[0]);
        }
        macro_rules! stage {
            ($ki:expr, $coeffs:expr, $ci:expr) => {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, a) in $coeffs.iter().enumerate() {
                        acc += a * k[j][i];
                    }
                    y_stage[i] = y[i] + h * acc;
                }
                sys.rhs(t + $ci * h, &y_stage, &mut k[$ki]);
            };
        }
        stage!(1, A2, C[1]);
        stage!(2, A3, C[2]);
        stage!(3, A4, C[3]);
        stage!(4, A5, C[4]);
        stage!(5, A6, C[5]);
        // 7th stage evaluates at the 5th-order solution (FSAL).
        for i in 0..n {
            let mut acc = 0.0;
            for (j, a) in A7.iter().enumerate() {
                acc += a * k[j][i];
            }
            y_new[i] = y[i] + h * acc;
        }
        sys.rhs(t + h, &y_new, &mut k[6]);

        // Scaled rms error norm.
        let mut err_acc = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, w) in E.iter().enumerate() {
                e += w * k[j][i];
            }
            e *= h;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let r = e / scale;
            err_acc += r * r;
        }
        let err = (err_acc / n as f64).sqrt();

        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            fsal_valid = true;
            if hitting_sample {
                t = t_target; // exact landing
                on_sample(sys, sample_idx, t, &y)?;
                sample_idx += 1;
                // Emit any duplicate sample times.
                while sample_idx < samples.len() && samples[sample_idx] == t {
                    on_sample(sys, sample_idx, t, &y)?;
                    sample_idx += 1;
                }
                if sample_idx >= samples.len() {
                    break;
                }
            }
            let grow = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).min(5.0)
            };
            h *= grow;
        } else {
            // Rejected: k[0] still holds f(t, y) for the retry.
            fsal_valid = true;
            let shrink = (0.9 * err.powf(-0.2)).max(0.2);
            h *= shrink;
            if h <= h_floor {
                return Err(Error::Integration {
                    t,
                    reason: "step size underflow after rejection".into(),
                    last_state: y,
                });
            }
        }
    }
    Ok(y)
}

/// Integrate to a single final time without intermediate samples.
pub fn integrate_to<S: OdeSystem>(
    sys: &mut S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
) -> Result<Vec<f64>> {
    if t1 == t0 {
        return Ok(y0.to_vec());
    }
    integrate_sampled(sys, t0, y0, &[t1], opts, |_, _, _, _| Ok(()))
}

/// Uniform sample grid t0, t0+dt, …, covering [t0, t_final]; the final time
/// is always included exactly.
pub fn uniform_grid(t0: f64, t_final: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0 && t_final >= t0);
    let n = ((t_final - t0) / dt).round() as usize;
    let n = n.max(1);
    let mut out: Vec<f64> = (0..n).map(|i| t0 + dt * i as f64).collect();
    // Guard against accumulated rounding: pin the final point.
    out.push(t_final);
    out.dedup();
    if let Some(pos) = out.iter().rposition(|&t| t > t_final) {
        out.truncate(pos);
        out.push(t_final);
    }
    out
}
