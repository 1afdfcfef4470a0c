//! Explicit Runge-Kutta drivers over flat complex state vectors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::Method;
use crate::error::{Error, Result};

pub(crate) struct Trajectory {
    pub state: Vec<C64>,
    pub samples: Vec<(f64, Vec<C64>)>,
    pub steps: usize,
}

fn axpy_into(out: &mut [C64], y: &[C64], terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = y[i];
        for &(w, k) in terms {
            acc += k[i] * w;
        }
        *o = acc;
    }
}

/// Integrates `y' = rhs(y)` from `t = 0` to `t_end`, stopping exactly at every
/// requested sample time. `post_step` runs after each accepted step and may
/// project the state or reject the run.
pub(crate) fn integrate<F, P>(
    y0: Vec<C64>,
    t_end: f64,
    dt: f64,
    method: Method,
    record_times: &[f64],
    mut rhs: F,
    mut post_step: P,
) -> Result<Trajectory>
where
    F: FnMut(&[C64], &mut [C64]),
    P: FnMut(f64, &mut [C64]) -> Result<()>,
{
    let mut targets: Vec<(f64, bool)> = record_times.iter().map(|&t| (t, true)).collect();
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));
    if targets.last().map_or(true, |&(t, _)| t < t_end) {
        targets.push((t_end, false));
    }

    let n = y0.len();
    let mut y = y0;
    let mut t = 0.0_f64;
    let mut samples = Vec::new();
    let mut steps = 0usize;
    let mut work = Workspace::new(n);
    let mut h_adapt = dt;

    for (target, record) in targets {
        let span = target - t;
        if span > 0.0 {
            match method {
                Method::Rk4 => {
                    let count = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
                    let h = span / count as f64;
                    let start = t;
                    for i in 0..count {
                        rk4_step(&mut y, h, &mut work, &mut rhs);
                        t = if i + 1 == count { target } else { start + (i + 1) as f64 * h };
                        steps += 1;
                        post_step(t, &mut y)?;
                    }
                }
                Method::Adaptive { atol } => {
                    while t < target {
                        let remaining = target - t;
                        let h = h_adapt.min(remaining);
                        if h <= 1e-14 * t.max(1.0) {
                            return Err(Error::Unstable {
                                time: t,
                                reason: format!("adaptive step collapsed to {h:e}"),
                            });
                        }
                        let err = dp45_trial(&y, h, &mut work, &mut rhs);
                        if err <= atol {
                            core::mem::swap(&mut y, &mut work.trial);
                            t = if h == remaining { target } else { t + h };
                            steps += 1;
                            post_step(t, &mut y)?;
                        }
                        let factor = if err == 0.0 {
                            5.0
                        } else if Float::is_finite(err) {
                            (0.9 * (atol / err).powf(0.2)).clamp(0.2, 5.0)
                        } else {
                            0.2
                        };
                        // a step clipped to land on a sample time says nothing
                        // about the admissible step size
                        let clipped = h < h_adapt && err <= atol;
                        if !clipped {
                            h_adapt = h * factor;
                        }
                    }
                }
            }
        }
        if record {
            samples.push((target, y.clone()));
        }
    }
    Ok(Trajectory {
        state: y,
        samples,
        steps,
    })
}

struct Workspace {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    trial: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || vec![C64::new(0.0, 0.0); n];
        Workspace {
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            trial: z(),
        }
    }
}

fn rk4_step<F: FnMut(&[C64], &mut [C64])>(y: &mut [C64], h: f64, w: &mut Workspace, rhs: &mut F) {
    let [k1, k2, k3, k4, ..] = &mut w.k;
    rhs(y, k1);
    axpy_into(&mut w.tmp, y, &[(0.5 * h, k1)]);
    rhs(&w.tmp, k2);
    axpy_into(&mut w.tmp, y, &[(0.5 * h, k2)]);
    rhs(&w.tmp, k3);
    axpy_into(&mut w.tmp, y, &[(h, k3)]);
    rhs(&w.tmp, k4);
    let s = h / 6.0;
    for i in 0..y.len() {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * s;
    }
}

// Dormand-Prince 5(4) tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One trial step; the fifth-order solution is left in `w.trial` and the
/// max-abs embedded error estimate is returned.
fn dp45_trial<F: FnMut(&[C64], &mut [C64])>(y: &[C64], h: f64, w: &mut Workspace, rhs: &mut F) -> f64 {
    let [k1, k2, k3, k4, k5, k6, k7] = &mut w.k;
    rhs(y, k1);
    axpy_into(&mut w.tmp, y, &[(h * A21, k1)]);
    rhs(&w.tmp, k2);
    axpy_into(&mut w.tmp, y, &[(h * A31, k1), (h * A32, k2)]);
    rhs(&w.tmp, k3);
    axpy_into(&mut w.tmp, y, &[(h * A41, k1), (h * A42, k2), (h * A43, k3)]);
    rhs(&w.tmp, k4);
    axpy_into(
        &mut w.tmp,
        y,
        &[(h * A51, k1), (h * A52, k2), (h * A53, k3), (h * A54, k4)],
    );
    rhs(&w.tmp, k5);
    axpy_into(
        &mut w.tmp,
        y,
        &[(h * A61, k1), (h * A62, k2), (h * A63, k3), (h * A64, k4), (h * A65, k5)],
    );
    rhs(&w.tmp, k6);
    axpy_into(
        &mut w.trial,
        y,
        &[(h * B1, k1), (h * B3, k3), (h * B4, k4), (h * B5, k5), (h * B6, k6)],
    );
    rhs(&w.trial, k7);
    let mut err = 0.0_f64;
    for i in 0..y.len() {
        let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        let a = e.norm();
        if !Float::is_finite(a) {
            return f64::INFINITY;
        }
        err = err.max(a);
    }
    err
}
