//! Dormand-Prince 5(4) integrator with step-size control and the
//! fourth-order continuous extension for dense output.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::powf;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    /// Absolute tolerance per state component.
    pub atol: Vec<f64>,
    pub initial_step: f64,
    pub max_steps: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrate `y' = f(t, y)` from `t0` to `t_end`, returning the state at each
/// of the sorted `out_times` (which must lie in `[t0, t_end]`).
///
/// `check` runs after every accepted step and may abort the integration.
pub fn dopri5<F, C>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    out_times: &[f64],
    opts: &OdeOptions,
    mut check: C,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    C: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    if opts.atol.len() != n || !(t_end >= t0) || !(opts.rtol > 0.0) || !(opts.initial_step > 0.0) {
        return Err(Error::InvalidParameter { name: "ode", reason: "inconsistent integrator settings" });
    }
    let mut out = Vec::with_capacity(out_times.len());
    let mut next = 0;
    while next < out_times.len() && out_times[next] <= t0 {
        out.push(y0.to_vec());
        next += 1;
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut tmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    f(t, &y, &mut k[0]);
    let mut h = opts.initial_step.min(t_end - t0);
    let mut steps = 0;
    let mut last_rejected = false;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::StepFailure { time: t });
        }
        steps += 1;
        let finishing = t + h >= t_end;
        if finishing {
            h = t_end - t;
        }
        if !(h > 1e-14 * t.abs().max(1e-12)) {
            return Err(Error::StepFailure { time: t });
        }
        let [k1, k2, k3, k4, k5, k6, k7] = &mut k;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if finishing { t_end } else { t + h };
        f(t_new, &tmp, k6);
        for i in 0..n {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t_new, &y1, k7);
        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol[i] + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = libm::sqrt(err / n as f64);
        if !err.is_finite() {
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            while next < out_times.len() && out_times[next] <= t_new {
                let theta = ((out_times[next] - t) / h).clamp(0.0, 1.0);
                let th1 = 1.0 - theta;
                let mut row = vec![0.0; n];
                for i in 0..n {
                    let diff = y1[i] - y[i];
                    let bspl = h * k1[i] - diff;
                    let r4 = diff - h * k7[i] - bspl;
                    let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                    row[i] = y[i] + theta * (diff + th1 * (bspl + theta * (r4 + th1 * r5)));
                }
                out.push(row);
                next += 1;
            }
            check(t_new, &y1)?;
            t = t_new;
            core::mem::swap(&mut y, &mut y1);
            k1.copy_from_slice(k7);
            let grow = if last_rejected { 1.0 } else { 5.0 };
            h *= (0.9 * powf(err.max(1e-10), -0.2)).clamp(0.2, grow);
            last_rejected = false;
        } else {
            h *= (0.9 * powf(err, -0.2)).max(0.2);
            last_rejected = true;
        }
    }
    while next < out_times.len() {
        out.push(y.clone());
        next += 1;
    }
    Ok(out)
}
