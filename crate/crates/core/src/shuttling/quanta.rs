//! Motional quanta gained during a ramp: classical excitation by the ramp
//! itself and anomalous heating from the electrode surfaces.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::dynamics::{ForceModel, Trajectory};
use super::waveform::Waveform;
use crate::units::HBAR;
use crate::{Error, Result, Vec3};

/// How the heating law's frequency is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnit {
    /// rad/s
    Angular,
    /// Hz
    Cyclic,
}

/// Empirical heating-rate law `rate = coefficient / (omega^2 h^4)` with `h`
/// in micrometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingLaw {
    /// um^4 Hz^3
    pub coefficient: f64,
    /// One-sigma uncertainty of the coefficient, same unit.
    pub uncertainty: f64,
    pub frequency_unit: FrequencyUnit,
}

impl Default for HeatingLaw {
    fn default() -> Self {
        Self { coefficient: 1.97e26, uncertainty: 0.15e26, frequency_unit: FrequencyUnit::Angular }
    }
}

impl HeatingLaw {
    fn with_coefficient(&self, coefficient: f64) -> Self {
        Self { coefficient, ..*self }
    }

    /// The laws at the low and high ends of the uncertainty band.
    pub fn band(&self) -> (Self, Self) {
        (self.with_coefficient(self.coefficient - self.uncertainty), self.with_coefficient(self.coefficient + self.uncertainty))
    }
}

/// Heating rate in quanta/s at angular frequency `omega` (rad/s) and ion
/// height `h_um` in micrometres.
pub fn anomalous_rate(omega: f64, h_um: f64, law: &HeatingLaw) -> Result<f64> {
    if !(omega > 0.0) || !(h_um > 0.0) {
        return Err(Error::InvalidParameter { name: "omega/h", reason: "must be positive" });
    }
    let w = match law.frequency_unit {
        FrequencyUnit::Angular => omega,
        FrequencyUnit::Cyclic => omega / (2.0 * PI),
    };
    let h2 = h_um * h_um;
    Ok(law.coefficient / (w * w * h2 * h2))
}

/// Trapezoidal integral of the heating rate over an `(t, omega)` trace.
pub fn quanta_from_heating(trace: &[(f64, f64)], h_um: f64, law: &HeatingLaw) -> Result<f64> {
    let mut n = 0.0;
    for w in trace.windows(2) {
        let (t0, w0) = w[0];
        let (t1, w1) = w[1];
        n += 0.5 * (t1 - t0) * (anomalous_rate(w0, h_um, law)? + anomalous_rate(w1, h_um, law)?);
    }
    if trace.len() == 1 {
        anomalous_rate(trace[0].1, h_um, law)?;
    }
    Ok(n)
}

pub fn total_quanta(n_s: f64, n_an: f64) -> f64 {
    n_s + n_an
}

/// Number of equilibrium solves per energy window.
const WINDOW_NODES: usize = 9;

/// Axial velocity of each ion's equilibrium at `WINDOW_NODES` times across
/// `[t0, t1]`, by central differences of the equilibrium position.
fn well_velocities(
    model: &ForceModel,
    waveform: &Waveform,
    seed: &[Vec3],
    t0: f64,
    t1: f64,
) -> Result<Vec<(f64, [f64; 2])>> {
    let t_max = waveform.duration();
    let delta = 1e-3 * (t1 - t0);
    let mut seed = seed.to_vec();
    let mut out = Vec::with_capacity(WINDOW_NODES);
    for k in 0..WINDOW_NODES {
        let t = t0 + (t1 - t0) * k as f64 / (WINDOW_NODES - 1) as f64;
        let (ta, tb) = ((t - delta).max(0.0), (t + delta).min(t_max));
        let va = waveform.at_fraction(waveform.profile.fraction(ta));
        let vb = waveform.at_fraction(waveform.profile.fraction(tb));
        let ea = model.equilibrium(&va, &seed)?;
        let eb = model.equilibrium(&vb, &ea)?;
        let mut v = [0.0; 2];
        for (i, vi) in v.iter_mut().enumerate().take(seed.len()) {
            *vi = (eb[i][2] - ea[i][2]) / (tb - ta);
        }
        seed = eb;
        out.push((t, v));
    }
    Ok(out)
}

fn interpolate(nodes: &[(f64, [f64; 2])], t: f64, ion: usize) -> f64 {
    let k = nodes.partition_point(|n| n.0 < t).clamp(1, nodes.len() - 1);
    let (a, b) = (&nodes[k - 1], &nodes[k]);
    let s = ((t - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
    a.1[ion] + (b.1[ion] - a.1[ion]) * s
}

/// Largest axial kinetic energy of each ion relative to its moving well over
/// `[t0, t1]`.
fn window_ke_max(model: &ForceModel, waveform: &Waveform, traj: &Trajectory, t0: f64, t1: f64) -> Result<[f64; 2]> {
    let i0 = traj.nearest(t0);
    let seed = traj.states[i0].positions().to_vec();
    let n = seed.len();
    let nodes = well_velocities(model, waveform, &seed, t0, t1)?;
    let mut ke = [0.0_f64; 2];
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if *t < t0 || *t > t1 {
            continue;
        }
        for (i, k) in ke.iter_mut().enumerate().take(n) {
            let v = s.vel[i][2] - interpolate(&nodes, *t, i);
            *k = (*k).max(0.5 * model.mass() * v * v);
        }
    }
    Ok(ke)
}

/// Quanta gained by the ramp itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShuttleQuanta {
    /// Mean over the ions of `(KE_max,final - KE_max,initial) / (hbar omega_end)`.
    pub n_s: f64,
    pub per_ion: [f64; 2],
    pub ke_initial: [f64; 2],
    pub ke_final: [f64; 2],
}

/// Quanta from the change of the peak axial kinetic energy (in the frame of
/// the moving well) between the first and last `periods` secular periods.
pub fn quanta_from_shuttle(
    model: &ForceModel,
    waveform: &Waveform,
    traj: &Trajectory,
    omega_start: f64,
    omega_end: f64,
    periods: f64,
) -> Result<ShuttleQuanta> {
    let t_end = waveform.duration();
    let (w0, w1) = (periods * 2.0 * PI / omega_start, periods * 2.0 * PI / omega_end);
    if t_end < w0 + w1 {
        return Err(Error::WindowTooShort { duration: t_end, required: w0 + w1 });
    }
    let first = window_ke_max(model, waveform, traj, 0.0, w0)?;
    let last = window_ke_max(model, waveform, traj, t_end - w1, t_end)?;
    let n = traj.states[0].n;
    let mut per_ion = [f64::NAN; 2];
    for i in 0..n {
        per_ion[i] = (last[i] - first[i]) / (HBAR * omega_end);
    }
    let n_s = per_ion[..n].iter().sum::<f64>() / n as f64;
    Ok(ShuttleQuanta { n_s, per_ion, ke_initial: first, ke_final: last })
}
