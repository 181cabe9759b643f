//! A complete separation run: dynamics, axial-frequency trace, quanta budget
//! and the trap depth retained along the way.

use alloc::vec::Vec;

use super::dynamics::{equilibrium_for, integrate, ForceModel, IonState, Tolerances, Trajectory};
use super::quanta::{quanta_from_heating, quanta_from_shuttle, total_quanta, HeatingLaw, ShuttleQuanta};
use super::waveform::Waveform;
use crate::axial::{axial_frequency, fit_axial};
use crate::electrostatics::{IonSpecies, RfDrive};
use crate::layout::{TrapLayout, VoltageSet};
use crate::{Error, Result};

/// Axial frequency as a function of the ramp fraction, tabulated on a
/// uniform grid. Because the voltages depend on time only through the ramp
/// fraction, one map serves every duration and steepness of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMap {
    pub omegas: Vec<f64>,
}

impl FrequencyMap {
    pub fn new(layout: &TrapLayout, ion: &IonSpecies, start: &VoltageSet, end: &VoltageSet, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidParameter { name: "points", reason: "need at least two" });
        }
        let omegas = (0..points)
            .map(|k| {
                let p = k as f64 / (points - 1) as f64;
                axial_frequency(&fit_axial(layout, &start.blend(end, p), ion)?, ion)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { omegas })
    }

    /// Linear interpolation at ramp fraction `p`.
    pub fn at(&self, p: f64) -> f64 {
        let m = self.omegas.len() - 1;
        let x = p.clamp(0.0, 1.0) * m as f64;
        let k = (libm::floor(x) as usize).min(m - 1);
        let s = x - k as f64;
        self.omegas[k] + (self.omegas[k + 1] - self.omegas[k]) * s
    }
}

/// Axial frequency at each time by a fresh quartic fit of the instantaneous
/// axial potential.
pub fn omega_z_trace(layout: &TrapLayout, waveform: &Waveform, ion: &IonSpecies, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    times
        .iter()
        .map(|&t| Ok((t, axial_frequency(&fit_axial(layout, &waveform.at(t)?, ion)?, ion)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationSettings {
    pub tolerances: Tolerances,
    pub heating: HeatingLaw,
    /// Grid size of the [`FrequencyMap`].
    pub map_points: usize,
    /// Times at which the retained trap depth is evaluated.
    pub depth_samples: usize,
    /// Secular periods in each kinetic-energy window.
    pub window_periods: f64,
    pub n_ions: usize,
}

impl Default for SeparationSettings {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            heating: HeatingLaw::default(),
            map_points: 1025,
            depth_samples: 33,
            window_periods: 3.0,
            n_ions: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationRun {
    pub waveform: Waveform,
    pub trajectory: Trajectory,
    /// `(t, omega_z)` at the trajectory's sample times.
    pub omega_trace: Vec<(f64, f64)>,
    pub omega_min: f64,
    pub omega_min_time: f64,
    pub omega_start: f64,
    pub omega_end: f64,
    pub shuttle: ShuttleQuanta,
    pub n_s: f64,
    pub n_an: f64,
    /// `n_an` at the low and high ends of the heating law's band.
    pub n_an_band: (f64, f64),
    pub n_total: f64,
    /// Smallest vertical barrier seen by either ion, eV.
    pub min_depth: f64,
}

/// Everything a sweep reuses between runs of the same layout and endpoints.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub model: ForceModel,
    pub map: FrequencyMap,
    pub start: VoltageSet,
    pub end: VoltageSet,
    /// Cold-start equilibrium at the start voltages.
    pub initial: IonState,
}

impl RunContext {
    pub fn new(
        layout: &TrapLayout,
        drive: &RfDrive,
        ion: &IonSpecies,
        start: &VoltageSet,
        end: &VoltageSet,
        settings: &SeparationSettings,
    ) -> Result<Self> {
        let model = ForceModel::new(layout, drive, ion)?;
        let map = FrequencyMap::new(layout, ion, start, end, settings.map_points)?;
        let eq = equilibrium_for(layout, &model, ion, start, settings.n_ions)?;
        Ok(Self { model, map, start: *start, end: *end, initial: IonState::at_rest(&eq)? })
    }
}

/// Simulate a separation from the cold-start equilibrium.
pub fn simulate_separation(
    layout: &TrapLayout,
    drive: &RfDrive,
    ion: &IonSpecies,
    waveform: &Waveform,
    settings: &SeparationSettings,
) -> Result<SeparationRun> {
    let ctx = RunContext::new(layout, drive, ion, &waveform.start, &waveform.end, settings)?;
    simulate_in(&ctx, waveform, None, settings)
}

/// Simulate with a prepared context, optionally from a given initial state.
pub fn simulate_in(
    ctx: &RunContext,
    waveform: &Waveform,
    initial: Option<&IonState>,
    settings: &SeparationSettings,
) -> Result<SeparationRun> {
    let model = &ctx.model;
    let trajectory = integrate(model, waveform, initial.unwrap_or(&ctx.initial), &settings.tolerances)?;
    let omega_trace: Vec<(f64, f64)> =
        trajectory.times.iter().map(|&t| (t, ctx.map.at(waveform.profile.fraction(t)))).collect();
    let (mut omega_min, mut omega_min_time) = (f64::INFINITY, 0.0);
    for &(t, w) in &omega_trace {
        if w < omega_min {
            omega_min = w;
            omega_min_time = t;
        }
    }
    let omega_start = omega_trace[0].1;
    let omega_end = omega_trace[omega_trace.len() - 1].1;
    let shuttle = quanta_from_shuttle(model, waveform, &trajectory, omega_start, omega_end, settings.window_periods)?;
    let h_um = model.node.1 / crate::units::MICROMETRE;
    let n_an = quanta_from_heating(&omega_trace, h_um, &settings.heating)?;
    let (lo, hi) = settings.heating.band();
    let n_an_band = (quanta_from_heating(&omega_trace, h_um, &lo)?, quanta_from_heating(&omega_trace, h_um, &hi)?);
    let min_depth = retained_depth(model, waveform, &trajectory, settings.depth_samples);
    Ok(SeparationRun {
        waveform: *waveform,
        omega_min,
        omega_min_time,
        omega_start,
        omega_end,
        n_s: shuttle.n_s,
        n_an,
        n_an_band,
        n_total: total_quanta(shuttle.n_s, n_an),
        shuttle,
        min_depth,
        trajectory,
        omega_trace,
    })
}

/// Smallest vertical barrier above either ion at `samples` evenly spaced
/// times, eV.
pub fn retained_depth(model: &ForceModel, waveform: &Waveform, traj: &Trajectory, samples: usize) -> f64 {
    let t_end = waveform.duration();
    let samples = samples.max(2);
    let mut depth = f64::INFINITY;
    for k in 0..samples {
        let t = t_end * k as f64 / (samples - 1) as f64;
        let state = &traj.states[traj.nearest(t)];
        let v = waveform.at_fraction(waveform.profile.fraction(t));
        for r in state.positions() {
            depth = depth.min(model.vertical_barrier(&v, r[0], r[2]));
        }
    }
    depth
}
