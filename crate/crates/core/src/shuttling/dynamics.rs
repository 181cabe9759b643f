//! Secular-frame dynamics of one or two ions in the time-averaged effective
//! potential, with the mutual Coulomb repulsion for two ions.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::ode::{dopri5, OdeOptions};
use super::waveform::Waveform;
use crate::axial::axial_potential;
use crate::electrostatics::{
    patch_basis, patch_value_gradient, rf_field_squared, IonSpecies, RectPatch, RfDrive, StripElectrode,
};
use crate::geometry::{find_escape, find_node};
use crate::layout::{SegmentRole, TrapLayout, VoltageSet};
use crate::math::sqrt;
use crate::optimize::{maximize, GridSpacing, ScanSettings};
use crate::units::{coulomb_scale, joules_to_ev, VACUUM_PERMITTIVITY};
use crate::{Error, Mat3, Result, Vec3};

/// Ions closer than this abort the integration.
pub const COINCIDENCE_GUARD: f64 = 10e-9;

/// Potential energy model of ions above a layout.
#[derive(Debug, Clone)]
pub struct ForceModel {
    strips: Vec<StripElectrode>,
    pseudo_k: f64,
    patches: Vec<(SegmentRole, RectPatch)>,
    charge: f64,
    mass: f64,
    coulomb_k: f64,
    /// rf node `(x0, h)`.
    pub node: (f64, f64),
    /// Height of the rf-only escape saddle, m.
    pub escape_height: f64,
    /// Half-length of the segmented region, m.
    pub axial_extent: f64,
    /// Radial secular frequency of the bare pseudopotential, rad/s.
    pub radial_omega: f64,
}

impl ForceModel {
    pub fn new(layout: &TrapLayout, drive: &RfDrive, ion: &IonSpecies) -> Result<Self> {
        let strips = layout.rf_strips();
        let scale = layout.five_wire.a;
        let node = find_node(&strips, layout.node(), scale)?;
        let escape = find_escape(&strips, node, scale)?;
        let pseudo_k = drive.pseudo_prefactor(ion);
        let curv = rf_field_squared(&strips, node.0, node.1).hessian[(0, 0)] * pseudo_k;
        let patches = layout.segments().into_iter().map(|s| (s.role, s.patch)).collect();
        Ok(Self {
            strips,
            pseudo_k,
            patches,
            charge: ion.charge,
            mass: ion.mass,
            coulomb_k: ion.charge * ion.charge / (4.0 * PI * VACUUM_PERMITTIVITY),
            node,
            escape_height: escape.1,
            axial_extent: layout.axial_extent(),
            radial_omega: sqrt(curv / ion.mass),
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn active<'a>(&'a self, v: &'a VoltageSet) -> impl Iterator<Item = (&'a RectPatch, f64)> + 'a {
        self.patches.iter().filter_map(move |(role, p)| {
            let volts = v.get(*role);
            (volts != 0.0).then_some((p, volts))
        })
    }

    /// Single-ion potential energy, J.
    pub fn ion_potential(&self, r: &Vec3, v: &VoltageSet) -> f64 {
        let pseudo = rf_field_squared(&self.strips, r[0], r[1]).value * self.pseudo_k;
        let stat: f64 = self.active(v).map(|(p, volts)| volts * patch_value_gradient(p, r).0).sum();
        pseudo + self.charge * stat
    }

    /// Gradient of the single-ion potential energy, J/m.
    pub fn ion_gradient(&self, r: &Vec3, v: &VoltageSet) -> Vec3 {
        let ps = rf_field_squared(&self.strips, r[0], r[1]);
        let mut g = ps.gradient * self.pseudo_k;
        for (p, volts) in self.active(v) {
            g += patch_value_gradient(p, r).1 * (volts * self.charge);
        }
        g
    }

    /// Hessian of the single-ion potential energy, J/m^2.
    pub fn ion_hessian(&self, r: &Vec3, v: &VoltageSet) -> Result<Mat3> {
        let mut h = rf_field_squared(&self.strips, r[0], r[1]).hessian * self.pseudo_k;
        for (p, volts) in self.active(v) {
            h += patch_basis(p, r)?.hessian * (volts * self.charge);
        }
        Ok(h)
    }

    /// Total potential energy including the mutual Coulomb energy.
    pub fn potential(&self, positions: &[Vec3], v: &VoltageSet) -> f64 {
        let mut u: f64 = positions.iter().map(|r| self.ion_potential(r, v)).sum();
        if positions.len() == 2 {
            u += self.coulomb_k / (positions[0] - positions[1]).norm();
        }
        u
    }

    /// Gradients of the total potential energy with respect to each ion.
    pub fn gradients(&self, positions: &[Vec3], v: &VoltageSet) -> Vec<Vec3> {
        let mut g: Vec<Vec3> = positions.iter().map(|r| self.ion_gradient(r, v)).collect();
        if positions.len() == 2 {
            let d = positions[0] - positions[1];
            let r = d.norm();
            let c = d * (self.coulomb_k / (r * r * r));
            g[0] -= c;
            g[1] += c;
        }
        g
    }

    fn hessian(&self, positions: &[Vec3], v: &VoltageSet) -> Result<DMatrix<f64>> {
        let n = positions.len();
        let mut h = DMatrix::zeros(3 * n, 3 * n);
        for (i, r) in positions.iter().enumerate() {
            let hi = self.ion_hessian(r, v)?;
            h.view_mut((3 * i, 3 * i), (3, 3)).copy_from(&hi);
        }
        if n == 2 {
            let d = positions[0] - positions[1];
            let r = d.norm();
            let block = (d * d.transpose() * (3.0 / (r * r)) - Mat3::identity()) * (self.coulomb_k / (r * r * r));
            for (bi, bj, s) in [(0, 0, 1.0), (3, 3, 1.0), (0, 3, -1.0), (3, 0, -1.0)] {
                let mut view = h.view_mut((bi, bj), (3, 3));
                view += block * s;
            }
        }
        Ok(h)
    }

    /// Local minimum of the total potential energy nearest `guess`, by
    /// damped Newton iteration on the gradient.
    pub fn equilibrium(&self, v: &VoltageSet, guess: &[Vec3]) -> Result<Vec<Vec3>> {
        let n = guess.len();
        if n == 0 || n > 2 {
            return Err(Error::InvalidParameter { name: "ions", reason: "one or two ions are supported" });
        }
        let flat = |g: &[Vec3]| DVector::from_iterator(3 * n, g.iter().flat_map(|r| r.iter().copied()));
        let mut x: Vec<Vec3> = guess.to_vec();
        let mut grad = flat(&self.gradients(&x, v));
        let scale = self.node.1;
        // force of the bare pseudopotential one node height from the node
        let force_scale = self.mass * self.radial_omega * self.radial_omega * scale;
        for _ in 0..200 {
            if grad.norm() < 1e-14 * force_scale {
                return Ok(x);
            }
            let h = self.hessian(&x, v)?;
            let mut mu = 0.0;
            let mut step = None;
            let diag = (0..3 * n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
            for _ in 0..60 {
                let shifted = &h + DMatrix::identity(3 * n, 3 * n) * mu;
                if let Some(ch) = shifted.cholesky() {
                    step = Some(-ch.solve(&grad));
                    break;
                }
                mu = if mu == 0.0 { 1e-6 * diag } else { mu * 10.0 };
            }
            let step = step.ok_or(Error::NoTrappingPoint { reason: "equilibrium Hessian could not be regularised" })?;
            let mut lambda = 1.0;
            let g0 = grad.norm();
            loop {
                let trial: Vec<Vec3> = (0..n)
                    .map(|i| x[i] + Vec3::new(step[3 * i], step[3 * i + 1], step[3 * i + 2]) * lambda)
                    .collect();
                let valid = trial.iter().all(|r| r[1] > 0.0);
                if valid {
                    let gt = flat(&self.gradients(&trial, v));
                    if gt.norm() < g0 || lambda < 1e-4 {
                        x = trial;
                        grad = gt;
                        break;
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-8 {
                    return Err(Error::NoTrappingPoint { reason: "equilibrium search stalled" });
                }
            }
            if step.norm() * lambda < 1e-13 * scale {
                return Ok(x);
            }
        }
        Err(Error::NoTrappingPoint { reason: "equilibrium search did not converge" })
    }

    /// Height of the potential barrier above an ion at `(x, z)`: the rise from
    /// the minimum along the vertical line to the highest point below `8 h`,
    /// in eV.
    pub fn vertical_barrier(&self, v: &VoltageSet, x: f64, z: f64) -> f64 {
        let h = self.node.1;
        let u = |y: f64| self.ion_potential(&Vec3::new(x, y, z), v);
        let low = maximize(|y| -u(y), 0.3 * h, 3.0 * h, &ScanSettings { points: 96, spacing: GridSpacing::Linear, rel_tol: 1e-7 });
        let Ok(low) = low else { return 0.0 };
        let high = maximize(u, low.x, 8.0 * h, &ScanSettings { points: 192, spacing: GridSpacing::Linear, rel_tol: 1e-7 });
        let Ok(high) = high else { return 0.0 };
        joules_to_ev(high.value + low.value).max(0.0)
    }
}

/// Positions and velocities of one or two ions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonState {
    pub n: usize,
    pub pos: [Vec3; 2],
    pub vel: [Vec3; 2],
}

impl IonState {
    pub fn at_rest(positions: &[Vec3]) -> Result<Self> {
        if positions.is_empty() || positions.len() > 2 {
            return Err(Error::InvalidParameter { name: "ions", reason: "one or two ions are supported" });
        }
        let mut pos = [Vec3::new(f64::NAN, f64::NAN, f64::NAN); 2];
        pos[..positions.len()].copy_from_slice(positions);
        let mut vel = [Vec3::zeros(); 2];
        if positions.len() == 1 {
            vel[1] = Vec3::new(f64::NAN, f64::NAN, f64::NAN);
        }
        Ok(Self { n: positions.len(), pos, vel })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.pos[..self.n]
    }

    pub fn velocities(&self) -> &[Vec3] {
        &self.vel[..self.n]
    }

    fn to_flat(self) -> Vec<f64> {
        let mut y = Vec::with_capacity(6 * self.n);
        for i in 0..self.n {
            y.extend(self.pos[i].iter());
        }
        for i in 0..self.n {
            y.extend(self.vel[i].iter());
        }
        y
    }

    fn from_flat(n: usize, y: &[f64]) -> Self {
        let mut s = Self {
            n,
            pos: [Vec3::new(f64::NAN, f64::NAN, f64::NAN); 2],
            vel: [Vec3::new(f64::NAN, f64::NAN, f64::NAN); 2],
        };
        for i in 0..n {
            s.pos[i] = Vec3::new(y[3 * i], y[3 * i + 1], y[3 * i + 2]);
            s.vel[i] = Vec3::new(y[3 * n + 3 * i], y[3 * n + 3 * i + 1], y[3 * n + 3 * i + 2]);
        }
        s
    }

    /// Kinetic energy of each ion, J.
    pub fn kinetic(&self, mass: f64) -> [f64; 2] {
        let mut ke = [f64::NAN; 2];
        for (i, k) in ke.iter_mut().enumerate().take(self.n) {
            *k = 0.5 * mass * self.vel[i].norm_squared();
        }
        ke
    }
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    /// Absolute position tolerance, m. Velocities use this times the radial
    /// secular frequency.
    pub atol: f64,
    /// Output samples per radial secular period.
    pub samples_per_period: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, samples_per_period: 40.0, max_steps: 50_000_000 }
    }
}

/// Sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<IonState>,
}

impl Trajectory {
    /// Index of the sample nearest `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            0
        } else if i >= self.times.len() {
            self.times.len() - 1
        } else if t - self.times[i - 1] <= self.times[i] - t {
            i - 1
        } else {
            i
        }
    }
}

/// Uniform sample times covering `[0, duration]`.
pub fn sample_times(duration: f64, dt: f64) -> Vec<f64> {
    let n = libm::ceil(duration / dt).max(1.0) as usize;
    (0..=n).map(|k| if k == n { duration } else { duration * k as f64 / n as f64 }).collect()
}

/// Integrate the ions through the waveform.
pub fn integrate(
    model: &ForceModel,
    waveform: &Waveform,
    initial: &IonState,
    tol: &Tolerances,
) -> Result<Trajectory> {
    integrate_until(model, waveform, initial, waveform.duration(), tol)
}

/// Integrate for `t_end` seconds; beyond the ramp the voltages hold at the
/// end point.
pub fn integrate_until(
    model: &ForceModel,
    waveform: &Waveform,
    initial: &IonState,
    t_end: f64,
    tol: &Tolerances,
) -> Result<Trajectory> {
    let n = initial.n;
    let period = 2.0 * PI / model.radial_omega;
    let times = sample_times(t_end, period / tol.samples_per_period);
    let mut atol = vec![tol.atol; 3 * n];
    atol.extend(core::iter::repeat(tol.atol * model.radial_omega).take(3 * n));
    let opts = OdeOptions { rtol: tol.rtol, atol, initial_step: period / 50.0, max_steps: tol.max_steps };
    let inv_m = 1.0 / model.mass;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let v = waveform.at_fraction(waveform.profile.fraction(t));
        let mut pos = [Vec3::zeros(); 2];
        for (i, p) in pos.iter_mut().enumerate().take(n) {
            *p = Vec3::new(y[3 * i], y[3 * i + 1], y[3 * i + 2]);
        }
        let g = model.gradients(&pos[..n], &v);
        dy[..3 * n].copy_from_slice(&y[3 * n..]);
        for i in 0..n {
            for c in 0..3 {
                dy[3 * n + 3 * i + c] = -g[i][c] * inv_m;
            }
        }
    };
    let check = |t: f64, y: &[f64]| {
        for i in 0..n {
            let (yy, zz) = (y[3 * i + 1], y[3 * i + 2]);
            if !(yy > 0.0 && yy < model.escape_height && zz.abs() < model.axial_extent) {
                return Err(Error::IonLost { ion: i, time: t });
            }
        }
        if n == 2 {
            let d = libm::sqrt((0..3).map(|c| (y[c] - y[3 + c]) * (y[c] - y[3 + c])).sum());
            if d < COINCIDENCE_GUARD {
                return Err(Error::IonsCoincide { time: t });
            }
        }
        Ok(())
    };
    let rows = dopri5(rhs, 0.0, &initial.to_flat(), t_end, &times, &opts, check)?;
    let states = rows.iter().map(|r| IonState::from_flat(n, r)).collect();
    Ok(Trajectory { times, states })
}

/// Equilibrium of `n_ions` ions for the given voltages, seeded from the
/// axial quartic.
/// Half separation of a symmetric pair at the first local minimum of the
/// on-axis energy `2 q phi(z) + q^2 / (8 pi eps0 z)`, walking out from the
/// wedge centre. The global minimum can lie beyond the endcaps.
fn pair_seed(layout: &TrapLayout, ion: &IonSpecies, v: &VoltageSet, extent: f64) -> f64 {
    const POINTS: usize = 2000;
    let k = 0.25 * coulomb_scale(ion.charge);
    let z_max = 0.9 * extent;
    let energy = |z: f64| 2.0 * axial_potential(layout, v, z) + k / z;
    let dz = z_max / POINTS as f64;
    let mut prev = energy(dz);
    for i in 2..=POINTS {
        let z = dz * i as f64;
        let e = energy(z);
        if e > prev {
            return z - dz;
        }
        prev = e;
    }
    z_max
}

pub fn equilibrium_for(
    layout: &TrapLayout,
    model: &ForceModel,
    ion: &IonSpecies,
    v: &VoltageSet,
    n_ions: usize,
) -> Result<Vec<Vec3>> {
    let (x0, h) = model.node;
    let guess = match n_ions {
        1 => vec![Vec3::new(x0, h, 0.0)],
        2 => {
            let z = pair_seed(layout, ion, v, model.axial_extent);
            vec![Vec3::new(x0, h, -z), Vec3::new(x0, h, z)]
        }
        _ => return Err(Error::InvalidParameter { name: "ions", reason: "one or two ions are supported" }),
    };
    model.equilibrium(v, &guess)
}
