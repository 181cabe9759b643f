//! Physical constants (CODATA 2018) and unit helpers.

use core::f64::consts::PI;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Mass of 171Yb in atomic mass units.
pub const YB171_MASS_AMU: f64 = 170.936_325_8;

/// Extent used for electrodes that are unbounded in one direction, m.
pub const FAR: f64 = 1.0e6;

pub const MICROMETRE: f64 = 1.0e-6;

/// Convert a cyclic frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn angular(freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz
}

/// Convert an angular frequency in rad/s to cyclic frequency in Hz.
#[inline]
pub fn cyclic(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

#[inline]
pub fn joules_to_ev(energy: f64) -> f64 {
    energy / ELEMENTARY_CHARGE
}

/// `e / (2 pi eps0)`, the Coulomb scale of the two-ion separation law, V m.
#[inline]
pub fn coulomb_scale(charge: f64) -> f64 {
    charge / (2.0 * PI * VACUUM_PERMITTIVITY)
}
