//! Unit-voltage potentials of planar electrodes under the gapless-plane
//! approximation, and their composition into the effective potential felt by
//! an ion.
//!
//! Every electrode lies in the plane `y = 0`; the rest of the plane is
//! grounded. A strip is unbounded along `z`, a patch is a finite rectangle.
//! The basis functions are the classical solid-angle solutions of Laplace's
//! equation for a single electrode held at 1 V:
//!
//! ```text
//! strip:  phi = (1/pi)   [atan((x_hi - x)/y) - atan((x_lo - x)/y)]
//! patch:  phi = (1/2pi) sum_{i,j} s_ij atan[(x_i - x)(z_j - z) / (y R_ij)]
//! ```
//!
//! with `R_ij` the distance to corner `(x_i, 0, z_j)` and `s_ij = +1` on the
//! (hi, hi) and (lo, lo) corners, `-1` otherwise. Gradients and Hessians are
//! exact analytic derivatives.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::layout::{TrapLayout, VoltageSet};
use crate::math::{atan, sqrt};
use crate::units::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE, YB171_MASS_AMU};
use crate::{Error, Mat3, Result, Vec3};

/// Electrode unbounded along `z`, occupying `x_lo..x_hi` in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripElectrode {
    pub x_lo: f64,
    pub x_hi: f64,
}

impl StripElectrode {
    pub fn new(x_lo: f64, x_hi: f64) -> Result<Self> {
        if !(x_lo < x_hi) {
            return Err(Error::InvalidParameter { name: "strip", reason: "x_lo must be below x_hi" });
        }
        Ok(Self { x_lo, x_hi })
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

/// Finite rectangular electrode `x_lo..x_hi` by `z_lo..z_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectPatch {
    pub x_lo: f64,
    pub x_hi: f64,
    pub z_lo: f64,
    pub z_hi: f64,
}

impl RectPatch {
    pub fn new(x_lo: f64, x_hi: f64, z_lo: f64, z_hi: f64) -> Result<Self> {
        if !(x_lo < x_hi) || !(z_lo < z_hi) {
            return Err(Error::InvalidParameter { name: "patch", reason: "lower edges must be below upper edges" });
        }
        Ok(Self { x_lo, x_hi, z_lo, z_hi })
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_lo + self.x_hi), 0.5 * (self.z_lo + self.z_hi))
    }
}

/// Radio-frequency drive: peak voltage and angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfDrive {
    pub v_rf: f64,
    pub omega_rf: f64,
}

impl RfDrive {
    pub fn new(v_rf: f64, omega_rf: f64) -> Result<Self> {
        if !(v_rf > 0.0) {
            return Err(Error::InvalidParameter { name: "v_rf", reason: "must be positive" });
        }
        if !(omega_rf > 0.0) {
            return Err(Error::InvalidParameter { name: "omega_rf", reason: "must be positive" });
        }
        Ok(Self { v_rf, omega_rf })
    }

    /// Prefactor `e^2 V^2 / (4 m Omega^2)` converting `|grad Theta_rf|^2` into
    /// pseudopotential energy.
    pub fn pseudo_prefactor(&self, ion: &IonSpecies) -> f64 {
        let q = ion.charge * self.v_rf;
        q * q / (4.0 * ion.mass * self.omega_rf * self.omega_rf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    pub mass: f64,
    pub charge: f64,
}

impl IonSpecies {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter { name: "mass", reason: "must be positive" });
        }
        if !(charge > 0.0) {
            return Err(Error::InvalidParameter { name: "charge", reason: "must be positive" });
        }
        Ok(Self { mass, charge })
    }

    /// Singly charged ytterbium-171.
    pub fn ytterbium_171() -> Self {
        Self { mass: YB171_MASS_AMU * ATOMIC_MASS_UNIT, charge: ELEMENTARY_CHARGE }
    }

    /// Mass in atomic mass units and charge in elementary charges.
    pub fn from_amu(mass_amu: f64, charge_e: f64) -> Result<Self> {
        Self::new(mass_amu * ATOMIC_MASS_UNIT, charge_e * ELEMENTARY_CHARGE)
    }
}

impl Default for IonSpecies {
    fn default() -> Self {
        Self::ytterbium_171()
    }
}

/// A scalar field with its gradient and Hessian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: Mat3,
}

impl FieldSample {
    pub fn zero() -> Self {
        Self { value: 0.0, gradient: Vec3::zeros(), hessian: Mat3::zeros() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { value: self.value * factor, gradient: self.gradient * factor, hessian: self.hessian * factor }
    }

    pub fn add_scaled(&mut self, other: &FieldSample, factor: f64) {
        self.value += factor * other.value;
        self.gradient += other.gradient * factor;
        self.hessian += other.hessian * factor;
    }

    /// Trace of the Hessian, zero for a solution of Laplace's equation.
    pub fn laplacian(&self) -> f64 {
        self.hessian.trace()
    }
}

impl core::ops::Add for FieldSample {
    type Output = FieldSample;

    fn add(mut self, rhs: FieldSample) -> FieldSample {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

fn check_height(y: f64) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(Error::BelowPlane { y })
    }
}

/// Unit-voltage potential of an infinite strip at `(x, y)`.
///
/// The result is independent of `z`; the `z` rows of the gradient and Hessian
/// are zero.
pub fn strip_basis(strip: &StripElectrode, x: f64, y: f64) -> Result<FieldSample> {
    check_height(y)?;
    let mut out = FieldSample::zero();
    for (edge, sign) in [(strip.x_hi, 1.0), (strip.x_lo, -1.0)] {
        let u = edge - x;
        let r2 = u * u + y * y;
        let r4 = r2 * r2;
        let s = sign / PI;
        out.value += s * atan(u / y);
        out.gradient[0] += s * (-y / r2);
        out.gradient[1] += s * (-u / r2);
        let xx = -2.0 * u * y / r4;
        let xy = (y * y - u * u) / r4;
        out.hessian[(0, 0)] += s * xx;
        out.hessian[(1, 1)] -= s * xx;
        out.hessian[(0, 1)] += s * xy;
        out.hessian[(1, 0)] += s * xy;
    }
    Ok(out)
}

/// Unit-voltage potential of a rectangular patch at `point`.
pub fn patch_basis(patch: &RectPatch, point: &Vec3) -> Result<FieldSample> {
    check_height(point[1])?;
    let (x, y, z) = (point[0], point[1], point[2]);
    let mut out = FieldSample::zero();
    for (xi, sx) in [(patch.x_hi, 1.0), (patch.x_lo, -1.0)] {
        for (zj, sz) in [(patch.z_hi, 1.0), (patch.z_lo, -1.0)] {
            let s = sx * sz / (2.0 * PI);
            let u = xi - x;
            let v = zj - z;
            let a = u * u + y * y;
            let b = v * v + y * y;
            let r2 = u * u + v * v + y * y;
            let r = sqrt(r2);
            let r3 = r2 * r;

            // derivatives with respect to (u, v, y)
            let fu = v * y / (a * r);
            let fv = u * y / (b * r);
            let fy = -u * v * (a + b) / (a * b * r);
            let fuu = -u * v * y * (2.0 * r2 + a) / (a * a * r3);
            let fvv = -u * v * y * (2.0 * r2 + b) / (b * b * r3);
            let fuv = y / r3;
            let fuy = v * ((u * u - y * y) * r2 - a * y * y) / (a * a * r3);
            let fvy = u * ((v * v - y * y) * r2 - b * y * y) / (b * b * r3);
            let fyy = -(4.0 * u * v * y - u * v * (a + b) * (2.0 * y / a + 2.0 * y / b + y / r2)) / (a * b * r);

            out.value += s * atan(u * v / (y * r));
            // x = x_i - u and z = z_j - v flip the sign of odd u, v derivatives
            out.gradient += Vec3::new(-fu, fy, -fv) * s;
            let h = Mat3::new(fuu, -fuy, fuv, -fuy, fyy, -fvy, fuv, -fvy, fvv);
            out.hessian += h * s;
        }
    }
    Ok(out)
}

/// Value and gradient of [`patch_basis`] without the Hessian, for force
/// evaluation inside the integrator.
pub(crate) fn patch_value_gradient(patch: &RectPatch, point: &Vec3) -> (f64, Vec3) {
    let (x, y, z) = (point[0], point[1], point[2]);
    let mut value = 0.0;
    let mut grad = Vec3::zeros();
    for (xi, sx) in [(patch.x_hi, 1.0), (patch.x_lo, -1.0)] {
        for (zj, sz) in [(patch.z_hi, 1.0), (patch.z_lo, -1.0)] {
            let s = sx * sz / (2.0 * PI);
            let u = xi - x;
            let v = zj - z;
            let a = u * u + y * y;
            let b = v * v + y * y;
            let r = sqrt(u * u + v * v + y * y);
            value += s * atan(u * v / (y * r));
            grad[0] -= s * v * y / (a * r);
            grad[1] -= s * u * v * (a + b) / (a * b * r);
            grad[2] -= s * u * y / (b * r);
        }
    }
    (value, grad)
}

/// Complex field derivatives of a set of unit-voltage strips.
///
/// With `w = x + i y` the strip potential is `Im G(w)` where
/// `G = (1/pi) sum [log(w - x_hi) - log(w - x_lo)]`. The returned triple is
/// `(G', G'', G''')`; `grad Theta = (Im G', Re G')`.
pub(crate) fn strip_field_derivatives(strips: &[StripElectrode], x: f64, y: f64) -> [Complex64; 3] {
    let w = Complex64::new(x, y);
    let mut d = [Complex64::new(0.0, 0.0); 3];
    for s in strips {
        let ph = (w - s.x_hi).inv();
        let pl = (w - s.x_lo).inv();
        d[0] += ph - pl;
        d[1] += pl * pl - ph * ph;
        d[2] += (ph * ph * ph - pl * pl * pl) * 2.0;
    }
    for v in d.iter_mut() {
        *v /= PI;
    }
    d
}

/// `|grad Theta_rf|^2` and its derivatives for unit rf voltage.
pub(crate) fn rf_field_squared(strips: &[StripElectrode], x: f64, y: f64) -> FieldSample {
    let [f, f1, f2] = strip_field_derivatives(strips, x, y);
    let cf = f.conj();
    let g = cf * f1;
    let c = cf * f2;
    let f1sq = f1.norm_sqr();
    let mut out = FieldSample::zero();
    out.value = f.norm_sqr();
    out.gradient[0] = 2.0 * g.re;
    out.gradient[1] = -2.0 * g.im;
    out.hessian[(0, 0)] = 2.0 * (f1sq + c.re);
    out.hessian[(1, 1)] = 2.0 * (f1sq - c.re);
    out.hessian[(0, 1)] = -2.0 * c.im;
    out.hessian[(1, 0)] = -2.0 * c.im;
    out
}

/// Time-averaged rf pseudopotential energy `e^2 V^2 / (4 m Omega^2) |grad Theta_rf|^2`
/// in joules, where `Theta_rf` is the superposition of all rf strips at 1 V.
pub fn pseudopotential(
    rf_strips: &[StripElectrode],
    drive: &RfDrive,
    ion: &IonSpecies,
    point: &Vec3,
) -> Result<FieldSample> {
    if rf_strips.is_empty() {
        return Err(Error::EmptyRfStrips);
    }
    check_height(point[1])?;
    Ok(rf_field_squared(rf_strips, point[0], point[1]).scaled(drive.pseudo_prefactor(ion)))
}

/// Electric potential in volts of patches held at the given voltages.
pub fn static_potential(patches: &[(RectPatch, f64)], point: &Vec3) -> Result<FieldSample> {
    check_height(point[1])?;
    let mut out = FieldSample::zero();
    for (patch, volts) in patches {
        if *volts != 0.0 {
            out.add_scaled(&patch_basis(patch, point)?, *volts);
        }
    }
    Ok(out)
}

/// Total effective potential energy in joules: pseudopotential plus charge
/// times the static potential of the segmented electrodes.
pub fn total_effective_potential(
    layout: &TrapLayout,
    drive: &RfDrive,
    ion: &IonSpecies,
    voltages: &VoltageSet,
    point: &Vec3,
) -> Result<FieldSample> {
    let pseudo = pseudopotential(&layout.rf_strips(), drive, ion, point)?;
    let stat = static_potential(&layout.static_patches(voltages), point)?;
    Ok(pseudo + stat.scaled(ion.charge))
}
