//! Where five-wire surface traps hold the ion and how deep they are.
//! Radial secular modes at the node live here too.
//!
//! The pseudopotential of infinite rf strips is `k |G'(w)|^2` with `G` the
//! complex potential of [`crate::electrostatics`]. Stationary points of
//! `|G'|^2` in the upper half plane are either zeros of `G'` (the rf node) or
//! zeros of `G''` (saddles, i.e. the escape point), so both searches are
//! one-dimensional complex Newton iterations.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::electrostatics::{patch_basis, rf_field_squared, strip_field_derivatives, IonSpecies, RfDrive, StripElectrode};
use crate::layout::{FiveWireParams, RatioMode, TrapLayout, VoltageSet};
use crate::math::{atan2, sqrt};
use crate::optimize::{maximize, ScanSettings};
use crate::units::joules_to_ev;
use crate::{Error, Result, Vec3};

/// Closed-form rf node `(x0, h)` of a gapless five-wire trap.
pub fn rf_node_analytic(p: &FiveWireParams) -> (f64, f64) {
    p.node()
}

/// Depth geometric factor of a five-wire trap.
///
/// Symmetric in `b` and `c` and invariant under uniform rescaling.
pub fn kappa_exact(a: f64, b: f64, c: f64) -> f64 {
    let s = a + b + c;
    let p = 2.0 * a + b + c;
    let k = 2.0 * sqrt(a * b * c * s) / (p * (p + 2.0 * sqrt(a * s)));
    k * k
}

/// The geometric factor as a function of `zeta = b / a` for equal (`c = b`)
/// or half (`c = b / 2`) rf widths.
pub fn kappa_parameterised(zeta: f64, mode: RatioMode) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidParameter { name: "zeta", reason: "must be positive" });
    }
    let z = zeta;
    match mode {
        RatioMode::Equal => {
            let r = 1.0 + z + sqrt(1.0 + 2.0 * z);
            Ok(z * z * (1.0 + 2.0 * z) / (4.0 * (1.0 + z) * (1.0 + z) * r * r))
        }
        RatioMode::Half => {
            let d = 2.0 + 1.5 * z;
            let r = 4.0 + 3.0 * z + 4.0 * sqrt(1.0 + 1.5 * z);
            Ok(4.0 * z * z * (2.0 + 3.0 * z) / (d * d * r * r))
        }
        RatioMode::Custom => {
            Err(Error::InvalidParameter { name: "ratio_mode", reason: "only equal or half widths are parameterised" })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaOptimum {
    pub zeta: f64,
    pub kappa: f64,
    /// Ion height over rf separation at the optimum.
    pub h_over_a: f64,
}

/// Bracket of `zeta` searched by [`optimize_zeta`].
pub const ZETA_RANGE: (f64, f64) = (0.1, 50.0);

/// Maximise the geometric factor over `zeta` for the given ratio mode.
pub fn optimize_zeta(mode: RatioMode) -> Result<ZetaOptimum> {
    kappa_parameterised(1.0, mode)?;
    let m = maximize(
        |z| kappa_parameterised(z, mode).unwrap_or(f64::NEG_INFINITY),
        ZETA_RANGE.0,
        ZETA_RANGE.1,
        &ScanSettings::default(),
    )?;
    let p = match mode {
        RatioMode::Equal => FiveWireParams::equal(1.0, m.x)?,
        _ => FiveWireParams::half(1.0, m.x)?,
    };
    Ok(ZetaOptimum { zeta: m.x, kappa: m.value, h_over_a: p.node().1 })
}

/// Width of the ground strip that re-centres the static electrodes.
pub fn compensation_width(p: &FiveWireParams) -> f64 {
    p.compensation_width()
}

/// Trap depth in eV from the geometric factor:
/// `e^2 V^2 kappa / (pi^2 m Omega^2 h^2)`.
pub fn trap_depth_analytic(h: f64, kappa: f64, drive: &RfDrive, ion: &IonSpecies) -> Result<f64> {
    if !(h > 0.0) || !(kappa > 0.0) {
        return Err(Error::InvalidParameter { name: "h/kappa", reason: "must be positive" });
    }
    let q = ion.charge * drive.v_rf;
    let energy = q * q * kappa / (PI * PI * ion.mass * drive.omega_rf * drive.omega_rf * h * h);
    Ok(joules_to_ev(energy))
}

/// Damped complex Newton iteration for a root of `f` in the upper half
/// plane. `f` returns the function and its derivative.
fn complex_newton<F>(f: F, seed: Complex64, scale: f64) -> Option<Complex64>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let mut w = seed;
    let (mut val, mut der) = f(w);
    for _ in 0..200 {
        if der.norm_sqr() == 0.0 || !val.re.is_finite() {
            return None;
        }
        let step = val / der;
        let mut lambda = 1.0;
        loop {
            let trial = w - step * lambda;
            if trial.im > 0.0 {
                let (tv, td) = f(trial);
                if tv.norm_sqr() < val.norm_sqr() || lambda < 1e-3 {
                    w = trial;
                    val = tv;
                    der = td;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return None;
            }
        }
        if (step * lambda).norm_sqr() < (1e-15 * scale) * (1e-15 * scale) {
            return Some(w);
        }
    }
    None
}

/// Locate the rf node of a set of strips by damped Newton from `seed`.
pub(crate) fn find_node(strips: &[StripElectrode], seed: (f64, f64), scale: f64) -> Result<(f64, f64)> {
    if strips.is_empty() {
        return Err(Error::EmptyRfStrips);
    }
    let w = complex_newton(
        |w| {
            let d = strip_field_derivatives(strips, w.re, w.im);
            (d[0], d[1])
        },
        Complex64::new(seed.0, seed.1),
        scale,
    )
    .ok_or(Error::NoTrappingPoint { reason: "Newton search for the field zero diverged" })?;
    Ok((w.re, w.im))
}

/// Saddle of the pseudopotential above the node, seeded at twice the node
/// height on the vertical through the node.
pub(crate) fn find_escape(strips: &[StripElectrode], node: (f64, f64), scale: f64) -> Result<(f64, f64)> {
    let w = complex_newton(
        |w| {
            let d = strip_field_derivatives(strips, w.re, w.im);
            (d[1], d[2])
        },
        Complex64::new(node.0, 2.0 * node.1),
        scale,
    )
    .ok_or(Error::NoEscapePoint)?;
    if w.im <= node.1 * (1.0 + 1e-9) {
        return Err(Error::NoEscapePoint);
    }
    Ok((w.re, w.im))
}

/// rf node of a layout with its depth and radial frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeInfo {
    pub x0: f64,
    pub h: f64,
    /// Pseudopotential trap depth, eV.
    pub depth: f64,
    pub escape_point: Vec3,
    /// Rotation of the stiffer radial axis from `x`, rad. `None` when the
    /// radial modes are degenerate.
    pub principal_axis_angle: Option<f64>,
    pub omega_x: f64,
    pub omega_y: f64,
}

/// Find the rf node and escape point numerically and characterise the trap
/// with rf only (all static electrodes grounded).
pub fn rf_node_numeric(layout: &TrapLayout, drive: &RfDrive, ion: &IonSpecies) -> Result<NodeInfo> {
    let strips = layout.rf_strips();
    let seed = layout.node();
    let scale = layout.five_wire.a;
    let node = find_node(&strips, seed, scale)?;
    let escape = find_escape(&strips, node, scale)?;
    let k = drive.pseudo_prefactor(ion);
    let at_node = rf_field_squared(&strips, node.0, node.1);
    let at_escape = rf_field_squared(&strips, escape.0, escape.1);
    let depth = joules_to_ev(k * (at_escape.value - at_node.value));
    let modes = radial_from_hessian(
        at_node.hessian[(0, 0)] * k,
        at_node.hessian[(0, 1)] * k,
        at_node.hessian[(1, 1)] * k,
        ion,
    )?;
    Ok(NodeInfo {
        x0: node.0,
        h: node.1,
        depth,
        escape_point: Vec3::new(escape.0, escape.1, 0.0),
        principal_axis_angle: modes.angle,
        omega_x: modes.omega_x,
        omega_y: modes.omega_y,
    })
}

/// Pseudopotential depth in eV: energy of the escape saddle above the node.
pub fn trap_depth_numeric(layout: &TrapLayout, drive: &RfDrive, ion: &IonSpecies) -> Result<f64> {
    Ok(rf_node_numeric(layout, drive, ion)?.depth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Modes {
    omega_x: f64,
    omega_y: f64,
    angle: Option<f64>,
}

fn radial_from_hessian(hxx: f64, hxy: f64, hyy: f64, ion: &IonSpecies) -> Result<Modes> {
    let mean = 0.5 * (hxx + hyy);
    let diff = 0.5 * (hxx - hyy);
    let r = sqrt(diff * diff + hxy * hxy);
    let (hi, lo) = (mean + r, mean - r);
    if lo <= 0.0 {
        return Err(Error::NoTrappingPoint { reason: "radial curvature is not positive" });
    }
    let degenerate = r <= 1e-9 * mean.abs();
    if degenerate {
        let w = sqrt(mean / ion.mass);
        return Ok(Modes { omega_x: w, omega_y: w, angle: None });
    }
    // direction of the stiffer eigenvector, folded into [0, pi)
    let mut angle = 0.5 * atan2(2.0 * hxy, hxx - hyy);
    if angle < 0.0 {
        angle += PI;
    }
    let (w_hi, w_lo) = (sqrt(hi / ion.mass), sqrt(lo / ion.mass));
    // omega_x belongs to the mode closer to the x axis
    let near_x = !(0.25 * PI..=0.75 * PI).contains(&angle);
    let (omega_x, omega_y) = if near_x { (w_hi, w_lo) } else { (w_lo, w_hi) };
    Ok(Modes { omega_x, omega_y, angle: Some(angle) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialModes {
    pub omega_x: f64,
    pub omega_y: f64,
    /// Rotation of the stiffer principal axis from the `x` axis, in `[0, pi)`.
    pub angle: f64,
}

/// Radial secular frequencies and principal-axis rotation at the rf node.
///
/// The pseudopotential of infinite strips is isotropic in the radial plane,
/// so the axes are set by the static potential of the segmented electrodes.
pub fn radial_modes(layout: &TrapLayout, drive: &RfDrive, ion: &IonSpecies, voltages: &VoltageSet) -> Result<RadialModes> {
    let strips = layout.rf_strips();
    let node = find_node(&strips, layout.node(), layout.five_wire.a)?;
    let k = drive.pseudo_prefactor(ion);
    let pseudo = rf_field_squared(&strips, node.0, node.1);
    let point = Vec3::new(node.0, node.1, 0.0);
    let mut h = pseudo.hessian * k;
    for (patch, volts) in layout.static_patches(voltages) {
        h += patch_basis(&patch, &point)?.hessian * (volts * ion.charge);
    }
    let modes = radial_from_hessian(h[(0, 0)], h[(0, 1)], h[(1, 1)], ion)?;
    match modes.angle {
        Some(angle) => Ok(RadialModes { omega_x: modes.omega_x, omega_y: modes.omega_y, angle }),
        None => Err(Error::DegenerateModes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{Design, SegmentWidths};
    use crate::units::{angular, cyclic};
    use approx::assert_relative_eq;

    const UM: f64 = 1e-6;

    fn example_drive() -> RfDrive {
        RfDrive::new(450.0, angular(55e6)).unwrap()
    }

    #[test]
    fn analytic_node_of_example() {
        let p = FiveWireParams::custom(60.0 * UM, 300.0 * UM, 150.0 * UM).unwrap();
        let (x0, h) = rf_node_analytic(&p);
        assert_relative_eq!(x0, 20.0 * UM, max_relative = 1e-12);
        assert_relative_eq!(h, 82.462_112_512_353_2 * UM, max_relative = 1e-9);
        let eq = FiveWireParams::equal(60.0 * UM, 2.0).unwrap();
        assert_relative_eq!(rf_node_analytic(&eq).0, 30.0 * UM, max_relative = 1e-14);
    }

    #[test]
    fn kappa_modes_agree_with_exact() {
        for z in [0.3, 1.0, 3.68, 4.9, 17.0] {
            assert_relative_eq!(
                kappa_parameterised(z, RatioMode::Equal).unwrap(),
                kappa_exact(1.0, z, z),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                kappa_parameterised(z, RatioMode::Half).unwrap(),
                kappa_exact(2.0, 2.0 * z, z),
                max_relative = 1e-12
            );
        }
        assert!(kappa_parameterised(1.0, RatioMode::Custom).is_err());
        assert!(kappa_parameterised(0.0, RatioMode::Equal).is_err());
    }

    #[test]
    fn kappa_vanishes_at_extremes() {
        for mode in [RatioMode::Equal, RatioMode::Half] {
            assert!(kappa_parameterised(1e-6, mode).unwrap() < 1e-10);
            assert!(kappa_parameterised(1e9, mode).unwrap() < 1e-3);
        }
    }

    #[test]
    fn numeric_node_of_symmetric_trap_is_centred() {
        let five = FiveWireParams::equal(60.0 * UM, 3.68).unwrap();
        let layout = TrapLayout::new(five, Design::OuterSegmented, SegmentWidths::uniform(220.0 * UM), 9).unwrap();
        let info = rf_node_numeric(&layout, &example_drive(), &IonSpecies::ytterbium_171()).unwrap();
        assert_relative_eq!(info.x0, 30.0 * UM, max_relative = 1e-9);
        assert!(info.principal_axis_angle.is_none());
    }

    #[test]
    fn numeric_node_matches_closed_form() {
        let layout = TrapLayout::example(Design::OuterSegmented);
        let info = rf_node_numeric(&layout, &example_drive(), &IonSpecies::ytterbium_171()).unwrap();
        let (x0, h) = layout.node();
        assert_relative_eq!(info.h, h, max_relative = 5e-3);
        assert_relative_eq!(info.x0, x0, max_relative = 5e-3);
    }

    #[test]
    fn node_moves_continuously_with_rf_width() {
        let base = FiveWireParams::custom(60.0 * UM, 300.0 * UM, 150.0 * UM).unwrap();
        let bumped = FiveWireParams::custom(60.0 * UM, 303.0 * UM, 150.0 * UM).unwrap();
        let n0 = find_node(&[StripElectrode { x_lo: -base.c, x_hi: 0.0 }, StripElectrode { x_lo: base.a, x_hi: base.a + base.b }], base.node(), base.a).unwrap();
        let n1 = find_node(
            &[StripElectrode { x_lo: -bumped.c, x_hi: 0.0 }, StripElectrode { x_lo: bumped.a, x_hi: bumped.a + bumped.b }],
            base.node(),
            base.a,
        )
        .unwrap();
        let shift = libm::hypot(n1.0 - n0.0, n1.1 - n0.1);
        assert!(shift > 0.0 && shift < 0.02 * n0.1);
    }

    #[test]
    fn depth_scales_with_voltage_squared() {
        let layout = TrapLayout::example(Design::CentreSegmented);
        let ion = IonSpecies::ytterbium_171();
        let d1 = trap_depth_numeric(&layout, &example_drive(), &ion).unwrap();
        let d2 = trap_depth_numeric(&layout, &RfDrive::new(900.0, angular(55e6)).unwrap(), &ion).unwrap();
        assert_relative_eq!(d2, 4.0 * d1, max_relative = 1e-12);
    }

    #[test]
    fn numeric_depth_matches_geometric_factor_for_equal_widths() {
        let five = FiveWireParams::equal(60.0 * UM, 3.68).unwrap();
        let layout = TrapLayout::new(five, Design::OuterSegmented, SegmentWidths::uniform(220.0 * UM), 9).unwrap();
        let ion = IonSpecies::ytterbium_171();
        let numeric = trap_depth_numeric(&layout, &example_drive(), &ion).unwrap();
        let h = five.node().1;
        let analytic = trap_depth_analytic(h, kappa_exact(five.a, five.b, five.c), &example_drive(), &ion).unwrap();
        assert_relative_eq!(numeric, analytic, max_relative = 0.02);
    }

    #[test]
    fn example_depth_and_radial_frequency() {
        let layout = TrapLayout::example(Design::OuterSegmented);
        let ion = IonSpecies::ytterbium_171();
        let info = rf_node_numeric(&layout, &example_drive(), &ion).unwrap();
        // the saddle of the unequal-width trap sits higher than the
        // geometric factor predicts: 0.321 eV against 0.286 eV
        assert!(info.depth > 0.30 && info.depth < 0.34, "{}", info.depth);
        let f = cyclic(info.omega_x);
        assert!(f > 0.8 * 4.2e6 && f < 1.2 * 4.2e6, "{f}");
        assert_relative_eq!(info.omega_x, info.omega_y, max_relative = 1e-9);
    }

    #[test]
    fn depth_falls_as_inverse_height_squared() {
        let ion = IonSpecies::ytterbium_171();
        let zeta = optimize_zeta(RatioMode::Equal).unwrap();
        let depth_at = |h: f64| {
            let a = h / zeta.h_over_a;
            let five = FiveWireParams::equal(a, zeta.zeta).unwrap();
            let l = TrapLayout::new(five, Design::OuterSegmented, SegmentWidths::uniform(3.0 * a), 9).unwrap();
            trap_depth_numeric(&l, &example_drive(), &ion).unwrap()
        };
        assert_relative_eq!(depth_at(100.0 * UM) / depth_at(200.0 * UM), 4.0, max_relative = 0.05);
    }

    #[test]
    fn symmetric_trap_axes_are_aligned() {
        let five = FiveWireParams::equal(60.0 * UM, 3.68).unwrap();
        let layout = TrapLayout::new(five, Design::CentreSegmented, SegmentWidths::uniform(60.0 * UM), 9).unwrap();
        let m = radial_modes(&layout, &example_drive(), &IonSpecies::ytterbium_171(), &VoltageSet::new(8.0, 0.0, 0.0))
            .unwrap();
        let a = m.angle;
        assert!(a.abs() < 1e-6 || (a - 0.5 * PI).abs() < 1e-6, "{a}");
    }

    #[test]
    fn unequal_widths_rotate_the_axes() {
        let layout = TrapLayout::example(Design::CentreSegmented);
        let m = radial_modes(&layout, &example_drive(), &IonSpecies::ytterbium_171(), &VoltageSet::new(8.0, 0.0, 0.0))
            .unwrap();
        let folded = if m.angle > 0.5 * PI { PI - m.angle } else { m.angle };
        assert!(folded > 1e-3 && folded < 0.5 * PI - 1e-3, "{}", m.angle);
    }

    #[test]
    fn rf_only_modes_are_degenerate() {
        let layout = TrapLayout::example(Design::CentreSegmented);
        let r = radial_modes(&layout, &example_drive(), &IonSpecies::ytterbium_171(), &VoltageSet::default());
        assert_eq!(r, Err(Error::DegenerateModes));
    }
}
