//! Quartic expansion of the axial potential and axial secular frequencies.
//!
//! Along the trap axis (at the rf node's transverse position) the static
//! potential near the wedge centre is fitted as
//! `phi(z) = phi0 + alpha (z - zc)^2 + beta (z - zc)^4` in volts, so the
//! potential energy of an ion of charge `q` is `q phi`. With this convention a
//! single harmonic well has `omega = sqrt(2 q alpha / m)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::electrostatics::{patch_value_gradient, IonSpecies};
use crate::layout::{Design, FiveWireParams, SegmentWidths, TrapLayout, VoltageSet};
use crate::math::{cos, powf, sqrt};
use crate::optimize::{maximize, GridSpacing, ScanSettings};
use crate::units::coulomb_scale;
use crate::{Error, Result, Vec3};

/// Samples per axial fit.
pub const FIT_SAMPLES: usize = 65;
/// Minimum number of samples accepted by [`fit_quartic`].
pub const MIN_SAMPLES: usize = 9;
/// Largest acceptable condition number of the fit's normal equations.
pub const MAX_CONDITION: f64 = 1e12;

/// Chebyshev abscissae of the first kind over `[center - window, center + window]`.
pub fn chebyshev_points(center: f64, window: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| center + window * cos(PI * (k as f64 + 0.5) / n as f64)).collect()
}

/// Static potential along `z` at the rf node's `(x0, h)`.
pub fn axial_potential(layout: &TrapLayout, voltages: &VoltageSet, z: f64) -> f64 {
    let (x0, h) = layout.node();
    let point = Vec3::new(x0, h, z);
    layout.static_patches(voltages).iter().map(|(p, v)| v * patch_value_gradient(p, &point).0).sum()
}

/// Sample the axial potential at [`FIT_SAMPLES`] Chebyshev points within
/// `window` of the wedge centre `z = 0`, at the rf node.
pub fn sample_axial(layout: &TrapLayout, voltages: &VoltageSet, window: f64) -> Result<Vec<(f64, f64)>> {
    sample_axial_at(layout, voltages, layout.node(), 0.0, window)
}

/// Sample the axial potential along the line through `(x, y)` within
/// `window` of `center`.
pub fn sample_axial_at(
    layout: &TrapLayout,
    voltages: &VoltageSet,
    (x, y): (f64, f64),
    center: f64,
    window: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter { name: "window", reason: "must be positive" });
    }
    if !(y > 0.0) {
        return Err(Error::BelowPlane { y });
    }
    let patches = layout.static_patches(voltages);
    Ok(chebyshev_points(center, window, FIT_SAMPLES)
        .into_iter()
        .map(|z| {
            let point = Vec3::new(x, y, z);
            (z, patches.iter().map(|(p, v)| v * patch_value_gradient(p, &point).0).sum())
        })
        .collect())
}

/// Even quartic fitted to the axial potential.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticFit {
    /// Expansion centre, m.
    pub center: f64,
    /// Constant term, V.
    pub phi0: f64,
    /// Quadratic coefficient, V/m^2.
    pub alpha: f64,
    /// Quartic coefficient, V/m^4.
    pub beta: f64,
    pub residual_rms: f64,
    /// Peak-to-peak potential over the samples, V.
    pub span: f64,
    /// 1 for a single well, 2 for a double well, 0 if the quartic has no
    /// minimum.
    pub well_count: usize,
    pub well_positions: Vec<f64>,
    /// Condition number of the scaled normal equations.
    pub condition: f64,
    /// Half-width of the sampled interval, m.
    pub window: f64,
}

impl QuarticFit {
    /// Whether the residual is within [`RESIDUAL_LIMIT`] of the span.
    pub fn is_faithful(&self) -> bool {
        self.residual_rms < RESIDUAL_LIMIT * self.span
    }

    pub fn potential(&self, z: f64) -> f64 {
        let d = (z - self.center) * (z - self.center);
        self.phi0 + self.alpha * d + self.beta * d * d
    }
}

/// Least-squares fit of `phi0 + alpha u^2 + beta u^4` about the midpoint of
/// the sampled interval.
///
/// The regression runs in the scaled variable `u = (z - zc) / window` so the
/// normal equations stay well conditioned whatever the length unit.
pub fn fit_quartic(samples: &[(f64, f64)]) -> Result<QuarticFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { required: MIN_SAMPLES, got: samples.len() });
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(z, v) in samples {
        if !z.is_finite() || !v.is_finite() {
            return Err(Error::InvalidParameter { name: "samples", reason: "must be finite" });
        }
        lo = lo.min(z);
        hi = hi.max(z);
        vlo = vlo.min(v);
        vhi = vhi.max(v);
    }
    let center = 0.5 * (lo + hi);
    let window = 0.5 * (hi - lo);
    if !(window > 0.0) {
        return Err(Error::InvalidParameter { name: "samples", reason: "need distinct abscissae" });
    }
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &(z, v) in samples {
        let u2 = ((z - center) / window) * ((z - center) / window);
        let row = Vector3::new(1.0, u2, u2 * u2);
        ata += row * row.transpose();
        atb += row * v;
    }
    let eig = SymmetricEigen::new(ata).eigenvalues;
    let (emin, emax) = (eig.min(), eig.max());
    let condition = if emin > 0.0 { emax / emin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let coef = ata.cholesky().ok_or(Error::IllConditioned { condition })?.solve(&atb);
    let w2 = window * window;
    let (phi0, alpha, beta) = (coef[0], coef[1] / w2, coef[2] / (w2 * w2));
    let mut fit = QuarticFit {
        center,
        phi0,
        alpha,
        beta,
        residual_rms: 0.0,
        span: vhi - vlo,
        well_count: 0,
        well_positions: Vec::new(),
        condition,
        window,
    };
    let sq: f64 = samples.iter().map(|&(z, v)| (fit.potential(z) - v) * (fit.potential(z) - v)).sum();
    fit.residual_rms = sqrt(sq / samples.len() as f64);
    if alpha < 0.0 && beta > 0.0 {
        let d = sqrt(-alpha / (2.0 * beta));
        fit.well_count = 2;
        fit.well_positions = alloc::vec![center - d, center + d];
    } else if alpha > 0.0 || (alpha == 0.0 && beta > 0.0) {
        fit.well_count = 1;
        fit.well_positions = alloc::vec![center];
    }
    Ok(fit)
}

/// Fit with the adaptive window: first at half the wedge width, then at
/// `max(2 s, W / 2)` with `s` the two-ion separation implied by the first
/// fit. The window never exceeds the segmented region.
pub fn fit_axial(layout: &TrapLayout, voltages: &VoltageSet, ion: &IonSpecies) -> Result<QuarticFit> {
    let base = 0.5 * layout.widths.wedge;
    let cap = layout.axial_extent();
    let first = fit_quartic(&sample_axial(layout, voltages, base.min(cap))?)?;
    let Ok(s) = equilibrium_separation(first.beta, ion) else {
        return Ok(first);
    };
    let window = (2.0 * s).max(base).min(cap);
    if window == first.window {
        return Ok(first);
    }
    fit_quartic(&sample_axial(layout, voltages, window)?)
}

/// Largest fit residual, relative to the potential span, for which the
/// quartic is taken to describe the window.
pub const RESIDUAL_LIMIT: f64 = 1e-4;

/// Two-ion separation in `q (alpha z^2 + beta z^4)`: twice the positive root of
/// `2 alpha z + 4 beta z^3 = q / (16 pi eps0 z^2)`. Reduces to
/// [`equilibrium_separation`] when `alpha = 0`. `None` if not confining.
pub fn separation_estimate(alpha: f64, beta: f64, ion: &IonSpecies) -> Option<f64> {
    if !(beta > 0.0 || alpha > 0.0) || (alpha < 0.0 && beta <= 0.0) {
        return None;
    }
    let k = coulomb_scale(ion.charge) / 8.0;
    let f = |z: f64| 2.0 * alpha * z + 4.0 * beta * z * z * z - k / (z * z);
    let mut hi = 1e-9;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1.0 {
            return None;
        }
    }
    let mut lo = 0.5 * hi;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo + hi)
}

/// Which expression sets the axial frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxialRegime {
    /// Single harmonic well, `alpha > 0`.
    Harmonic,
    /// Near the transition, where the quartic term dominates at the ion
    /// separation.
    Quartic,
    /// Separate wells, `alpha < 0`.
    DoubleWell,
}

/// Axial secular frequency and the regime that produced it.
///
/// Each branch is clamped from below by the quartic-regime value
/// `sqrt(3 q / m) (q / 2 pi eps0)^(1/5) beta^(3/10)`, which makes the
/// crossovers sit where the branches meet: `alpha = 1.5 beta s^2` on the
/// single-well side and `|alpha| = 0.75 beta s^2` on the double-well side.
pub fn axial_frequency_regime(fit: &QuarticFit, ion: &IonSpecies) -> Result<(f64, AxialRegime)> {
    let (alpha, beta) = (fit.alpha, fit.beta);
    if (alpha < 0.0 && beta <= 0.0) || (alpha == 0.0 && beta <= 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::NonConfining { alpha, beta });
    }
    let q = ion.charge;
    let m = ion.mass;
    let quartic = if beta > 0.0 {
        sqrt(3.0 * q / m) * powf(coulomb_scale(q), 0.2) * powf(beta, 0.3)
    } else {
        0.0
    };
    let (quadratic, regime) = if alpha > 0.0 {
        (sqrt(2.0 * q * alpha / m), AxialRegime::Harmonic)
    } else {
        (sqrt(4.0 * q * -alpha / m), AxialRegime::DoubleWell)
    };
    if quadratic >= quartic {
        Ok((quadratic, regime))
    } else {
        Ok((quartic, AxialRegime::Quartic))
    }
}

/// Axial secular frequency, rad/s.
pub fn axial_frequency(fit: &QuarticFit, ion: &IonSpecies) -> Result<f64> {
    axial_frequency_regime(fit, ion).map(|r| r.0)
}

/// Distance between two ions in a pure quartic well, `(q / 2 pi eps0 beta)^(1/5)`.
pub fn equilibrium_separation(beta: f64, ion: &IonSpecies) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter { name: "beta", reason: "must be positive" });
    }
    Ok(powf(coulomb_scale(ion.charge) / beta, 0.2))
}

/// Quartic coefficient of a layout under the unit-voltage protocol.
pub fn unit_beta(layout: &TrapLayout, ion: &IonSpecies) -> f64 {
    fit_axial(layout, &VoltageSet::unit_protocol(), ion).map(|f| f.beta).unwrap_or(f64::NEG_INFINITY)
}

/// Bracket of `W / E` searched by [`optimize_wedge_ratio`].
pub const WEDGE_RATIO_RANGE: (f64, f64) = (0.3, 3.0);
/// Bracket of `W / a` searched by [`optimize_segment_width`].
pub const SEGMENT_WIDTH_RANGE: (f64, f64) = (0.2, 12.0);

fn width_scan() -> ScanSettings {
    ScanSettings { points: 96, spacing: GridSpacing::Logarithmic, rel_tol: 1e-6 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthOptimum {
    /// `W / E` for the wedge ratio, `W / a` for the segment width.
    pub ratio: f64,
    pub beta: f64,
}

fn with_design(template: &TrapLayout, design: Design) -> TrapLayout {
    let mut l = template.clone();
    l.design = design;
    l
}

/// Maximise `beta` over the wedge width at fixed endcap and control widths.
pub fn optimize_wedge_ratio(template: &TrapLayout, design: Design, ion: &IonSpecies) -> Result<WidthOptimum> {
    let base = with_design(template, design);
    let e = base.widths.endcap;
    let c = base.widths.control;
    let m = maximize(
        |r| match base.with_widths(SegmentWidths { endcap: e, wedge: r * e, control: c }) {
            Ok(l) => unit_beta(&l, ion),
            Err(_) => f64::NEG_INFINITY,
        },
        WEDGE_RATIO_RANGE.0,
        WEDGE_RATIO_RANGE.1,
        &width_scan(),
    )?;
    Ok(WidthOptimum { ratio: m.x, beta: m.value })
}

/// Maximise `beta` over a common width `W = C_w = E` of the segments.
pub fn optimize_segment_width(template: &TrapLayout, design: Design, ion: &IonSpecies) -> Result<WidthOptimum> {
    let base = with_design(template, design);
    let a = base.five_wire.a;
    let m = maximize(
        |r| match base.with_widths(SegmentWidths::uniform(r * a)) {
            Ok(l) => unit_beta(&l, ion),
            Err(_) => f64::NEG_INFINITY,
        },
        SEGMENT_WIDTH_RANGE.0,
        SEGMENT_WIDTH_RANGE.1,
        &width_scan(),
    )?;
    Ok(WidthOptimum { ratio: m.x, beta: m.value })
}

/// Unit-protocol coefficients of both designs at one rf separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignComparison {
    pub a: f64,
    pub outer_alpha: f64,
    pub outer_beta: f64,
    pub centre_alpha: f64,
    pub centre_beta: f64,
}

impl DesignComparison {
    pub fn beta_ratio(&self) -> f64 {
        self.centre_beta / self.outer_beta
    }
}

/// Coefficients of both designs over a ladder of rf separations, with the
/// rf width ratios of `five` and each design's optimal segment width
/// (found once, since `W / a` is scale invariant).
pub fn compare_designs(five: &FiveWireParams, a_values: &[f64], ion: &IonSpecies) -> Result<Vec<DesignComparison>> {
    let mut ratios = [0.0; 2];
    for (k, design) in Design::ALL.iter().enumerate() {
        let template = TrapLayout::new(*five, *design, SegmentWidths::uniform(five.a), crate::layout::DEFAULT_SEGMENTS)?;
        ratios[k] = optimize_segment_width(&template, *design, ion)?.ratio;
    }
    let unit = VoltageSet::unit_protocol();
    let mut out = Vec::with_capacity(a_values.len());
    for &a in a_values {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter { name: "a", reason: "must be positive" });
        }
        let scaled = five.scaled(a / five.a);
        let mut coef = [(0.0, 0.0); 2];
        for (k, design) in Design::ALL.iter().enumerate() {
            let l = TrapLayout::new(scaled, *design, SegmentWidths::uniform(ratios[k] * a), crate::layout::DEFAULT_SEGMENTS)?;
            let f = fit_axial(&l, &unit, ion)?;
            coef[k] = (f.alpha, f.beta);
        }
        out.push(DesignComparison {
            a,
            outer_alpha: coef[0].0,
            outer_beta: coef[0].1,
            centre_alpha: coef[1].0,
            centre_beta: coef[1].1,
        });
    }
    Ok(out)
}
