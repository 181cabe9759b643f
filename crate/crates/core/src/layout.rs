//! Electrode layouts of the two segmented five-wire designs.
//!
//! The transverse cross-section (along `x`) is, from left to right:
//!
//! ```text
//!   ... | comp d | rf c | ground a | rf b | comp d | ...
//!                       ^ x = 0    ^ x = a
//! ```
//!
//! The origin sits between the left rf electrode and the central ground. The
//! left rf electrode has width `c` and the right one width `b`, which puts
//! the rf node at `x0 = a c / (b + c)`. A compensation ground strip of width
//! `d` sits beside the narrower rf electrode. In the outer-segmented design
//! the rails beyond the outermost strips are split into segments along `z`;
//! in the centre-segmented design the central ground is split instead.
//!
//! Along `z` each segmented rail holds `n_segments` pieces centred on the
//! wedge: wedge, then control, endcap and spare segments on both sides. All
//! electrode extents are *effective*: gaps are absorbed by extending
//! neighbouring electrodes to the gap midline. [`TrapLayout::electrodes`]
//! reports the physical extents too.

use alloc::vec::Vec;

use crate::electrostatics::{RectPatch, StripElectrode};
use crate::math::sqrt;
use crate::units::FAR;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RatioMode {
    /// `c = b`
    Equal,
    /// `c = b / 2`
    Half,
    Custom,
}

/// Widths of the five-wire rf section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveWireParams {
    /// Separation of the rf electrodes (width of the central ground), m.
    pub a: f64,
    /// Width of the wider (right) rf electrode, m.
    pub b: f64,
    /// Width of the left rf electrode, m.
    pub c: f64,
    /// Physical inter-electrode gap, m. Only recorded; potentials use the
    /// gapless extents.
    pub gap: f64,
    pub ratio_mode: RatioMode,
}

impl FiveWireParams {
    pub fn new(a: f64, b: f64, c: f64, gap: f64, ratio_mode: RatioMode) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be positive" });
            }
        }
        if !(gap >= 0.0) {
            return Err(Error::InvalidParameter { name: "gap", reason: "must be non-negative" });
        }
        let consistent = match ratio_mode {
            RatioMode::Equal => (c - b).abs() <= 1e-12 * b,
            RatioMode::Half => (c - 0.5 * b).abs() <= 1e-12 * b,
            RatioMode::Custom => true,
        };
        if !consistent {
            return Err(Error::InvalidParameter { name: "ratio_mode", reason: "widths disagree with the ratio mode" });
        }
        Ok(Self { a, b, c, gap, ratio_mode })
    }

    /// Equal rf widths `b = c = zeta a`.
    pub fn equal(a: f64, zeta: f64) -> Result<Self> {
        Self::new(a, zeta * a, zeta * a, 0.0, RatioMode::Equal)
    }

    /// Unequal rf widths `b = zeta a`, `c = b / 2`.
    pub fn half(a: f64, zeta: f64) -> Result<Self> {
        Self::new(a, zeta * a, 0.5 * zeta * a, 0.0, RatioMode::Half)
    }

    pub fn custom(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(a, b, c, 0.0, RatioMode::Custom)
    }

    pub fn with_gap(mut self, gap: f64) -> Result<Self> {
        if !(gap >= 0.0) {
            return Err(Error::InvalidParameter { name: "gap", reason: "must be non-negative" });
        }
        self.gap = gap;
        Ok(self)
    }

    pub fn zeta(&self) -> f64 {
        self.b / self.a
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a: self.a * s, b: self.b * s, c: self.c * s, gap: self.gap * s, ratio_mode: self.ratio_mode }
    }

    /// Closed-form rf node `(x0, h)` of the gapless five-wire trap.
    pub fn node(&self) -> (f64, f64) {
        let (a, b, c) = (self.a, self.b, self.c);
        (a * c / (b + c), sqrt(a * b * c * (a + b + c)) / (b + c))
    }

    /// Width of the ground strip that re-centres the static electrodes on
    /// the shifted rf node: `|b - c| + (a c / (b + c) - a / 2)` for `c <= b`,
    /// mirrored when `b < c`.
    pub fn compensation_width(&self) -> f64 {
        if self.b == self.c {
            return 0.0;
        }
        let shift = self.a * self.c / (self.b + self.c) - 0.5 * self.a;
        (self.b - self.c).abs() - shift.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    /// Outer rf-ground rails segmented.
    OuterSegmented,
    /// Central rf-ground strip segmented.
    CentreSegmented,
}

impl Design {
    pub const ALL: [Design; 2] = [Design::OuterSegmented, Design::CentreSegmented];

    pub fn name(&self) -> &'static str {
        match self {
            Design::OuterSegmented => "outer",
            Design::CentreSegmented => "centre",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentRole {
    Endcap,
    Control,
    Wedge,
    /// Spare segments beyond the endcaps.
    Other,
}

/// Static voltages by electrode role, in volts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VoltageSet {
    pub endcap: f64,
    pub wedge: f64,
    pub control: f64,
    pub other: f64,
}

impl VoltageSet {
    pub fn new(endcap: f64, wedge: f64, control: f64) -> Self {
        Self { endcap, wedge, control, other: 0.0 }
    }

    /// +1 V on endcaps and wedge, -1 V on controls: the geometry-only
    /// protocol used when optimising segment widths.
    pub fn unit_protocol() -> Self {
        Self::new(1.0, 1.0, -1.0)
    }

    pub fn only(role: SegmentRole, volts: f64) -> Self {
        let mut v = Self::default();
        *v.get_mut(role) = volts;
        v
    }

    pub fn get(&self, role: SegmentRole) -> f64 {
        match role {
            SegmentRole::Endcap => self.endcap,
            SegmentRole::Wedge => self.wedge,
            SegmentRole::Control => self.control,
            SegmentRole::Other => self.other,
        }
    }

    pub fn get_mut(&mut self, role: SegmentRole) -> &mut f64 {
        match role {
            SegmentRole::Endcap => &mut self.endcap,
            SegmentRole::Wedge => &mut self.wedge,
            SegmentRole::Control => &mut self.control,
            SegmentRole::Other => &mut self.other,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { endcap: self.endcap * s, wedge: self.wedge * s, control: self.control * s, other: self.other * s }
    }

    /// `self * (1 - p) + end * p`, exact at `p = 0` and `p = 1`.
    pub fn blend(&self, end: &VoltageSet, p: f64) -> Self {
        let f = |a: f64, b: f64| if p == 1.0 { b } else { a + (b - a) * p };
        Self {
            endcap: f(self.endcap, end.endcap),
            wedge: f(self.wedge, end.wedge),
            control: f(self.control, end.control),
            other: f(self.other, end.other),
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.endcap, self.wedge, self.control, self.other]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Axial widths of the segmented electrodes, m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentWidths {
    pub endcap: f64,
    pub wedge: f64,
    pub control: f64,
}

impl SegmentWidths {
    pub fn uniform(w: f64) -> Self {
        Self { endcap: w, wedge: w, control: w }
    }

    fn of(&self, role: SegmentRole) -> f64 {
        match role {
            SegmentRole::Wedge => self.wedge,
            SegmentRole::Control => self.control,
            SegmentRole::Endcap | SegmentRole::Other => self.endcap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub patch: RectPatch,
    pub role: SegmentRole,
    /// Index of the rail this segment belongs to.
    pub rail: usize,
    /// Signed position along the rail, 0 for the wedge.
    pub index: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElectrodeKind {
    Rf,
    Ground,
    Segment(SegmentRole),
}

/// One electrode with both its effective (gapless) and physical extents.
#[derive(Debug, Clone, PartialEq)]
pub struct Electrode {
    pub kind: ElectrodeKind,
    pub effective: RectPatch,
    pub physical: RectPatch,
}

/// Default number of segments per rail.
pub const DEFAULT_SEGMENTS: usize = 9;

/// Full planar electrode set of a segmented surface trap.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapLayout {
    pub five_wire: FiveWireParams,
    pub design: Design,
    pub widths: SegmentWidths,
    pub n_segments: usize,
    /// Width of the compensation ground strip, m.
    pub compensation_width: f64,
}

impl TrapLayout {
    /// Layout with the compensation width derived from the rf widths.
    pub fn new(five_wire: FiveWireParams, design: Design, widths: SegmentWidths, n_segments: usize) -> Result<Self> {
        for (name, v) in [("endcap_width", widths.endcap), ("wedge_width", widths.wedge), ("control_width", widths.control)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be positive" });
            }
        }
        if n_segments < 5 || n_segments % 2 == 0 {
            return Err(Error::InvalidParameter { name: "n_segments", reason: "must be odd and at least 5" });
        }
        let compensation_width = five_wire.compensation_width().max(0.0);
        Ok(Self { five_wire, design, widths, n_segments, compensation_width })
    }

    pub fn with_compensation_width(mut self, d: f64) -> Result<Self> {
        if !(d >= 0.0) {
            return Err(Error::InvalidParameter { name: "compensation_width", reason: "must be non-negative" });
        }
        self.compensation_width = d;
        Ok(self)
    }

    pub fn with_widths(&self, widths: SegmentWidths) -> Result<Self> {
        let d = self.compensation_width;
        Self::new(self.five_wire, self.design, widths, self.n_segments)?.with_compensation_width(d)
    }

    /// Every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            five_wire: self.five_wire.scaled(s),
            design: self.design,
            widths: SegmentWidths {
                endcap: self.widths.endcap * s,
                wedge: self.widths.wedge * s,
                control: self.widths.control * s,
            },
            n_segments: self.n_segments,
            compensation_width: self.compensation_width * s,
        }
    }

    /// Compensation widths on the (left, right) side.
    fn compensation_sides(&self) -> (f64, f64) {
        let p = &self.five_wire;
        if p.c < p.b {
            (self.compensation_width, 0.0)
        } else if p.b < p.c {
            (0.0, self.compensation_width)
        } else {
            (0.0, 0.0)
        }
    }

    /// Inner edges of the outer rails, `(left, right)`.
    fn outer_edges(&self) -> (f64, f64) {
        let p = &self.five_wire;
        let (dl, dr) = self.compensation_sides();
        (-p.c - dl, p.a + p.b + dr)
    }

    pub fn rf_strips(&self) -> Vec<StripElectrode> {
        let p = &self.five_wire;
        alloc::vec![StripElectrode { x_lo: -p.c, x_hi: 0.0 }, StripElectrode { x_lo: p.a, x_hi: p.a + p.b }]
    }

    /// Closed-form rf node `(x0, h)`.
    pub fn node(&self) -> (f64, f64) {
        self.five_wire.node()
    }

    /// Transverse extents of the segmented rails.
    pub fn rail_extents(&self) -> Vec<(f64, f64)> {
        match self.design {
            Design::OuterSegmented => {
                let (l, r) = self.outer_edges();
                alloc::vec![(-FAR, l), (r, FAR)]
            }
            Design::CentreSegmented => alloc::vec![(0.0, self.five_wire.a)],
        }
    }

    fn role_at(index: i32) -> SegmentRole {
        match index.unsigned_abs() {
            0 => SegmentRole::Wedge,
            1 => SegmentRole::Control,
            2 => SegmentRole::Endcap,
            _ => SegmentRole::Other,
        }
    }

    /// Axial extents `(index, role, z_lo, z_hi)` of the segments on one rail.
    fn axial_segments(&self) -> Vec<(i32, SegmentRole, f64, f64)> {
        let half = (self.n_segments / 2) as i32;
        let mut out = Vec::with_capacity(self.n_segments);
        let w0 = 0.5 * self.widths.wedge;
        out.push((0, SegmentRole::Wedge, -w0, w0));
        let mut z = w0;
        for k in 1..=half {
            let role = Self::role_at(k);
            let w = self.widths.of(role);
            out.push((k, role, z, z + w));
            out.push((-k, role, -z - w, -z));
            z += w;
        }
        out.sort_by_key(|s| s.0);
        out
    }

    /// Half-length of the segmented region along `z`.
    pub fn axial_extent(&self) -> f64 {
        self.axial_segments().last().map(|s| s.3).unwrap_or(0.0)
    }

    pub fn segments(&self) -> Vec<Segment> {
        let axial = self.axial_segments();
        let mut out = Vec::with_capacity(axial.len() * 2);
        for (rail, (x_lo, x_hi)) in self.rail_extents().into_iter().enumerate() {
            for &(index, role, z_lo, z_hi) in &axial {
                out.push(Segment { patch: RectPatch { x_lo, x_hi, z_lo, z_hi }, role, rail, index });
            }
        }
        out
    }

    /// Patches carrying a non-zero voltage.
    pub fn static_patches(&self, voltages: &VoltageSet) -> Vec<(RectPatch, f64)> {
        self.segments()
            .into_iter()
            .filter_map(|s| {
                let v = voltages.get(s.role);
                (v != 0.0).then_some((s.patch, v))
            })
            .collect()
    }

    pub fn role_patches(&self, role: SegmentRole) -> Vec<RectPatch> {
        self.segments().into_iter().filter(|s| s.role == role).map(|s| s.patch).collect()
    }

    /// All electrodes with effective and physical extents. Unsegmented
    /// strips run the full axial length.
    pub fn electrodes(&self) -> Vec<Electrode> {
        let p = &self.five_wire;
        let half_gap = 0.5 * p.gap;
        let shrink = |r: RectPatch| RectPatch {
            x_lo: if r.x_lo <= -FAR { r.x_lo } else { r.x_lo + half_gap },
            x_hi: if r.x_hi >= FAR { r.x_hi } else { r.x_hi - half_gap },
            z_lo: if r.z_lo <= -FAR { r.z_lo } else { r.z_lo + half_gap },
            z_hi: if r.z_hi >= FAR { r.z_hi } else { r.z_hi - half_gap },
        };
        let strip = |x_lo: f64, x_hi: f64| RectPatch { x_lo, x_hi, z_lo: -FAR, z_hi: FAR };
        let mut eff: Vec<(ElectrodeKind, RectPatch)> = Vec::new();
        let (l, r) = self.outer_edges();
        let (dl, dr) = self.compensation_sides();
        eff.push((ElectrodeKind::Rf, strip(-p.c, 0.0)));
        eff.push((ElectrodeKind::Rf, strip(p.a, p.a + p.b)));
        if dl > 0.0 {
            eff.push((ElectrodeKind::Ground, strip(l, -p.c)));
        }
        if dr > 0.0 {
            eff.push((ElectrodeKind::Ground, strip(p.a + p.b, r)));
        }
        match self.design {
            Design::OuterSegmented => eff.push((ElectrodeKind::Ground, strip(0.0, p.a))),
            Design::CentreSegmented => {
                eff.push((ElectrodeKind::Ground, strip(-FAR, l)));
                eff.push((ElectrodeKind::Ground, strip(r, FAR)));
            }
        }
        for s in self.segments() {
            eff.push((ElectrodeKind::Segment(s.role), s.patch));
        }
        eff.into_iter().map(|(kind, e)| Electrode { kind, effective: e, physical: shrink(e) }).collect()
    }

    /// Pairs of electrode indices (into [`TrapLayout::electrodes`]) that share
    /// a gap edge.
    pub fn adjacency(&self) -> Vec<(usize, usize)> {
        let els = self.electrodes();
        let tol = 1e-12 * (self.five_wire.a + self.five_wire.b + self.five_wire.c);
        let touches = |lo1: f64, hi1: f64, lo2: f64, hi2: f64| (hi1 - lo2).abs() <= tol || (hi2 - lo1).abs() <= tol;
        let overlaps = |lo1: f64, hi1: f64, lo2: f64, hi2: f64| lo1.max(lo2) < hi1.min(hi2) - tol;
        let mut out = Vec::new();
        for i in 0..els.len() {
            for j in (i + 1)..els.len() {
                let (a, b) = (&els[i].effective, &els[j].effective);
                let side = touches(a.x_lo, a.x_hi, b.x_lo, b.x_hi) && overlaps(a.z_lo, a.z_hi, b.z_lo, b.z_hi);
                let end = touches(a.z_lo, a.z_hi, b.z_lo, b.z_hi) && overlaps(a.x_lo, a.x_hi, b.x_lo, b.x_hi);
                if side || end {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// The illustrative 171Yb+ chip: `a = 60 um` (including 5 um gaps),
    /// `b = 300 um`, `c = 150 um`, with uniform segment widths of 220 um
    /// (outer-segmented) or 60 um (centre-segmented).
    pub fn example(design: Design) -> Self {
        let um = crate::units::MICROMETRE;
        let five = FiveWireParams::new(60.0 * um, 300.0 * um, 150.0 * um, 5.0 * um, RatioMode::Half)
            .expect("example widths are valid");
        let w = match design {
            Design::OuterSegmented => 220.0 * um,
            Design::CentreSegmented => 60.0 * um,
        };
        Self::new(five, design, SegmentWidths::uniform(w), DEFAULT_SEGMENTS).expect("example layout is valid")
    }
}
