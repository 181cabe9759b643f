//! Engineering budget of a trap chip: rf stability proxy, depth from the
//! stability proxy, rf power dissipation and electrode breakdown.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::electrostatics::{IonSpecies, RfDrive};
use crate::layout::{ElectrodeKind, TrapLayout, VoltageSet};
use crate::units::joules_to_ev;
use crate::{Error, Result};

/// Electrical limits of the chip and its rf feed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChipBudget {
    /// rf electrode capacitance, F.
    pub cap: f64,
    /// rf electrode series resistance, ohm.
    pub resistance: f64,
    /// Largest voltage difference tolerated between neighbouring electrodes, V.
    pub v_breakdown: f64,
    /// Largest tolerated rf power dissipation, W.
    pub p_max: f64,
    pub q_max: f64,
}

impl Default for ChipBudget {
    fn default() -> Self {
        Self { cap: 20e-12, resistance: 0.5, v_breakdown: 500.0, p_max: 3.0, q_max: 0.7 }
    }
}

impl ChipBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cap", self.cap),
            ("resistance", self.resistance),
            ("v_breakdown", self.v_breakdown),
            ("p_max", self.p_max),
            ("q_max", self.q_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be positive" });
            }
        }
        Ok(())
    }
}

/// Stability proxy `2 q V_rf / (m Omega^2 h^2)`. A scaling measure only: the
/// field curvature of a surface trap is weaker than this suggests.
pub fn stability_q(drive: &RfDrive, ion: &IonSpecies, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter { name: "h", reason: "must be positive" });
    }
    Ok(2.0 * ion.charge * drive.v_rf / (ion.mass * drive.omega_rf * drive.omega_rf * h * h))
}

/// Trap depth in eV from the stability proxy, `Q V_rf kappa q / (2 pi^2)`
/// for an ion of charge `Q`.
pub fn depth_from_q(v_rf: f64, kappa: f64, q: f64, ion: &IonSpecies) -> Result<f64> {
    if !(v_rf > 0.0) || !(kappa > 0.0) || !(q >= 0.0) {
        return Err(Error::InvalidParameter { name: "v_rf/kappa/q", reason: "must be positive" });
    }
    Ok(joules_to_ev(ion.charge * v_rf * kappa * q / (2.0 * PI * PI)))
}

/// rf power dissipated in the electrode resistance, `0.5 V^2 Omega^2 C^2 R`.
pub fn power_dissipation(v_rf: f64, omega_rf: f64, budget: &ChipBudget) -> f64 {
    0.5 * v_rf * v_rf * omega_rf * omega_rf * budget.cap * budget.cap * budget.resistance
}

/// One line of a [`BudgetReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    /// `limit - value`; negative when violated.
    pub margin: f64,
    pub pass: bool,
}

impl ConstraintCheck {
    fn new(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, limit, margin: limit - value, pass: value <= limit }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub checks: Vec<ConstraintCheck>,
    /// Electrode index pair (into [`TrapLayout::electrodes`]) with the
    /// largest voltage difference.
    pub worst_pair: Option<(usize, usize)>,
}

impl BudgetReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Largest voltage difference across any shared electrode edge. An rf
/// electrode next to a static one sees the rf amplitude plus the static
/// magnitude; the rf electrodes share one phase.
pub fn max_adjacent_difference(layout: &TrapLayout, drive: &RfDrive, voltages: &VoltageSet) -> (f64, Option<(usize, usize)>) {
    let els = layout.electrodes();
    let level = |k: ElectrodeKind| match k {
        ElectrodeKind::Rf => None,
        ElectrodeKind::Ground => Some(0.0),
        ElectrodeKind::Segment(role) => Some(voltages.get(role)),
    };
    let mut worst = (0.0, None);
    for (i, j) in layout.adjacency() {
        let d = match (level(els[i].kind), level(els[j].kind)) {
            (None, None) => 0.0,
            (None, Some(v)) | (Some(v), None) => drive.v_rf.abs() + v.abs(),
            (Some(u), Some(v)) => (u - v).abs(),
        };
        if d > worst.0 || worst.1.is_none() {
            worst = (d, Some((i, j)));
        }
    }
    worst
}

/// Check an operating point against the chip budget.
pub fn check_budget(
    layout: &TrapLayout,
    drive: &RfDrive,
    ion: &IonSpecies,
    voltages: &VoltageSet,
    budget: &ChipBudget,
) -> Result<BudgetReport> {
    budget.validate()?;
    let (diff, worst_pair) = max_adjacent_difference(layout, drive, voltages);
    let q = stability_q(drive, ion, layout.node().1)?;
    let checks = alloc::vec![
        ConstraintCheck::new("adjacent_voltage_difference_V", diff, budget.v_breakdown),
        ConstraintCheck::new("power_dissipation_W", power_dissipation(drive.v_rf, drive.omega_rf, budget), budget.p_max),
        ConstraintCheck::new("stability_proxy_q", q, budget.q_max),
    ];
    Ok(BudgetReport { checks, worst_pair })
}
