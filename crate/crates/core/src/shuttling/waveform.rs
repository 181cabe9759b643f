//! Electrode voltages along a ramp.

use super::profile::RampProfile;
use crate::layout::VoltageSet;
use crate::Result;

/// Voltages blended from `start` to `end` along a ramp profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waveform {
    pub start: VoltageSet,
    pub end: VoltageSet,
    pub profile: RampProfile,
}

impl Waveform {
    pub fn new(start: VoltageSet, end: VoltageSet, profile: RampProfile) -> Self {
        Self { start, end, profile }
    }

    pub fn duration(&self) -> f64 {
        self.profile.duration
    }

    /// `V(t) = V_start + (V_end - V_start) p(t)`, exactly `start` at `t = 0`
    /// and `end` at `t = T`.
    pub fn at(&self, t: f64) -> Result<VoltageSet> {
        Ok(self.start.blend(&self.end, self.profile.value(t)?))
    }

    /// Voltages at ramp fraction `p`.
    pub fn at_fraction(&self, p: f64) -> VoltageSet {
        self.start.blend(&self.end, p)
    }

    /// The time-reversed waveform, i.e. recombination for a separation.
    pub fn reversed(&self) -> Self {
        Self { start: self.end, end: self.start, profile: self.profile }
    }
}
