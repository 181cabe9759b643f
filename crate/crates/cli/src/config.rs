//! JSON run configuration. Interface units are micrometres, volts, MHz and
//! amu; everything is converted to SI when the core types are built.

use serde::{Deserialize, Serialize};
use trapforge_core::constraints::ChipBudget;
use trapforge_core::electrostatics::{IonSpecies, RfDrive};
use trapforge_core::layout::{Design, FiveWireParams, RatioMode, SegmentWidths, TrapLayout, VoltageSet};
use trapforge_core::shuttling::{FrequencyUnit, HeatingLaw, ProfileKind, SeparationSettings, Tolerances};
use trapforge_core::units::{angular, MICROMETRE, YB171_MASS_AMU};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub trap: TrapConfig,
    pub drive: DriveConfig,
    pub ion: IonConfig,
    pub separation: SeparationConfig,
    pub analyze: AnalyzeConfig,
    pub sweep: SweepConfig,
    pub budget: BudgetConfig,
    pub output: OutputConfig,
    pub tolerances: ToleranceConfig,
    /// Seed for thermal initial conditions.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignName {
    Outer,
    Centre,
}

impl DesignName {
    pub fn design(self) -> Design {
        match self {
            DesignName::Outer => Design::OuterSegmented,
            DesignName::Centre => Design::CentreSegmented,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DesignName::Outer => "outer",
            DesignName::Centre => "centre",
        }
    }

    /// Uniform segment width of the example layouts, um.
    fn example_width_um(self) -> f64 {
        match self {
            DesignName::Outer => 220.0,
            DesignName::Centre => 60.0,
        }
    }

    fn example_v_rf(self) -> f64 {
        match self {
            DesignName::Outer => 450.0,
            DesignName::Centre => 500.0,
        }
    }

    /// Separation endpoints used for the example traps.
    fn example_endpoints(self) -> (VoltagesConfig, VoltagesConfig) {
        match self {
            DesignName::Outer => (VoltagesConfig::new(30.0, -34.0, 0.0), VoltagesConfig::new(30.0, 50.0, -48.0)),
            DesignName::Centre => (VoltagesConfig::new(8.0, 0.0, 0.0), VoltagesConfig::new(8.0, 4.0, -3.8)),
        }
    }
}

impl std::str::FromStr for DesignName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "outer" => Ok(DesignName::Outer),
            "centre" | "center" => Ok(DesignName::Centre),
            _ => Err(format!("unknown design `{s}` (expected outer or centre)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapConfig {
    pub design: DesignName,
    /// rf separation, um.
    pub a_um: f64,
    /// Wider rf electrode, um.
    pub b_um: f64,
    /// Narrower rf electrode, um.
    pub c_um: f64,
    pub gap_um: f64,
    pub segments: usize,
    /// Segment widths; the example widths of the design when absent.
    pub widths_um: Option<WidthsConfig>,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self { design: DesignName::Outer, a_um: 60.0, b_um: 300.0, c_um: 150.0, gap_um: 5.0, segments: 9, widths_um: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthsConfig {
    pub endcap: f64,
    pub wedge: f64,
    pub control: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    /// rf amplitude, V. Defaults to the design's example value.
    pub v_rf: Option<f64>,
    pub freq_mhz: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self { v_rf: None, freq_mhz: 55.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IonConfig {
    pub mass_amu: f64,
    pub charge_e: f64,
}

impl Default for IonConfig {
    fn default() -> Self {
        Self { mass_amu: YB171_MASS_AMU, charge_e: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltagesConfig {
    pub endcap: f64,
    pub wedge: f64,
    pub control: f64,
    #[serde(default)]
    pub other: f64,
}

impl VoltagesConfig {
    pub fn new(endcap: f64, wedge: f64, control: f64) -> Self {
        Self { endcap, wedge, control, other: 0.0 }
    }

    pub fn to_core(self) -> VoltageSet {
        let mut v = VoltageSet::new(self.endcap, self.wedge, self.control);
        v.other = self.other;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Tanh,
    Erf,
}

impl ProfileName {
    pub fn kind(self) -> ProfileKind {
        match self {
            ProfileName::Tanh => ProfileKind::Tanh,
            ProfileName::Erf => ProfileKind::Erf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyUnitName {
    Angular,
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatingConfig {
    /// um^4 Hz^3
    pub coefficient: f64,
    pub uncertainty: f64,
    pub frequency_unit: FrequencyUnitName,
}

impl Default for HeatingConfig {
    fn default() -> Self {
        let law = HeatingLaw::default();
        Self { coefficient: law.coefficient, uncertainty: law.uncertainty, frequency_unit: FrequencyUnitName::Angular }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    /// Temperature of the initial velocity distribution, K.
    pub temperature_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeparationConfig {
    /// Endpoints default to the design's example voltages.
    pub start: Option<VoltagesConfig>,
    pub end: Option<VoltagesConfig>,
    pub profile: ProfileName,
    pub steepness: Vec<f64>,
    pub durations_us: Vec<f64>,
    pub n_ions: usize,
    /// Cold start when absent.
    pub thermal: Option<ThermalConfig>,
    pub window_periods: f64,
    pub map_points: usize,
    pub depth_samples: usize,
    pub heating: HeatingConfig,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        let s = SeparationSettings::default();
        Self {
            start: None,
            end: None,
            profile: ProfileName::Tanh,
            steepness: vec![4.0],
            durations_us: vec![100.0],
            n_ions: s.n_ions,
            thermal: None,
            window_periods: s.window_periods,
            map_points: s.map_points,
            depth_samples: s.depth_samples,
            heating: HeatingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedVoltages {
    Start,
    End,
    /// +1 V endcap and wedge, -1 V control.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VoltageChoice {
    Named(NamedVoltages),
    Explicit(VoltagesConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    pub voltages: VoltageChoice,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self { voltages: VoltageChoice::Named(NamedVoltages::Start) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
    /// Designs to evaluate at every point; the trap's design when absent.
    pub designs: Option<Vec<DesignName>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { parameter: "a_um".into(), values: Vec::new(), designs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub cap_pf: f64,
    pub resistance_ohm: f64,
    pub v_breakdown: f64,
    pub p_max_w: f64,
    pub q_max: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let b = ChipBudget::default();
        Self { cap_pf: b.cap * 1e12, resistance_ohm: b.resistance, v_breakdown: b.v_breakdown, p_max_w: b.p_max, q_max: b.q_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub emit_trajectory: bool,
    /// Write every n-th trajectory sample.
    pub trajectory_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into(), emit_trajectory: true, trajectory_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub rtol: f64,
    pub atol_m: f64,
    pub samples_per_period: f64,
    pub max_steps: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { rtol: t.rtol, atol_m: t.atol, samples_per_period: t.samples_per_period, max_steps: t.max_steps }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("`{name}` must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }

    /// Fill every design-dependent default so the result describes the run
    /// completely and re-ingests to the same run.
    pub fn resolved(mut self) -> Self {
        let d = self.trap.design;
        let w = d.example_width_um();
        self.trap.widths_um.get_or_insert(WidthsConfig { endcap: w, wedge: w, control: w });
        self.drive.v_rf.get_or_insert(d.example_v_rf());
        let (start, end) = d.example_endpoints();
        self.separation.start.get_or_insert(start);
        self.separation.end.get_or_insert(end);
        self.sweep.designs.get_or_insert_with(|| vec![d]);
        self
    }

    /// Switch design, dropping values that were defaults of the old one.
    pub fn with_design(mut self, design: DesignName) -> Self {
        if design != self.trap.design {
            let old = self.clone().resolved();
            self.trap.design = design;
            if self.trap.widths_um == old.trap.widths_um && self.trap.widths_um.is_some() {
                let w = self.trap.design.example_width_um();
                let o = old.trap.design.example_width_um();
                if self.trap.widths_um == Some(WidthsConfig { endcap: o, wedge: o, control: o }) {
                    self.trap.widths_um = Some(WidthsConfig { endcap: w, wedge: w, control: w });
                }
            }
            let (os, oe) = old.trap.design.example_endpoints();
            if self.separation.start == Some(os) {
                self.separation.start = None;
            }
            if self.separation.end == Some(oe) {
                self.separation.end = None;
            }
            if self.drive.v_rf == Some(old.trap.design.example_v_rf()) {
                self.drive.v_rf = None;
            }
            if self.sweep.designs.as_deref() == Some(&[old.trap.design]) {
                self.sweep.designs = None;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.trap;
        for (n, v) in [("trap.a_um", t.a_um), ("trap.b_um", t.b_um), ("trap.c_um", t.c_um)] {
            positive(n, v)?;
        }
        if !(t.gap_um >= 0.0 && t.gap_um.is_finite()) {
            return Err(CliError::Config("`trap.gap_um` must be non-negative".into()));
        }
        if t.segments < 5 || t.segments % 2 == 0 {
            return Err(CliError::Config("`trap.segments` must be odd and at least 5".into()));
        }
        if let Some(w) = t.widths_um {
            for (n, v) in [("widths_um.endcap", w.endcap), ("widths_um.wedge", w.wedge), ("widths_um.control", w.control)] {
                positive(n, v)?;
            }
        }
        if let Some(v) = self.drive.v_rf {
            positive("drive.v_rf", v)?;
        }
        positive("drive.freq_mhz", self.drive.freq_mhz)?;
        positive("ion.mass_amu", self.ion.mass_amu)?;
        positive("ion.charge_e", self.ion.charge_e)?;
        let s = &self.separation;
        for v in s.start.iter().chain(s.end.iter()) {
            if !v.to_core().is_finite() {
                return Err(CliError::Config("separation voltages must be finite".into()));
            }
        }
        for &n in &s.steepness {
            positive("separation.steepness", n)?;
        }
        for &d in &s.durations_us {
            positive("separation.durations_us", d)?;
        }
        if !(1..=2).contains(&s.n_ions) {
            return Err(CliError::Config("`separation.n_ions` must be 1 or 2".into()));
        }
        if let Some(th) = &s.thermal {
            if !(th.temperature_k >= 0.0 && th.temperature_k.is_finite()) {
                return Err(CliError::Config("`thermal.temperature_k` must be non-negative".into()));
            }
        }
        positive("separation.window_periods", s.window_periods)?;
        if s.map_points < 2 || s.depth_samples < 2 {
            return Err(CliError::Config("`map_points` and `depth_samples` must be at least 2".into()));
        }
        positive("heating.coefficient", s.heating.coefficient)?;
        if !(s.heating.uncertainty >= 0.0 && s.heating.uncertainty < s.heating.coefficient) {
            return Err(CliError::Config("`heating.uncertainty` must lie in [0, coefficient)".into()));
        }
        let b = &self.budget;
        for (n, v) in [
            ("budget.cap_pf", b.cap_pf),
            ("budget.resistance_ohm", b.resistance_ohm),
            ("budget.v_breakdown", b.v_breakdown),
            ("budget.p_max_w", b.p_max_w),
            ("budget.q_max", b.q_max),
        ] {
            positive(n, v)?;
        }
        if self.output.trajectory_stride == 0 {
            return Err(CliError::Config("`output.trajectory_stride` must be at least 1".into()));
        }
        let tol = &self.tolerances;
        positive("tolerances.rtol", tol.rtol)?;
        positive("tolerances.atol_m", tol.atol_m)?;
        positive("tolerances.samples_per_period", tol.samples_per_period)?;
        if tol.max_steps == 0 {
            return Err(CliError::Config("`tolerances.max_steps` must be positive".into()));
        }
        Ok(())
    }

    /// Core objects for a resolved, validated config.
    pub fn model(&self) -> Result<Model, CliError> {
        self.validate()?;
        let cfg = self.clone().resolved();
        let t = &cfg.trap;
        let um = MICROMETRE;
        let mode = if t.b_um == t.c_um {
            RatioMode::Equal
        } else if t.b_um == 2.0 * t.c_um {
            RatioMode::Half
        } else {
            RatioMode::Custom
        };
        let five = FiveWireParams::new(t.a_um * um, t.b_um * um, t.c_um * um, t.gap_um * um, mode).map_err(config_error)?;
        let w = t.widths_um.expect("resolved");
        let widths = SegmentWidths { endcap: w.endcap * um, wedge: w.wedge * um, control: w.control * um };
        let layout = TrapLayout::new(five, t.design.design(), widths, t.segments).map_err(config_error)?;
        let drive = RfDrive::new(cfg.drive.v_rf.expect("resolved"), angular(cfg.drive.freq_mhz * 1e6)).map_err(config_error)?;
        let ion = IonSpecies::from_amu(cfg.ion.mass_amu, cfg.ion.charge_e).map_err(config_error)?;
        let b = &cfg.budget;
        let budget = ChipBudget {
            cap: b.cap_pf * 1e-12,
            resistance: b.resistance_ohm,
            v_breakdown: b.v_breakdown,
            p_max: b.p_max_w,
            q_max: b.q_max,
        };
        let s = &cfg.separation;
        let heating = HeatingLaw {
            coefficient: s.heating.coefficient,
            uncertainty: s.heating.uncertainty,
            frequency_unit: match s.heating.frequency_unit {
                FrequencyUnitName::Angular => FrequencyUnit::Angular,
                FrequencyUnitName::Cyclic => FrequencyUnit::Cyclic,
            },
        };
        let tol = &cfg.tolerances;
        let settings = SeparationSettings {
            tolerances: Tolerances {
                rtol: tol.rtol,
                atol: tol.atol_m,
                samples_per_period: tol.samples_per_period,
                max_steps: tol.max_steps,
            },
            heating,
            map_points: s.map_points,
            depth_samples: s.depth_samples,
            window_periods: s.window_periods,
            n_ions: s.n_ions,
        };
        let start = s.start.expect("resolved").to_core();
        let end = s.end.expect("resolved").to_core();
        let analysis = match cfg.analyze.voltages {
            VoltageChoice::Named(NamedVoltages::Start) => start,
            VoltageChoice::Named(NamedVoltages::End) => end,
            VoltageChoice::Named(NamedVoltages::Unit) => VoltageSet::unit_protocol(),
            VoltageChoice::Explicit(v) => v.to_core(),
        };
        Ok(Model { layout, drive, ion, budget, settings, start, end, analysis, config: cfg })
    }
}

fn config_error(e: trapforge_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Core objects built from a config.
#[derive(Debug, Clone)]
pub struct Model {
    pub layout: TrapLayout,
    pub drive: RfDrive,
    pub ion: IonSpecies,
    pub budget: ChipBudget,
    pub settings: SeparationSettings,
    pub start: VoltageSet,
    pub end: VoltageSet,
    /// Voltages for the static analysis.
    pub analysis: VoltageSet,
    /// The resolved config the model was built from.
    pub config: RunConfig,
}
