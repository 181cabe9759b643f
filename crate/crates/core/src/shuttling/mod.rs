//! Separation of two ions by ramping the segment voltages: ramp profiles,
//! secular-frame dynamics and the motional quanta budget.

pub mod dynamics;
pub mod ode;
pub mod profile;
pub mod quanta;
pub mod run;
pub mod sweep;
pub mod waveform;

pub use dynamics::{integrate, ForceModel, IonState, Tolerances, Trajectory};
pub use profile::{matched_erf_steepness, ProfileKind, RampProfile};
pub use quanta::{anomalous_rate, quanta_from_heating, quanta_from_shuttle, total_quanta, FrequencyUnit, HeatingLaw};
pub use run::{omega_z_trace, simulate_separation, FrequencyMap, SeparationRun, SeparationSettings};
pub use sweep::{crossing_report, sweep_duration, CrossingReport, SweepPoint};
pub use waveform::Waveform;
