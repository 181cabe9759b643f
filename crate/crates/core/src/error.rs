use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation point must lie above the electrode plane (y = {y} m)")]
    BelowPlane { y: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("no rf electrodes supplied")]
    EmptyRfStrips,
    #[error("no rf node found: {reason}")]
    NoTrappingPoint { reason: &'static str },
    #[error("no escape point found above the rf node")]
    NoEscapePoint,
    #[error("radial modes are degenerate; principal axis angle undefined")]
    DegenerateModes,
    #[error("quartic fit is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("at least {required} samples are needed, got {got}")]
    TooFewSamples { required: usize, got: usize },
    #[error("axial potential is not confining (alpha = {alpha:e} V/m^2, beta = {beta:e} V/m^4)")]
    NonConfining { alpha: f64, beta: f64 },
    #[error("time {t:e} s lies outside the ramp [0, {duration:e}] s")]
    OutOfRange { t: f64, duration: f64 },
    #[error("ion {ion} lost at t = {time:e} s")]
    IonLost { ion: usize, time: f64 },
    #[error("ions came within 10 nm of each other at t = {time:e} s")]
    IonsCoincide { time: f64 },
    #[error("integrator could not meet tolerances at t = {time:e} s")]
    StepFailure { time: f64 },
    #[error("ramp of {duration:e} s is shorter than the {required:e} s needed for the energy windows")]
    WindowTooShort { duration: f64, required: f64 },
    #[error("excitation and heating trends do not cross within the swept durations")]
    NoCrossing,
}

pub type Result<T> = core::result::Result<T, Error>;
