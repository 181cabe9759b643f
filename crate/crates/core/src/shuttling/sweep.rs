//! Duration sweeps and the crossing of ramp excitation with heating.

use alloc::vec::Vec;

use super::profile::{ProfileKind, RampProfile};
use super::run::{simulate_in, RunContext, SeparationRun, SeparationSettings};
use super::waveform::Waveform;
use crate::electrostatics::{IonSpecies, RfDrive};
use crate::layout::{TrapLayout, VoltageSet};
use crate::math::{exp, ln};
use crate::{Error, Result};

/// Summary of one run in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub duration: f64,
    pub n_s: f64,
    pub n_an: f64,
    pub n_total: f64,
    pub omega_min: f64,
    pub min_depth: f64,
}

impl From<&SeparationRun> for SweepPoint {
    fn from(r: &SeparationRun) -> Self {
        Self {
            duration: r.waveform.duration(),
            n_s: r.n_s,
            n_an: r.n_an,
            n_total: r.n_total,
            omega_min: r.omega_min,
            min_depth: r.min_depth,
        }
    }
}

/// `y = prefactor * x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub prefactor: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn at(&self, x: f64) -> f64 {
        self.prefactor * exp(self.exponent * ln(x))
    }
}

/// Least-squares line through `(ln x, ln y)` over the points with `y > 0`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<PowerLaw> {
    let logs: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (ln(p.0), ln(p.1))).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Some(PowerLaw { prefactor: exp(my - b * mx), exponent: b })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub duration: f64,
    /// Total quanta at the crossing, twice the interpolated heating there.
    pub n_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub kind: ProfileKind,
    pub steepness: f64,
    pub points: Vec<SweepPoint>,
    pub shuttle_trend: Option<PowerLaw>,
    pub heating_trend: Option<PowerLaw>,
    pub crossing: Result<Crossing>,
}

/// Fit power-law trends to `n_s(T)` and `n_an(T)` and locate their
/// crossing. `n_s` steepens at long durations, so one power law misplaces the
/// crossing; it is found instead by log-log interpolation between the two
/// swept durations that bracket the sign change of `n_s - n_an`.
pub fn crossing_report(kind: ProfileKind, steepness: f64, mut points: Vec<SweepPoint>) -> CrossingReport {
    points.sort_by(|a, b| a.duration.total_cmp(&b.duration));
    let s: Vec<(f64, f64)> = points.iter().map(|p| (p.duration, p.n_s)).collect();
    let a: Vec<(f64, f64)> = points.iter().map(|p| (p.duration, p.n_an)).collect();
    let shuttle_trend = fit_power_law(&s);
    let heating_trend = fit_power_law(&a);
    CrossingReport { kind, steepness, crossing: locate_crossing(&points), points, shuttle_trend, heating_trend }
}

fn locate_crossing(points: &[SweepPoint]) -> Result<Crossing> {
    // n_s at or below zero is noise floor: treat as far below heating
    let gap = |p: &SweepPoint| if p.n_s > 0.0 { ln(p.n_s) - ln(p.n_an) } else { f64::NEG_INFINITY };
    for w in points.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        if !(p.n_an > 0.0 && q.n_an > 0.0) {
            continue;
        }
        let (g0, g1) = (gap(p), gap(q));
        if g0 >= 0.0 && g1 <= 0.0 {
            let (l0, l1) = (ln(p.duration), ln(q.duration));
            let f = if g1.is_finite() && g0 > g1 { g0 / (g0 - g1) } else { 0.0 };
            let lt = l0 + f * (l1 - l0);
            let ln_an = ln(p.n_an) + f * (ln(q.n_an) - ln(p.n_an));
            return Ok(Crossing { duration: exp(lt), n_total: 2.0 * exp(ln_an) });
        }
    }
    Err(Error::NoCrossing)
}

/// Run every duration for every profile setting and report the crossings.
#[allow(clippy::too_many_arguments)]
pub fn sweep_duration(
    layout: &TrapLayout,
    drive: &RfDrive,
    ion: &IonSpecies,
    start: &VoltageSet,
    end: &VoltageSet,
    profiles: &[(ProfileKind, f64)],
    durations: &[f64],
    settings: &SeparationSettings,
) -> Result<Vec<CrossingReport>> {
    if durations.len() < 3 {
        return Err(Error::InvalidParameter { name: "durations", reason: "need at least three" });
    }
    let ctx = RunContext::new(layout, drive, ion, start, end, settings)?;
    let mut out = Vec::with_capacity(profiles.len());
    for &(kind, steepness) in profiles {
        let mut points = Vec::with_capacity(durations.len());
        for &t in durations {
            let w = Waveform::new(*start, *end, RampProfile::new(kind, steepness, t)?);
            points.push(SweepPoint::from(&simulate_in(&ctx, &w, None, settings)?));
        }
        out.push(crossing_report(kind, steepness, points));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point(t: f64, n_s: f64, n_an: f64) -> SweepPoint {
        SweepPoint { duration: t, n_s, n_an, n_total: n_s + n_an, omega_min: 1.0, min_depth: 1.0 }
    }

    #[test]
    fn power_law_round_trip() {
        let pts: Vec<(f64, f64)> = [1e-5, 2e-5, 5e-5].iter().map(|&t| (t, 3.0 * libm::pow(t, -2.5))).collect();
        let p = fit_power_law(&pts).unwrap();
        assert_relative_eq!(p.exponent, -2.5, max_relative = 1e-10);
        assert_relative_eq!(p.prefactor, 3.0, max_relative = 1e-8);
    }

    #[test]
    fn crossing_of_exact_power_laws() {
        // n_s = 1e-10 T^-2, n_an = 1e8 T: cross at T^3 = 1e-18
        let pts = [1e-7, 1e-6, 1e-5].iter().map(|&t| point(t, 1e-10 / (t * t), 1e8 * t)).collect();
        let r = crossing_report(ProfileKind::Tanh, 4.0, pts);
        let c = r.crossing.unwrap();
        assert_relative_eq!(c.duration, 1e-6, max_relative = 1e-9);
        assert_relative_eq!(c.n_total, 200.0, max_relative = 1e-9);
    }

    #[test]
    fn crossing_follows_a_bending_curve() {
        // n_s falls off a cliff: a single power law would miss where it meets n_an
        let pts: Vec<SweepPoint> =
            [1e-4, 2e-4, 4e-4, 8e-4].iter().zip([1e4, 5e2, 5.0, 3e-3]).map(|(&t, n)| point(t, n, 1e5 * t)).collect();
        let c = crossing_report(ProfileKind::Tanh, 3.0, pts).crossing.unwrap();
        assert!(c.duration > 2e-4 && c.duration < 4e-4, "{c:?}");
        assert!(c.n_total > 40.0 && c.n_total < 80.0);
    }

    #[test]
    fn unsorted_points_are_sorted() {
        let pts = [1e-5, 1e-7, 1e-6].iter().map(|&t| point(t, 1e-10 / (t * t), 1e8 * t)).collect();
        let r = crossing_report(ProfileKind::Tanh, 4.0, pts);
        assert!(r.points.windows(2).all(|w| w[0].duration < w[1].duration));
        assert_relative_eq!(r.crossing.unwrap().duration, 1e-6, max_relative = 1e-9);
    }

    #[test]
    fn missing_crossing_is_reported() {
        let pts = [1e-6, 2e-6, 3e-6].iter().map(|&t| point(t, 1e-20 / t, 1e8 * t)).collect();
        assert_eq!(crossing_report(ProfileKind::Erf, 2.0, pts).crossing, Err(Error::NoCrossing));
    }
}
