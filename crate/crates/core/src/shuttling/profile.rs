//! Normalised S-shaped ramp profiles.
//!
//! Both profiles map `t in [0, T]` onto `[0, 1]` and are point symmetric about
//! `T / 2`. With `x = 2 t / T - 1` the tanh profile is
//! `(tanh(N x) + tanh N) / (2 tanh N)` and the erf profile is the same with
//! `erf` and steepness `n`.

use crate::math::{erf, exp, sqrt, tanh};
use crate::{Error, Result};
use core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    Tanh,
    Erf,
}

impl ProfileKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::Tanh => "tanh",
            ProfileKind::Erf => "erf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampProfile {
    pub kind: ProfileKind,
    /// `N` for tanh, `n` for erf.
    pub steepness: f64,
    /// Ramp duration `T`, s.
    pub duration: f64,
}

impl RampProfile {
    pub fn new(kind: ProfileKind, steepness: f64, duration: f64) -> Result<Self> {
        if !(steepness > 0.0 && steepness.is_finite()) {
            return Err(Error::InvalidParameter { name: "steepness", reason: "must be positive" });
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter { name: "duration", reason: "must be positive" });
        }
        Ok(Self { kind, steepness, duration })
    }

    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        Self::new(self.kind, self.steepness, duration)
    }

    fn shape(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Tanh => tanh(self.steepness * x),
            ProfileKind::Erf => erf(self.steepness * x),
        }
    }

    /// Ramp fraction at `t`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::OutOfRange { t, duration: self.duration });
        }
        Ok(self.fraction(t))
    }

    /// Ramp fraction with `t` clamped to `[0, T]`.
    pub fn fraction(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.duration {
            return 1.0;
        }
        let top = self.shape(1.0);
        (self.shape(2.0 * t / self.duration - 1.0) + top) / (2.0 * top)
    }

    /// Time derivative of the ramp fraction, 1/s.
    pub fn slope(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        let x = 2.0 * t / self.duration - 1.0;
        let s = self.steepness;
        let d = match self.kind {
            ProfileKind::Tanh => {
                let th = tanh(s * x);
                s * (1.0 - th * th)
            }
            ProfileKind::Erf => s * 2.0 / sqrt(PI) * exp(-(s * x) * (s * x)),
        };
        d / (self.duration * self.shape(1.0))
    }
}

/// Erf steepness whose midpoint slope equals that of a tanh profile with
/// steepness `n_tanh`: `N / tanh N = 2 n / (sqrt(pi) erf n)`.
pub fn matched_erf_steepness(n_tanh: f64) -> Result<f64> {
    if !(n_tanh > 0.0 && n_tanh.is_finite()) {
        return Err(Error::InvalidParameter { name: "steepness", reason: "must be positive" });
    }
    let target = n_tanh / tanh(n_tanh);
    let g = |n: f64| 2.0 * n / (sqrt(PI) * erf(n)) - target;
    // g is increasing from g(0+) = 1 - target <= 0
    let (mut lo, mut hi) = (1e-9, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn endpoints_and_midpoint() {
        for kind in [ProfileKind::Tanh, ProfileKind::Erf] {
            let p = RampProfile::new(kind, 4.0, 3e-5).unwrap();
            assert_eq!(p.value(0.0).unwrap(), 0.0);
            assert_eq!(p.value(3e-5).unwrap(), 1.0);
            assert_relative_eq!(p.value(1.5e-5).unwrap(), 0.5, epsilon = 1e-15);
            assert!(p.value(-1e-9).is_err());
            assert!(p.value(3.1e-5).is_err());
        }
    }

    #[test]
    fn monotone_and_point_symmetric() {
        let p = RampProfile::new(ProfileKind::Tanh, 3.0, 1.0).unwrap();
        let mut last = -1.0;
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            let v = p.fraction(t);
            assert!(v > last || k == 0);
            assert_relative_eq!(v + p.fraction(1.0 - t), 1.0, epsilon = 1e-14);
            last = v;
        }
    }

    #[test]
    fn steeper_profiles_are_flatter_at_the_ends() {
        for kind in [ProfileKind::Tanh, ProfileKind::Erf] {
            let soft = RampProfile::new(kind, 3.0, 1.0).unwrap();
            let hard = RampProfile::new(kind, 4.0, 1.0).unwrap();
            assert!(hard.slope(0.0) < soft.slope(0.0));
            assert!(hard.slope(1.0) < soft.slope(1.0));
            assert!(hard.slope(0.5) > soft.slope(0.5));
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = RampProfile::new(ProfileKind::Erf, 2.5, 2.0).unwrap();
        for t in [0.3, 0.9, 1.7] {
            let fd = (p.fraction(t + 1e-6) - p.fraction(t - 1e-6)) / 2e-6;
            assert_relative_eq!(p.slope(t), fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn matched_profiles_agree() {
        let n = matched_erf_steepness(4.0).unwrap();
        let th = RampProfile::new(ProfileKind::Tanh, 4.0, 1.0).unwrap();
        let ef = RampProfile::new(ProfileKind::Erf, n, 1.0).unwrap();
        assert_relative_eq!(th.slope(0.5), ef.slope(0.5), max_relative = 1e-10);
        let sup = (0..=1000).map(|k| (th.fraction(k as f64 / 1000.0) - ef.fraction(k as f64 / 1000.0)).abs()).fold(0.0, f64::max);
        assert!(sup < 0.02, "{sup}");
    }
}
