//! Derivative-free scalar maximisation: a bracketing grid scan followed by
//! golden-section refinement of the best bracket.

use crate::math::{exp, ln, sqrt};
use crate::{Error, Result};

/// Spacing of the bracketing grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub points: usize,
    pub spacing: GridSpacing,
    /// Relative bracket width at which golden-section stops.
    pub rel_tol: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self { points: 512, spacing: GridSpacing::Logarithmic, rel_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

fn grid_point(lo: f64, hi: f64, i: usize, n: usize, spacing: GridSpacing) -> f64 {
    let t = i as f64 / (n - 1) as f64;
    match spacing {
        GridSpacing::Linear => lo + (hi - lo) * t,
        GridSpacing::Logarithmic => exp(ln(lo) + (ln(hi) - ln(lo)) * t),
    }
}

/// Maximise `f` on `[lo, hi]`.
///
/// Every interior local maximum of the grid is a candidate bracket; the one
/// with the largest value wins and ties go to the smaller `x`. The winning
/// bracket is then refined by golden-section search. Non-finite function
/// values are treated as `-inf`.
pub fn maximize<F>(mut f: F, lo: f64, hi: f64, settings: &ScanSettings) -> Result<Maximum>
where
    F: FnMut(f64) -> f64,
{
    if !(lo < hi) || settings.points < 3 {
        return Err(Error::InvalidParameter { name: "bracket", reason: "need lo < hi and at least 3 grid points" });
    }
    if settings.spacing == GridSpacing::Logarithmic && !(lo > 0.0) {
        return Err(Error::InvalidParameter { name: "bracket", reason: "log grid needs a positive lower bound" });
    }
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let n = settings.points;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    let mut evaluations = 0;
    for i in 0..n {
        let v = eval(grid_point(lo, hi, i, n, settings.spacing));
        evaluations += 1;
        // strict comparison keeps the smallest x among equal maxima
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    if best_v == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter { name: "objective", reason: "no finite value on the grid" });
    }
    let mut a = grid_point(lo, hi, best_i.saturating_sub(1), n, settings.spacing);
    let mut b = grid_point(lo, hi, (best_i + 1).min(n - 1), n, settings.spacing);
    let x_grid = grid_point(lo, hi, best_i, n, settings.spacing);

    let inv_phi = (sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    evaluations += 2;
    while (b - a) > settings.rel_tol * (a.abs() + b.abs()) * 0.5 && evaluations < 10_000 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2);
        }
        evaluations += 1;
    }
    let (x, value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if value >= best_v {
        Ok(Maximum { x, value, evaluations })
    } else {
        Ok(Maximum { x: x_grid, value: best_v, evaluations })
    }
}
