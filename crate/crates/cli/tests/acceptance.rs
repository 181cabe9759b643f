//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use trapforge_core::axial::{axial_potential, compare_designs, fit_quartic, optimize_segment_width, optimize_wedge_ratio};
use trapforge_core::constraints::{depth_from_q, power_dissipation, stability_q, ChipBudget};
use trapforge_core::electrostatics::{patch_basis, IonSpecies, RectPatch, RfDrive};
use trapforge_core::geometry::{kappa_exact, optimize_zeta, rf_node_numeric, trap_depth_analytic};
use trapforge_core::layout::{Design, FiveWireParams, RatioMode, SegmentWidths, TrapLayout, VoltageSet};
use trapforge_core::shuttling::dynamics::{equilibrium_for, integrate, ForceModel, IonState, Tolerances};
use trapforge_core::shuttling::run::{simulate_in, RunContext};
use trapforge_core::shuttling::{crossing_report, ProfileKind, RampProfile, SeparationSettings, SweepPoint, Waveform};
use trapforge_core::units::{angular, cyclic, VACUUM_PERMITTIVITY};
use trapforge_core::Vec3;

const UM: f64 = 1e-6;

/// Outcome of one criterion: pass flag and a one-line account.
type Outcome = (bool, String);

fn within(x: f64, centre: f64, tol: f64) -> bool {
    (x - centre).abs() <= tol
}

fn within_rel(x: f64, centre: f64, rel: f64) -> bool {
    (x / centre - 1.0).abs() <= rel
}

fn yb() -> IonSpecies {
    IonSpecies::ytterbium_171()
}

fn drive(v: f64) -> RfDrive {
    RfDrive::new(v, angular(55e6)).unwrap()
}

fn zeta_optima() -> Outcome {
    let t = Instant::now();
    let equal = optimize_zeta(RatioMode::Equal).unwrap();
    let half = optimize_zeta(RatioMode::Half).unwrap();
    let elapsed = t.elapsed();
    let pass = within(equal.zeta, 3.68, 0.05) && within(half.zeta, 4.9, 0.1) && elapsed < Duration::from_secs(1);
    (pass, format!("zeta* equal {:.4} (3.68 +- 0.05), half {:.4} (4.9 +- 0.1), {:.1} ms", equal.zeta, half.zeta, ms(elapsed)))
}

fn height_ratios() -> Outcome {
    let equal = optimize_zeta(RatioMode::Equal).unwrap();
    let half = optimize_zeta(RatioMode::Half).unwrap();
    let pass = within(equal.h_over_a, 1.43, 0.02) && within(half.h_over_a, 1.27, 0.02);
    (pass, format!("h/a equal {:.4} (1.43 +- 0.02), half {:.4} (1.27 +- 0.02)", equal.h_over_a, half.h_over_a))
}

/// Equal-rf template at zeta*, a = 60 um, spare segment width E of the
/// example layout.
fn width_template(design: Design) -> TrapLayout {
    let zeta = optimize_zeta(RatioMode::Equal).unwrap().zeta;
    let five = FiveWireParams::equal(60.0 * UM, zeta).unwrap();
    let e = match design {
        Design::OuterSegmented => 220.0 * UM,
        Design::CentreSegmented => 60.0 * UM,
    };
    TrapLayout::new(five, design, SegmentWidths::uniform(e), 9).unwrap()
}

fn width_optima() -> Outcome {
    let t = Instant::now();
    let r: Vec<(Design, f64, f64)> = Design::ALL
        .par_iter()
        .map(|&d| {
            let tpl = width_template(d);
            (d, optimize_wedge_ratio(&tpl, d, &yb()).unwrap().ratio, optimize_segment_width(&tpl, d, &yb()).unwrap().ratio)
        })
        .collect();
    let elapsed = t.elapsed();
    let (outer, centre) = (r[0], r[1]);
    let pass = within(outer.1, 1.1, 0.1)
        && within(centre.1, 1.1, 0.1)
        && within_rel(outer.2, 3.66, 0.1)
        && within_rel(centre.2, 1.0, 0.1)
        && elapsed < Duration::from_secs(60);
    (
        pass,
        format!(
            "W/E* outer {:.4}, centre {:.4} (1.1 +- 0.1); W*/a outer {:.3} (3.66 +- 10%), centre {:.3} (1 +- 10%); {:.0} ms",
            outer.1,
            centre.1,
            outer.2,
            centre.2,
            ms(elapsed)
        ),
    )
}

fn design_ratio() -> Outcome {
    let zeta = optimize_zeta(RatioMode::Equal).unwrap().zeta;
    let five = FiveWireParams::equal(60.0 * UM, zeta).unwrap();
    let c = compare_designs(&five, &[60.0 * UM], &yb()).unwrap();
    let ratio = c[0].beta_ratio();
    (ratio >= 30.0, format!("beta_centre / beta_outer = {ratio:.1} (>= 30)"))
}

fn example_trap() -> Outcome {
    let layout = TrapLayout::example(Design::OuterSegmented);
    let ion = yb();
    let at450 = rf_node_numeric(&layout, &drive(450.0), &ion).unwrap();
    let at500 = rf_node_numeric(&layout, &drive(500.0), &ion).unwrap();
    let q450 = stability_q(&drive(450.0), &ion, at450.h).unwrap();
    let q500 = stability_q(&drive(500.0), &ion, at500.h).unwrap();
    let p = power_dissipation(475.0, angular(55e6), &ChipBudget::default());
    let radial = [at450.omega_x, at450.omega_y, at500.omega_x, at500.omega_y].map(cyclic);
    let pass = (0.25..=0.36).contains(&at450.depth)
        && radial.iter().all(|&f| within_rel(f, 4.2e6, 0.2))
        && (0.55..=0.75).contains(&q450)
        && (0.55..=0.75).contains(&q500)
        && p < 3.0;
    (
        pass,
        format!(
            "depth {:.3} eV at 450 V ({:.3} at 500 V); radial {:.2}/{:.2} MHz at 450-500 V (4.2 +- 20%); q {:.3}-{:.3}; P {:.2} W at 475 V",
            at450.depth,
            at500.depth,
            radial[0] / 1e6,
            radial[2] / 1e6,
            q450,
            q500,
            p
        ),
    )
}

fn endpoints(design: Design) -> (VoltageSet, VoltageSet, f64) {
    match design {
        Design::OuterSegmented => (VoltageSet::new(30.0, -34.0, 0.0), VoltageSet::new(30.0, 50.0, -48.0), 450.0),
        Design::CentreSegmented => (VoltageSet::new(8.0, 0.0, 0.0), VoltageSet::new(8.0, 4.0, -3.8), 500.0),
    }
}

fn context(design: Design) -> RunContext {
    let (v0, v1, v_rf) = endpoints(design);
    RunContext::new(&TrapLayout::example(design), &drive(v_rf), &yb(), &v0, &v1, &SeparationSettings::default()).unwrap()
}

fn separation_frequencies() -> Outcome {
    let targets = [(Design::OuterSegmented, 42e3, 500e3), (Design::CentreSegmented, 230e3, 1.15e6)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (design, f_min, f_end) in targets {
        let ctx = context(design);
        let t = Instant::now();
        let w = Waveform::new(ctx.start, ctx.end, RampProfile::new(ProfileKind::Tanh, 4.0, 100e-6).unwrap());
        let r = simulate_in(&ctx, &w, None, &SeparationSettings::default()).unwrap();
        let elapsed = t.elapsed();
        let (lo, end) = (cyclic(r.omega_min), cyclic(r.omega_end));
        pass &= within_rel(lo, f_min, 0.25) && within_rel(end, f_end, 0.2) && r.min_depth >= 0.2 && elapsed < Duration::from_secs(600);
        parts.push(format!(
            "{} f_min {:.1} kHz ({:.0} +- 25%), f_end {:.0} kHz ({:.0} +- 20%), depth >= {:.3} eV, {:.0} ms",
            design.name(),
            lo / 1e3,
            f_min / 1e3,
            end / 1e3,
            f_end / 1e3,
            r.min_depth,
            ms(elapsed)
        ));
    }
    (pass, parts.join("; "))
}

fn monotone(values: &[f64], decreasing: bool) -> bool {
    values.windows(2).all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] })
}

fn crossings() -> Outcome {
    let ladders = [
        (Design::OuterSegmented, 3.0, vec![0.2e-3, 0.5e-3, 1e-3, 2e-3, 4e-3]),
        (Design::OuterSegmented, 4.0, vec![0.2e-3, 0.5e-3, 1e-3, 2e-3, 4e-3]),
        (Design::CentreSegmented, 4.0, vec![0.1e-3, 0.2e-3, 0.4e-3, 0.8e-3]),
    ];
    let contexts = [context(Design::OuterSegmented), context(Design::CentreSegmented)];
    let settings = SeparationSettings::default();
    let jobs: Vec<(usize, f64, f64)> =
        ladders.iter().enumerate().flat_map(|(k, (_, n, ts))| ts.iter().map(move |&t| (k, *n, t))).collect();
    let runs: Vec<(usize, SweepPoint)> = jobs
        .par_iter()
        .map(|&(k, n, t)| {
            let ctx = &contexts[if ladders[k].0 == Design::OuterSegmented { 0 } else { 1 }];
            let w = Waveform::new(ctx.start, ctx.end, RampProfile::new(ProfileKind::Tanh, n, t).unwrap());
            (k, SweepPoint::from(&simulate_in(ctx, &w, None, &settings).unwrap()))
        })
        .collect();
    let mut pass = true;
    let mut found = Vec::new();
    let mut parts = Vec::new();
    for (k, (design, n, _)) in ladders.iter().enumerate() {
        let points: Vec<SweepPoint> = runs.iter().filter(|r| r.0 == k).map(|r| r.1).collect();
        let n_s: Vec<f64> = points.iter().map(|p| p.n_s).collect();
        let n_an: Vec<f64> = points.iter().map(|p| p.n_an).collect();
        let shape = monotone(&n_s, true) && monotone(&n_an, false);
        let report = crossing_report(ProfileKind::Tanh, *n, points);
        pass &= shape && report.crossing.is_ok();
        match &report.crossing {
            Ok(c) => parts.push(format!("{} N={}: T* {:.3} ms, n_total {:.3e}", design.name(), n, c.duration * 1e3, c.n_total)),
            Err(e) => parts.push(format!("{} N={}: {e}", design.name(), n)),
        }
        if !shape {
            parts.push(format!("{} N={}: not monotone", design.name(), n));
        }
        found.push(report.crossing.ok());
    }
    if let [Some(o3), Some(o4), Some(c4)] = found[..] {
        let factor = o3.n_total.max(o4.n_total) / o3.n_total.min(o4.n_total);
        pass &= c4.n_total < o3.n_total.min(o4.n_total) && o3.duration < o4.duration && factor <= 2.0;
        parts.push(format!("outer N=3/N=4 n_total factor {factor:.2}"));
    }
    (pass, parts.join("; "))
}

fn property_suites() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_laplace = 0.0_f64;
    let mut worst_gradient = 0.0_f64;
    for _ in 0..200 {
        let (x, w, z, l) = (rng.random_range(-300.0..300.0), rng.random_range(5.0..400.0), rng.random_range(-300.0..300.0), rng.random_range(5.0..400.0));
        let p = RectPatch::new(x * UM, (x + w) * UM, z * UM, (z + l) * UM).unwrap();
        let r = Vec3::new(rng.random_range(-400.0..400.0) * UM, rng.random_range(15.0..300.0) * UM, rng.random_range(-400.0..400.0) * UM);
        let s = patch_basis(&p, &r).unwrap();
        worst_laplace = worst_laplace.max(s.laplacian().abs() / s.hessian.norm());
        let h = 1e-9;
        for k in 0..3 {
            let (mut a, mut b) = (r, r);
            a[k] += h;
            b[k] -= h;
            let fd = (patch_basis(&p, &a).unwrap().value - patch_basis(&p, &b).unwrap().value) / (2.0 * h);
            worst_gradient = worst_gradient.max((fd - s.gradient[k]).abs() / s.gradient.norm());
        }
    }
    let mut worst_fit = 0.0_f64;
    for _ in 0..100 {
        let (phi0, alpha, beta, w) =
            (rng.random_range(-5.0..5.0), rng.random_range(-1e8..1e8), rng.random_range(1e12..1e18), rng.random_range(5.0..200.0) * UM);
        let samples: Vec<(f64, f64)> = (0..65)
            .map(|k| {
                let z = w * (std::f64::consts::PI * (k as f64 + 0.5) / 65.0).cos();
                (z, phi0 + alpha * z * z + beta * z.powi(4))
            })
            .collect();
        let f = fit_quartic(&samples).unwrap();
        let scale = phi0.abs() + alpha.abs() * w * w + beta * w.powi(4);
        worst_fit = worst_fit.max(((f.alpha - alpha).abs() * w * w).max((f.beta - beta).abs() * w.powi(4)) / scale);
    }
    let drift = static_energy_drift();
    let equilibrium = equilibrium_error();
    let mut worst_identity = 0.0_f64;
    for _ in 0..100 {
        let ion = IonSpecies::from_amu(rng.random_range(6.0..250.0), 1.0).unwrap();
        let d = RfDrive::new(rng.random_range(50.0..1000.0), angular(rng.random_range(10.0..120.0) * 1e6)).unwrap();
        let k = kappa_exact(rng.random_range(20.0..150.0), rng.random_range(20.0..600.0), rng.random_range(20.0..600.0));
        let h = rng.random_range(20.0..200.0) * UM;
        let q = stability_q(&d, &ion, h).unwrap();
        let (lhs, rhs) = (depth_from_q(d.v_rf, k, q, &ion).unwrap(), trap_depth_analytic(h, k, &d, &ion).unwrap());
        worst_identity = worst_identity.max((lhs - rhs).abs() / rhs);
    }
    let elapsed = t.elapsed();
    let pass = worst_laplace < 1e-6
        && worst_gradient < 1e-6
        && worst_fit < 1e-10
        && drift < 1e-6
        && equilibrium < 5e-3
        && worst_identity < 1e-12
        && elapsed < Duration::from_secs(120);
    (
        pass,
        format!(
            "laplace {worst_laplace:.1e}, gradient {worst_gradient:.1e}, fit {worst_fit:.1e}, drift {drift:.1e}/100 periods, pair equilibrium {equilibrium:.1e}, depth identity {worst_identity:.1e}; {:.0} ms",
            ms(elapsed)
        ),
    )
}

/// Largest total-energy excursion of a single ion oscillating for 100 axial
/// periods in a static well, relative to the total energy.
fn static_energy_drift() -> f64 {
    let layout = TrapLayout::example(Design::CentreSegmented);
    let ion = yb();
    let m = ForceModel::new(&layout, &drive(500.0), &ion).unwrap();
    let v = VoltageSet::new(8.0, 0.0, 0.0);
    let mut start = equilibrium_for(&layout, &m, &ion, &v, 1).unwrap();
    start[0][2] += UM;
    let e0 = m.potential(&start, &v);
    let w = Waveform::new(v, v, RampProfile::new(ProfileKind::Tanh, 4.0, 100.0 / 1.07e6).unwrap());
    let traj = integrate(&m, &w, &IonState::at_rest(&start).unwrap(), &Tolerances::default()).unwrap();
    traj.states
        .iter()
        .map(|s| (m.potential(s.positions(), &v) + s.kinetic(m.mass())[0] - e0).abs() / e0.abs())
        .fold(0.0, f64::max)
}

/// Relative error of the pair's half separation against a bisection of the
/// on-axis force balance.
fn equilibrium_error() -> f64 {
    let ion = yb();
    let mut worst = 0.0_f64;
    for design in Design::ALL {
        let (v0, v1, v_rf) = endpoints(design);
        let layout = TrapLayout::example(design);
        let m = ForceModel::new(&layout, &drive(v_rf), &ion).unwrap();
        for v in [v0, v1] {
            let eq = equilibrium_for(&layout, &m, &ion, &v, 2).unwrap();
            let h = 1e-9;
            let residual = |z: f64| {
                let dphi = (axial_potential(&layout, &v, z + h) - axial_potential(&layout, &v, z - h)) / (2.0 * h);
                dphi - ion.charge / (16.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * z * z)
            };
            let (mut lo, mut hi) = (0.05 * UM, 0.05 * UM);
            while residual(hi) < 0.0 {
                lo = hi;
                hi *= 1.1;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if residual(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            worst = worst.max((eq[1][2] / (0.5 * (lo + hi)) - 1.0).abs());
        }
    }
    worst
}

type Criterion = (&'static str, fn() -> Outcome);

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("rf width ratio optima", zeta_optima),
        ("ion height at the optima", height_ratios),
        ("segment width optima", width_optima),
        ("centre vs outer quartic gain", design_ratio),
        ("example trap figures", example_trap),
        ("separation frequencies and depth", separation_frequencies),
        ("excitation/heating crossings", crossings),
        ("numerical property suites", property_suites),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        failed += usize::from(!pass);
        println!("criterion {} [{}] {}: {}", k + 1, if pass { "PASS" } else { "FAIL" }, name, detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
