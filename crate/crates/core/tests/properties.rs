use approx::assert_relative_eq;
use proptest::prelude::*;
use trapforge_core::axial::{axial_potential, fit_quartic};
use trapforge_core::constraints::{depth_from_q, stability_q};
use trapforge_core::electrostatics::{
    patch_basis, pseudopotential, strip_basis, FieldSample, IonSpecies, RectPatch, RfDrive, StripElectrode,
};
use trapforge_core::geometry::{kappa_exact, kappa_parameterised, trap_depth_analytic};
use trapforge_core::layout::{Design, RatioMode, TrapLayout, VoltageSet};
use trapforge_core::shuttling::dynamics::{equilibrium_for, integrate, ForceModel, IonState, Tolerances};
use trapforge_core::shuttling::{ProfileKind, RampProfile, Waveform};
use trapforge_core::units::{angular, VACUUM_PERMITTIVITY};
use trapforge_core::Vec3;

const UM: f64 = 1e-6;

fn frobenius(s: &FieldSample) -> f64 {
    s.hessian.norm()
}

fn patch() -> impl Strategy<Value = RectPatch> {
    (-300.0..300.0f64, 5.0..400.0f64, -300.0..300.0f64, 5.0..400.0f64)
        .prop_map(|(x, w, z, l)| RectPatch::new(x * UM, (x + w) * UM, z * UM, (z + l) * UM).unwrap())
}

fn point() -> impl Strategy<Value = Vec3> {
    (-400.0..400.0f64, 15.0..300.0f64, -400.0..400.0f64).prop_map(|(x, y, z)| Vec3::new(x * UM, y * UM, z * UM))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn patch_is_harmonic(p in patch(), r in point()) {
        let s = patch_basis(&p, &r).unwrap();
        prop_assert!(s.laplacian().abs() < 1e-6 * frobenius(&s) + 1e-300);
    }

    #[test]
    fn strip_is_harmonic(x in -200.0..200.0f64, w in 5.0..400.0f64, px in -400.0..400.0f64, y in 15.0..300.0f64) {
        let s = strip_basis(&StripElectrode::new(x * UM, (x + w) * UM).unwrap(), px * UM, y * UM).unwrap();
        prop_assert!(s.laplacian().abs() < 1e-6 * frobenius(&s) + 1e-300);
    }

    #[test]
    fn patch_value_is_bounded(p in patch(), r in point()) {
        let v = patch_basis(&p, &r).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn patch_gradient_matches_differences(p in patch(), r in point()) {
        let h = 1e-9;
        let s = patch_basis(&p, &r).unwrap();
        let scale = s.gradient.norm();
        for k in 0..3 {
            let mut a = r;
            let mut b = r;
            a[k] += h;
            b[k] -= h;
            let (sa, sb) = (patch_basis(&p, &a).unwrap(), patch_basis(&p, &b).unwrap());
            let fd = (sa.value - sb.value) / (2.0 * h);
            prop_assert!((fd - s.gradient[k]).abs() <= 1e-6 * scale, "k {} fd {} an {}", k, fd, s.gradient[k]);
            let hs = (sa.gradient - sb.gradient) / (2.0 * h);
            let hn = frobenius(&s);
            for j in 0..3 {
                prop_assert!((hs[j] - s.hessian[(j, k)]).abs() <= 1e-6 * hn);
            }
        }
    }

    #[test]
    fn splitting_a_patch_is_additive(p in patch(), r in point(), f in 0.05..0.95f64) {
        let xm = p.x_lo + f * (p.x_hi - p.x_lo);
        let left = RectPatch::new(p.x_lo, xm, p.z_lo, p.z_hi).unwrap();
        let right = RectPatch::new(xm, p.x_hi, p.z_lo, p.z_hi).unwrap();
        let whole = patch_basis(&p, &r).unwrap().value;
        let parts = patch_basis(&left, &r).unwrap().value + patch_basis(&right, &r).unwrap().value;
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn pseudopotential_scalings(v in 100.0..800.0f64, mhz in 20.0..80.0f64, amu in 9.0..200.0f64, r in point()) {
        let strips = [StripElectrode::new(-150.0 * UM, 0.0).unwrap(), StripElectrode::new(60.0 * UM, 360.0 * UM).unwrap()];
        let ion = IonSpecies::from_amu(amu, 1.0).unwrap();
        let heavy = IonSpecies::from_amu(2.0 * amu, 1.0).unwrap();
        let d = RfDrive::new(v, angular(mhz * 1e6)).unwrap();
        let base = pseudopotential(&strips, &d, &ion, &r).unwrap().value;
        let dv = pseudopotential(&strips, &RfDrive::new(2.0 * v, d.omega_rf).unwrap(), &ion, &r).unwrap().value;
        let dw = pseudopotential(&strips, &RfDrive::new(v, 2.0 * d.omega_rf).unwrap(), &ion, &r).unwrap().value;
        let dm = pseudopotential(&strips, &d, &heavy, &r).unwrap().value;
        prop_assert!((dv / base - 4.0).abs() < 1e-12);
        prop_assert!((dw / base - 0.25).abs() < 1e-12);
        prop_assert!((dm / base - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_quartics(phi0 in -5.0..5.0f64, alpha in -1e8..1e8f64, beta in 1e12..1e18f64, half in 5.0..200.0f64) {
        let w = half * UM;
        let n = 65;
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let z = w * libm::cos(core::f64::consts::PI * (k as f64 + 0.5) / n as f64);
                (z, phi0 + alpha * z * z + beta * z * z * z * z)
            })
            .collect();
        let f = fit_quartic(&samples).unwrap();
        // the fit is in volts, so compare each term at the window edge
        let (a_err, b_err) = ((f.alpha - alpha).abs() * w * w, (f.beta - beta).abs() * w * w * w * w);
        let scale = phi0.abs() + alpha.abs() * w * w + beta * w * w * w * w;
        prop_assert!(a_err <= 1e-10 * scale && b_err <= 1e-10 * scale, "{:?}", (f.alpha, f.beta));
    }

    #[test]
    fn kappa_is_symmetric_and_scale_free(a in 10.0..200.0f64, b in 10.0..800.0f64, c in 10.0..800.0f64, s in 0.1..10.0f64) {
        let k = kappa_exact(a, b, c);
        prop_assert!((kappa_exact(a, c, b) - k).abs() <= 1e-14 * k);
        prop_assert!((kappa_exact(s * a, s * b, s * c) - k).abs() <= 1e-12 * k);
    }

    #[test]
    fn kappa_parameterisations_match(zeta in 0.2..40.0f64) {
        prop_assert!((kappa_parameterised(zeta, RatioMode::Equal).unwrap() - kappa_exact(1.0, zeta, zeta)).abs() < 1e-14);
        prop_assert!((kappa_parameterised(zeta, RatioMode::Half).unwrap() - kappa_exact(1.0, zeta, 0.5 * zeta)).abs() < 1e-14);
    }

    #[test]
    fn stability_depth_identity(v in 50.0..1000.0f64, mhz in 10.0..120.0f64, amu in 6.0..250.0f64,
                                a in 20.0..150.0f64, b in 20.0..600.0f64, c in 20.0..600.0f64, h in 20.0..200.0f64) {
        let ion = IonSpecies::from_amu(amu, 1.0).unwrap();
        let d = RfDrive::new(v, angular(mhz * 1e6)).unwrap();
        let k = kappa_exact(a, b, c);
        let q = stability_q(&d, &ion, h * UM).unwrap();
        let lhs = depth_from_q(v, k, q, &ion).unwrap();
        let rhs = trap_depth_analytic(h * UM, k, &d, &ion).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }
}

fn model(design: Design, v_rf: f64) -> (TrapLayout, IonSpecies, ForceModel) {
    let layout = TrapLayout::example(design);
    let ion = IonSpecies::ytterbium_171();
    let m = ForceModel::new(&layout, &RfDrive::new(v_rf, angular(55e6)).unwrap(), &ion).unwrap();
    (layout, ion, m)
}

/// Half separation from the on-axis force balance `q dphi/dz = q^2 / (4 pi eps0 (2 z)^2)`,
/// bisected between the wedge centre and the first turning point.
fn force_balance_half_separation(layout: &TrapLayout, ion: &IonSpecies, v: &VoltageSet) -> f64 {
    let h = 1e-9;
    let residual = |z: f64| {
        let dphi = (axial_potential(layout, v, z + h) - axial_potential(layout, v, z - h)) / (2.0 * h);
        dphi - ion.charge / (4.0 * core::f64::consts::PI * VACUUM_PERMITTIVITY * 4.0 * z * z)
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
    0.5 * (lo + hi)
}

#[test]
fn two_ion_equilibrium_matches_force_balance() {
    for (design, v_rf, v) in [
        (Design::OuterSegmented, 450.0, VoltageSet::new(30.0, -34.0, 0.0)),
        (Design::CentreSegmented, 500.0, VoltageSet::new(8.0, 0.0, 0.0)),
        (Design::CentreSegmented, 500.0, VoltageSet::new(8.0, 4.0, -3.8)),
    ] {
        let (layout, ion, m) = model(design, v_rf);
        let eq = equilibrium_for(&layout, &m, &ion, &v, 2).unwrap();
        let oracle = force_balance_half_separation(&layout, &ion, &v);
        assert_relative_eq!(eq[1][2], oracle, max_relative = 5e-3);
        assert_relative_eq!(eq[0][2], -eq[1][2], max_relative = 1e-9);
    }
}

/// Largest energy excursion over a static run, relative to the total energy
/// (potential referenced to grounded electrodes) and to the excitation above
/// the equilibrium.
fn static_drift(tol: &Tolerances) -> (f64, f64) {
    let (layout, ion, m) = model(Design::CentreSegmented, 500.0);
    let v = VoltageSet::new(8.0, 0.0, 0.0);
    let eq = equilibrium_for(&layout, &m, &ion, &v, 1).unwrap();
    let e_min = m.potential(&eq, &v);
    let mut start = eq.clone();
    start[0][2] += 1.0 * UM;
    let state = IonState::at_rest(&start).unwrap();
    let e0 = m.potential(&start, &v);
    // 100 axial periods at about 1.07 MHz
    let w = Waveform::new(v, v, RampProfile::new(ProfileKind::Tanh, 4.0, 100.0 / 1.07e6).unwrap());
    let traj = integrate(&m, &w, &state, tol).unwrap();
    let mut worst = 0.0_f64;
    for s in &traj.states {
        let e = m.potential(s.positions(), &v) + s.kinetic(m.mass()).iter().take(s.n).sum::<f64>();
        worst = worst.max((e - e0).abs());
    }
    (worst / e0.abs(), worst / (e0 - e_min))
}

#[test]
fn static_single_ion_conserves_energy() {
    let (total, _) = static_drift(&Tolerances::default());
    assert!(total < 1e-6, "relative drift {total:e}");
}

#[test]
fn excitation_energy_is_conserved_once_the_absolute_tolerance_resolves_it() {
    // 1 um of motion is only 1e6 default absolute tolerances
    let (_, excitation) = static_drift(&Tolerances { atol: 1e-16, rtol: 1e-12, ..Tolerances::default() });
    assert!(excitation < 1e-6, "relative drift {excitation:e}");
}
