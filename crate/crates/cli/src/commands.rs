//! The command verbs. Each writes its files into the output directory along
//! with the effective config.

use rayon::prelude::*;
use serde_json::{json, Value};
use trapforge_core::axial::{
    axial_frequency_regime, fit_axial, optimize_segment_width, optimize_wedge_ratio, unit_beta, AxialRegime, QuarticFit,
    SEGMENT_WIDTH_RANGE, WEDGE_RATIO_RANGE,
};
use trapforge_core::constraints::{check_budget, stability_q, BudgetReport};
use trapforge_core::geometry::{kappa_parameterised, optimize_zeta, radial_modes, rf_node_numeric, ZetaOptimum, ZETA_RANGE};
use trapforge_core::layout::{FiveWireParams, RatioMode, SegmentWidths, TrapLayout};
use trapforge_core::shuttling::run::{simulate_in, RunContext};
use trapforge_core::shuttling::{crossing_report, CrossingReport, RampProfile, SeparationRun, SweepPoint, Waveform};
use trapforge_core::units::{cyclic, MICROMETRE};
use trapforge_core::Error;

use crate::config::{DesignName, Model, RunConfig, WidthsConfig};
use crate::error::CliError;
use crate::output::{jnum, num, OutDir};
use crate::thermal::thermal_state;

/// Shared state of one invocation.
pub struct Session {
    pub config: RunConfig,
    pub out: OutDir,
    pub quiet: bool,
}

impl Session {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn write_config(&self, cfg: &RunConfig) -> Result<(), CliError> {
        self.out.text("effective_config.json", &cfg.to_json())
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

fn pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var("TRAPFORGE_THREADS") {
        Ok(s) => s.trim().parse::<usize>().map_err(|_| CliError::Config(format!("TRAPFORGE_THREADS `{s}` is not a count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Numerical(e.to_string()))
}

fn zeta_json(z: &ZetaOptimum) -> Value {
    json!({"zeta": jnum(z.zeta), "kappa": jnum(z.kappa), "h_over_a": jnum(z.h_over_a)})
}

pub fn optimize_geometry(s: &Session) -> Result<(), CliError> {
    let cfg = s.config.clone().resolved();
    cfg.validate()?;
    s.write_config(&cfg)?;
    let equal = optimize_zeta(RatioMode::Equal)?;
    let half = optimize_zeta(RatioMode::Half)?;
    let rows = log_grid(ZETA_RANGE.0, ZETA_RANGE.1, 200).into_iter().map(|z| {
        vec![
            num(z),
            num(kappa_parameterised(z, RatioMode::Equal).unwrap_or(f64::NAN)),
            num(kappa_parameterised(z, RatioMode::Half).unwrap_or(f64::NAN)),
        ]
    });
    s.out.csv("kappa_curve.csv", &["zeta", "kappa_equal", "kappa_half"], rows)?;
    s.out.json("geometry_summary.json", &json!({"equal": zeta_json(&equal), "half": zeta_json(&half)}))?;
    s.note(format!(
        "equal rf widths: zeta* = {:.4}, kappa = {:.5}, h/a = {:.4}\nhalf rf widths:  zeta* = {:.4}, kappa = {:.5}, h/a = {:.4}",
        equal.zeta, equal.kappa, equal.h_over_a, half.zeta, half.kappa, half.h_over_a
    ));
    Ok(())
}

/// Equal-rf template at the optimal zeta with the configured rf separation
/// and gap; segment widths from the design's config.
fn width_template(cfg: &RunConfig, design: DesignName) -> Result<TrapLayout, CliError> {
    let c = cfg.clone().with_design(design).resolved();
    let um = MICROMETRE;
    let zeta = optimize_zeta(RatioMode::Equal)?.zeta;
    let five = FiveWireParams::equal(c.trap.a_um * um, zeta)?.with_gap(c.trap.gap_um * um)?;
    let w = c.trap.widths_um.expect("resolved");
    let widths = SegmentWidths { endcap: w.endcap * um, wedge: w.wedge * um, control: w.control * um };
    Ok(TrapLayout::new(five, design.design(), widths, c.trap.segments)?)
}

pub fn optimize_axial(s: &Session, designs: &[DesignName]) -> Result<(), CliError> {
    let model = s.config.model()?;
    s.write_config(&model.config)?;
    let ion = model.ion;
    let results = pool()?.install(|| {
        designs
            .par_iter()
            .map(|&d| -> Result<_, CliError> {
                let template = width_template(&s.config, d)?;
                let wedge = optimize_wedge_ratio(&template, d.design(), &ion)?;
                let width = optimize_segment_width(&template, d.design(), &ion)?;
                let (e, c, a) = (template.widths.endcap, template.widths.control, template.five_wire.a);
                let wedge_curve: Vec<(f64, f64)> = log_grid(WEDGE_RATIO_RANGE.0, WEDGE_RATIO_RANGE.1, 96)
                    .into_iter()
                    .map(|r| {
                        let b = template
                            .with_widths(SegmentWidths { endcap: e, wedge: r * e, control: c })
                            .map_or(f64::NAN, |l| unit_beta(&l, &ion));
                        (r, b)
                    })
                    .collect();
                let width_curve: Vec<(f64, f64)> = log_grid(SEGMENT_WIDTH_RANGE.0, SEGMENT_WIDTH_RANGE.1, 96)
                    .into_iter()
                    .map(|r| (r, template.with_widths(SegmentWidths::uniform(r * a)).map_or(f64::NAN, |l| unit_beta(&l, &ion))))
                    .collect();
                Ok((d, template, wedge, width, wedge_curve, width_curve))
            })
            .collect::<Vec<_>>()
    });
    let mut wedge_rows = Vec::new();
    let mut width_rows = Vec::new();
    let mut summary = serde_json::Map::new();
    for r in results {
        let (d, template, wedge, width, wedge_curve, width_curve) = r?;
        for (x, b) in wedge_curve {
            wedge_rows.push(vec![d.as_str().to_string(), num(x), num(b)]);
        }
        for (x, b) in width_curve {
            width_rows.push(vec![d.as_str().to_string(), num(x), num(b)]);
        }
        summary.insert(
            d.as_str().into(),
            json!({
                "template": {
                    "a_um": jnum(template.five_wire.a / MICROMETRE),
                    "zeta": jnum(template.five_wire.zeta()),
                    "endcap_um": jnum(template.widths.endcap / MICROMETRE),
                    "control_um": jnum(template.widths.control / MICROMETRE),
                },
                "wedge_ratio": {"w_over_e": jnum(wedge.ratio), "beta_V_per_m4": jnum(wedge.beta)},
                "segment_width": {"w_over_a": jnum(width.ratio), "w_um": jnum(width.ratio * template.five_wire.a / MICROMETRE), "beta_V_per_m4": jnum(width.beta)},
            }),
        );
        s.note(format!("{}: W/E* = {:.4}, W*/a = {:.4} (beta {:.3e} V/m^4)", d.as_str(), wedge.ratio, width.ratio, width.beta));
    }
    s.out.csv("beta_vs_wedge_ratio.csv", &["design", "w_over_e", "beta_V_per_m4"], wedge_rows)?;
    s.out.csv("beta_vs_segment_width.csv", &["design", "w_over_a", "beta_V_per_m4"], width_rows)?;
    s.out.json("axial_summary.json", &Value::Object(summary))?;
    Ok(())
}

fn regime_name(r: AxialRegime) -> &'static str {
    match r {
        AxialRegime::Harmonic => "harmonic",
        AxialRegime::Quartic => "quartic",
        AxialRegime::DoubleWell => "double_well",
    }
}

fn budget_json(r: &BudgetReport) -> Value {
    let checks: Vec<Value> = r
        .checks
        .iter()
        .map(|c| json!({"name": c.name, "value": jnum(c.value), "limit": jnum(c.limit), "margin": jnum(c.margin), "pass": c.pass}))
        .collect();
    json!({"pass": r.pass(), "checks": checks, "worst_pair": r.worst_pair.map(|(i, j)| vec![i, j])})
}

fn fit_json(fit: &QuarticFit) -> Value {
    json!({
        "phi0_V": jnum(fit.phi0),
        "alpha_V_per_m2": jnum(fit.alpha),
        "beta_V_per_m4": jnum(fit.beta),
        "window_um": jnum(fit.window / MICROMETRE),
        "residual_rms_V": jnum(fit.residual_rms),
        "span_V": jnum(fit.span),
        "faithful": fit.is_faithful(),
        "condition": jnum(fit.condition),
        "well_count": fit.well_count,
        "well_positions_um": fit.well_positions.iter().map(|z| jnum(z / MICROMETRE)).collect::<Vec<_>>(),
    })
}

fn analysis_json(m: &Model) -> Result<Value, CliError> {
    let node = rf_node_numeric(&m.layout, &m.drive, &m.ion)?;
    let fit = fit_axial(&m.layout, &m.analysis, &m.ion)?;
    let axial = match axial_frequency_regime(&fit, &m.ion) {
        Ok((w, r)) => json!({"omega_z_rad_s": jnum(w), "f_z_hz": jnum(cyclic(w)), "regime": regime_name(r)}),
        Err(e) => json!({"error": e.to_string()}),
    };
    let radial = match radial_modes(&m.layout, &m.drive, &m.ion, &m.analysis) {
        Ok(r) => json!({
            "omega_x_rad_s": jnum(r.omega_x), "omega_y_rad_s": jnum(r.omega_y),
            "f_x_hz": jnum(cyclic(r.omega_x)), "f_y_hz": jnum(cyclic(r.omega_y)), "angle_rad": jnum(r.angle),
        }),
        Err(e @ Error::DegenerateModes) => json!({"error": e.to_string()}),
        Err(e) => return Err(e.into()),
    };
    let budget = check_budget(&m.layout, &m.drive, &m.ion, &m.analysis, &m.budget)?;
    Ok(json!({
        "design": m.config.trap.design.as_str(),
        "voltages": {"endcap": m.analysis.endcap, "wedge": m.analysis.wedge, "control": m.analysis.control, "other": m.analysis.other},
        "rf_node": {"x0_um": jnum(node.x0 / MICROMETRE), "h_um": jnum(node.h / MICROMETRE)},
        "depth_eV": jnum(node.depth),
        "escape_point_um": [jnum(node.escape_point[0] / MICROMETRE), jnum(node.escape_point[1] / MICROMETRE), jnum(node.escape_point[2] / MICROMETRE)],
        "rf_radial": {"omega_x_rad_s": jnum(node.omega_x), "omega_y_rad_s": jnum(node.omega_y), "f_x_hz": jnum(cyclic(node.omega_x)), "f_y_hz": jnum(cyclic(node.omega_y))},
        "radial_modes": radial,
        "stability_q": jnum(stability_q(&m.drive, &m.ion, node.h)?),
        "axial_fit": fit_json(&fit),
        "axial": axial,
        "budget": budget_json(&budget),
    }))
}

pub fn analyze(s: &Session) -> Result<(), CliError> {
    let m = s.config.model()?;
    s.write_config(&m.config)?;
    let v = analysis_json(&m)?;
    s.out.json("analysis.json", &v)?;
    s.note(format!(
        "{}: h = {} um, depth = {} eV, f_z = {} Hz",
        m.config.trap.design.as_str(),
        v["rf_node"]["h_um"],
        v["depth_eV"],
        v["axial"]["f_z_hz"]
    ));
    Ok(())
}

struct RunSpec {
    index: usize,
    steepness: f64,
    duration: f64,
}

fn ion_lost_message(e: &Error, w: &Waveform, index: usize) -> String {
    let mut msg = format!("run {index}: {e}");
    let time = match e {
        Error::IonLost { time, .. } | Error::IonsCoincide { time } => Some(*time),
        _ => None,
    };
    if let Some(t) = time {
        let v = w.at_fraction(w.profile.fraction(t.clamp(0.0, w.duration())));
        msg.push_str(&format!(" (endcap {:.4} V, wedge {:.4} V, control {:.4} V)", v.endcap, v.wedge, v.control));
    }
    msg
}

fn trajectory_rows(run: &SeparationRun, mass: f64, stride: usize) -> Vec<Vec<String>> {
    let traj = &run.trajectory;
    (0..traj.times.len())
        .step_by(stride)
        .chain(std::iter::once(traj.times.len() - 1))
        .scan(None, |last, k| {
            // the final sample is always written, once
            if *last == Some(k) {
                return Some(None);
            }
            *last = Some(k);
            Some(Some(k))
        })
        .flatten()
        .map(|k| {
            let st = &traj.states[k];
            let t = traj.times[k];
            let ke = st.kinetic(mass);
            let v = run.waveform.at_fraction(run.waveform.profile.fraction(t));
            let p = |i: usize, j: usize| num(st.pos[i][j]);
            vec![
                num(t),
                p(0, 2),
                p(0, 1),
                p(0, 0),
                p(1, 2),
                p(1, 1),
                p(1, 0),
                num(ke[0]),
                num(ke[1]),
                num(run.omega_trace[k].1),
                num(v.wedge),
                num(v.control),
            ]
        })
        .collect()
}

fn run_row(spec: &RunSpec, kind: &str, r: &Result<SeparationRun, String>) -> Vec<String> {
    let mut row = vec![spec.index.to_string(), kind.to_string(), num(spec.steepness), num(spec.duration)];
    match r {
        Ok(r) => {
            row.extend(
                [
                    r.omega_min,
                    r.omega_min_time,
                    r.omega_start,
                    r.omega_end,
                    r.n_s,
                    r.n_an,
                    r.n_an_band.0,
                    r.n_an_band.1,
                    r.n_total,
                    r.min_depth,
                ]
                .map(num),
            );
            row.push(String::new());
        }
        Err(e) => {
            row.extend(std::iter::repeat(String::new()).take(10));
            row.push(e.clone());
        }
    }
    row
}

const RUN_HEADER: [&str; 15] = [
    "index",
    "profile",
    "steepness",
    "duration_s",
    "omega_min_rad_s",
    "omega_min_time_s",
    "omega_start_rad_s",
    "omega_end_rad_s",
    "n_s",
    "n_an",
    "n_an_low",
    "n_an_high",
    "n_total",
    "min_depth_eV",
    "error",
];

fn crossing_json(c: &CrossingReport) -> Value {
    let (t, n, err) = match &c.crossing {
        Ok(x) => (jnum(x.duration), jnum(x.n_total), Value::Null),
        Err(e) => (Value::Null, Value::Null, Value::String(e.to_string())),
    };
    json!({
        "profile": c.kind.name(),
        "steepness": jnum(c.steepness),
        "t_star_s": t,
        "n_total": n,
        "shuttle_exponent": c.shuttle_trend.map(|p| jnum(p.exponent)),
        "heating_exponent": c.heating_trend.map(|p| jnum(p.exponent)),
        "error": err,
    })
}

pub fn separate(s: &Session) -> Result<(), CliError> {
    let m = s.config.model()?;
    let cfg = &m.config;
    s.write_config(cfg)?;
    let sep = &cfg.separation;
    let kind = sep.profile.kind();
    let mut specs = Vec::new();
    for &n in &sep.steepness {
        for &d in &sep.durations_us {
            specs.push(RunSpec { index: specs.len(), steepness: n, duration: d / 1e6 });
        }
    }
    let ctx = RunContext::new(&m.layout, &m.drive, &m.ion, &m.start, &m.end, &m.settings)?;
    s.note(format!("{}: {} runs", cfg.trap.design.as_str(), specs.len()));
    let results: Vec<(Waveform, Result<SeparationRun, Error>)> = pool()?.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let profile = match RampProfile::new(kind, spec.steepness, spec.duration) {
                    Ok(p) => p,
                    Err(e) => {
                        let dummy = RampProfile::new(kind, 1.0, 1.0).expect("valid profile");
                        return (Waveform::new(m.start, m.end, dummy), Err(e));
                    }
                };
                let w = Waveform::new(m.start, m.end, profile);
                let initial = sep
                    .thermal
                    .as_ref()
                    .map(|th| thermal_state(&ctx.initial, m.ion.mass, th.temperature_k, cfg.seed, spec.index as u64));
                (w, simulate_in(&ctx, &w, initial.as_ref(), &m.settings))
            })
            .collect()
    });

    let mut first_error: Option<CliError> = None;
    let mut rows = Vec::new();
    let mut by_steepness: Vec<(f64, Vec<SweepPoint>)> = sep.steepness.iter().map(|&n| (n, Vec::new())).collect();
    let mut runs_json = Vec::new();
    for (spec, (w, r)) in specs.iter().zip(&results) {
        let shown = r.as_ref().map_err(|e| ion_lost_message(e, w, spec.index));
        match r {
            Ok(run) => {
                if cfg.output.emit_trajectory {
                    s.out.csv(
                        &format!("trajectory_{:03}.csv", spec.index),
                        &[
                            "t_s", "z1_m", "y1_m", "x1_m", "z2_m", "y2_m", "x2_m", "ke1_J", "ke2_J", "omega_z_rad_s",
                            "v_wedge_V", "v_control_V",
                        ],
                        trajectory_rows(run, m.ion.mass, cfg.output.trajectory_stride),
                    )?;
                }
                s.out.csv(
                    &format!("omega_trace_{:03}.csv", spec.index),
                    &["t_s", "omega_z_rad_s"],
                    run.omega_trace.iter().map(|&(t, w)| vec![num(t), num(w)]),
                )?;
                by_steepness[spec.index / sep.durations_us.len().max(1)].1.push(SweepPoint::from(run));
                runs_json.push(json!({
                    "index": spec.index, "profile": kind.name(), "steepness": jnum(spec.steepness), "duration_s": jnum(spec.duration),
                    "omega_min_rad_s": jnum(run.omega_min), "omega_min_time_s": jnum(run.omega_min_time),
                    "omega_start_rad_s": jnum(run.omega_start), "omega_end_rad_s": jnum(run.omega_end),
                    "n_s": jnum(run.n_s), "n_an": jnum(run.n_an), "n_an_band": [jnum(run.n_an_band.0), jnum(run.n_an_band.1)],
                    "n_total": jnum(run.n_total), "min_depth_eV": jnum(run.min_depth),
                }));
                s.note(format!(
                    "  N = {}, T = {} s: f_min = {:.4e} Hz, n_s = {:.4e}, n_an = {:.4e}",
                    spec.steepness,
                    spec.duration,
                    cyclic(run.omega_min),
                    run.n_s,
                    run.n_an
                ));
            }
            Err(e) => {
                let msg = shown.clone().unwrap_err();
                s.note(format!("  {msg}"));
                runs_json.push(json!({"index": spec.index, "steepness": jnum(spec.steepness), "duration_s": jnum(spec.duration), "error": msg}));
                if first_error.is_none() {
                    first_error = Some(match CliError::from(e.clone()) {
                        CliError::IonLost(_) => CliError::IonLost(msg),
                        CliError::NoTrap(_) => CliError::NoTrap(msg),
                        CliError::Config(_) => CliError::Config(msg),
                        CliError::Numerical(_) => CliError::Numerical(msg),
                    });
                }
            }
        }
        rows.push(run_row(spec, kind.name(), &shown.cloned()));
    }
    s.out.csv("runs.csv", &RUN_HEADER, rows)?;

    let reports: Vec<CrossingReport> =
        by_steepness.into_iter().filter(|(_, p)| p.len() >= 2).map(|(n, p)| crossing_report(kind, n, p)).collect();
    s.out.csv(
        "crossings.csv",
        &["profile", "steepness", "t_star_s", "n_total", "shuttle_exponent", "heating_exponent", "error"],
        reports.iter().map(|c| {
            let (t, n, e) = match &c.crossing {
                Ok(x) => (num(x.duration), num(x.n_total), String::new()),
                Err(e) => (String::new(), String::new(), e.to_string()),
            };
            let ex = |p: Option<trapforge_core::shuttling::sweep::PowerLaw>| p.map_or(String::new(), |p| num(p.exponent));
            vec![kind.name().into(), num(c.steepness), t, n, ex(c.shuttle_trend), ex(c.heating_trend), e]
        }),
    )?;

    let best = results
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .min_by(|a, b| a.n_total.total_cmp(&b.n_total));
    let best_crossing = reports
        .iter()
        .filter_map(|c| c.crossing.as_ref().ok())
        .min_by(|a, b| a.n_total.total_cmp(&b.n_total));
    let budget_start = check_budget(&m.layout, &m.drive, &m.ion, &m.start, &m.budget)?;
    let budget_end = check_budget(&m.layout, &m.drive, &m.ion, &m.end, &m.budget)?;
    let summary = json!({
        "design": cfg.trap.design.as_str(),
        "omega_min_rad_s": best.map(|r| jnum(r.omega_min)),
        "n_s": best.map(|r| jnum(r.n_s)),
        "n_an": best.map(|r| jnum(r.n_an)),
        "n_total": best.map(|r| jnum(r.n_total)),
        "best_duration_s": best.map(|r| jnum(r.waveform.duration())),
        "t_star_s": best_crossing.map(|c| jnum(c.duration)),
        "n_total_at_t_star": best_crossing.map(|c| jnum(c.n_total)),
        "min_depth_eV": best.map(|r| jnum(r.min_depth)),
        "budget": {
            "pass": budget_start.pass() && budget_end.pass(),
            "start": budget_json(&budget_start),
            "end": budget_json(&budget_end),
        },
        "runs": runs_json,
        "crossings": reports.iter().map(crossing_json).collect::<Vec<_>>(),
    });
    s.out.json("summary.json", &summary)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Parameters a sweep can vary.
pub const SWEEP_PARAMETERS: [&str; 10] =
    ["a_um", "b_um", "c_um", "gap_um", "width_um", "v_rf", "freq_mhz", "endcap_v", "wedge_v", "control_v"];

/// Config with one parameter set. `a_um` scales the whole geometry so the
/// trap keeps its shape; the voltage parameters set the analysis voltages.
pub fn with_parameter(cfg: &RunConfig, param: &str, value: f64) -> Result<RunConfig, CliError> {
    let mut c = cfg.clone().resolved();
    let t = &mut c.trap;
    match param {
        "a_um" => {
            let s = value / t.a_um;
            t.a_um = value;
            t.b_um *= s;
            t.c_um *= s;
            t.gap_um *= s;
            t.widths_um = t.widths_um.map(|w| WidthsConfig { endcap: w.endcap * s, wedge: w.wedge * s, control: w.control * s });
        }
        "b_um" => t.b_um = value,
        "c_um" => t.c_um = value,
        "gap_um" => t.gap_um = value,
        "width_um" => t.widths_um = Some(WidthsConfig { endcap: value, wedge: value, control: value }),
        "v_rf" => c.drive.v_rf = Some(value),
        "freq_mhz" => c.drive.freq_mhz = value,
        "endcap_v" | "wedge_v" | "control_v" => {
            let m = c.model()?;
            let mut v = m.analysis;
            match param {
                "endcap_v" => v.endcap = value,
                "wedge_v" => v.wedge = value,
                _ => v.control = value,
            }
            c.analyze.voltages = crate::config::VoltageChoice::Explicit(crate::config::VoltagesConfig {
                endcap: v.endcap,
                wedge: v.wedge,
                control: v.control,
                other: v.other,
            });
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown sweep parameter `{other}` (expected one of {})",
                SWEEP_PARAMETERS.join(", ")
            )))
        }
    }
    Ok(c)
}

const SWEEP_HEADER: [&str; 14] = [
    "parameter",
    "value",
    "design",
    "h_um",
    "depth_eV",
    "alpha_V_per_m2",
    "beta_V_per_m4",
    "omega_z_rad_s",
    "regime",
    "stability_q",
    "power_W",
    "max_adjacent_V",
    "budget_pass",
    "error",
];

fn sweep_point(cfg: &RunConfig, param: &str, value: f64, design: DesignName) -> Vec<String> {
    let mut row = vec![param.to_string(), num(value), design.as_str().to_string()];
    let result = (|| -> Result<Vec<String>, CliError> {
        let c = with_parameter(&cfg.clone().with_design(design), param, value)?;
        let m = c.model()?;
        let node = rf_node_numeric(&m.layout, &m.drive, &m.ion)?;
        let fit = fit_axial(&m.layout, &m.analysis, &m.ion)?;
        let (w, regime) = axial_frequency_regime(&fit, &m.ion)?;
        let b = check_budget(&m.layout, &m.drive, &m.ion, &m.analysis, &m.budget)?;
        let check = |name: &str| b.checks.iter().find(|c| c.name == name).map_or(f64::NAN, |c| c.value);
        Ok(vec![
            num(node.h / MICROMETRE),
            num(node.depth),
            num(fit.alpha),
            num(fit.beta),
            num(w),
            regime_name(regime).into(),
            num(check("stability_proxy_q")),
            num(check("power_dissipation_W")),
            num(check("adjacent_voltage_difference_V")),
            b.pass().to_string(),
            String::new(),
        ])
    })();
    match result {
        Ok(r) => row.extend(r),
        Err(e) => {
            row.extend(std::iter::repeat(String::new()).take(SWEEP_HEADER.len() - 4));
            row.push(e.to_string());
        }
    }
    row
}

pub fn sweep(s: &Session, param: &str, values: &[f64]) -> Result<(), CliError> {
    if !SWEEP_PARAMETERS.contains(&param) {
        return Err(CliError::Config(format!("unknown sweep parameter `{param}` (expected one of {})", SWEEP_PARAMETERS.join(", "))));
    }
    let cfg = s.config.clone().resolved();
    cfg.validate()?;
    let mut written = cfg.clone();
    written.sweep.parameter = param.to_string();
    written.sweep.values = values.to_vec();
    s.write_config(&written)?;
    let designs = cfg.sweep.designs.clone().expect("resolved");
    let jobs: Vec<(f64, DesignName)> = values.iter().flat_map(|&v| designs.iter().map(move |&d| (v, d))).collect();
    let rows: Vec<Vec<String>> = pool()?.install(|| jobs.par_iter().map(|&(v, d)| sweep_point(&s.config, param, v, d)).collect());
    let failed = rows.iter().filter(|r| !r[SWEEP_HEADER.len() - 1].is_empty()).count();
    s.out.csv("sweep.csv", &SWEEP_HEADER, rows)?;
    s.note(format!("{param}: {} points, {failed} failed", jobs.len()));
    Ok(())
}

/// Parse `lo:hi:n` into `n` evenly spaced values; `n = 0` is empty.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("range `{text}` is not lo:hi:n"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(bad());
    }
    Ok(match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use trapforge_core::layout::VoltageSet;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_range("1:3:0").unwrap().is_empty());
        assert_eq!(parse_range("5:9:1").unwrap(), vec![5.0]);
        assert!(parse_range("1:3").is_err());
        assert!(parse_range("a:3:2").is_err());
    }

    #[test]
    fn a_sweep_keeps_the_shape() {
        let base = RunConfig::default();
        let c = with_parameter(&base, "a_um", 120.0).unwrap();
        assert_eq!((c.trap.b_um, c.trap.c_um, c.trap.gap_um), (600.0, 300.0, 10.0));
        assert_eq!(c.trap.widths_um.unwrap().wedge, 440.0);
        let m = c.model().unwrap();
        let scaled = TrapLayout::example(trapforge_core::layout::Design::OuterSegmented).scaled(2.0);
        let (n, e) = (m.layout.node(), scaled.node());
        assert!((n.0 - e.0).abs() < 1e-15 && (n.1 - e.1).abs() < 1e-15);
        assert!((m.layout.widths.wedge - scaled.widths.wedge).abs() < 1e-15);
    }

    #[test]
    fn voltage_parameters_set_the_analysis_point() {
        let c = with_parameter(&RunConfig::default(), "wedge_v", 3.0).unwrap();
        assert_eq!(c.model().unwrap().analysis, VoltageSet::new(30.0, 3.0, 0.0));
        assert!(with_parameter(&RunConfig::default(), "colour", 1.0).is_err());
    }
}
