use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Session};
use crate::config::{DesignName, ProfileName, RunConfig};
use crate::error::CliError;
use crate::output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "trapforge", version, about = "Surface-electrode ion trap design and two-ion separation")]
pub struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for thermal initial conditions, overriding `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress progress messages.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimise the rf width ratio zeta for both rf width modes.
    OptimizeGeometry,
    /// Optimise the segment widths under the unit-voltage protocol.
    OptimizeAxial {
        /// Only this design; both when omitted.
        #[arg(long)]
        design: Option<DesignName>,
    },
    /// Static analysis of one operating point.
    Analyze {
        #[arg(long)]
        design: Option<DesignName>,
    },
    /// Simulate two-ion separations over a grid of steepness and duration.
    Separate {
        #[arg(long)]
        design: Option<DesignName>,
        /// Ramp durations in microseconds, comma separated.
        #[arg(long, value_delimiter = ',')]
        durations_us: Option<Vec<f64>>,
        /// Profile steepness values, comma separated.
        #[arg(long, value_delimiter = ',')]
        steepness: Option<Vec<f64>>,
        #[arg(long, value_parser = parse_profile)]
        profile: Option<ProfileName>,
    },
    /// Evaluate the static analysis over a range of one parameter.
    Sweep {
        /// One of a_um, b_um, c_um, gap_um, width_um, v_rf, freq_mhz,
        /// endcap_v, wedge_v, control_v.
        #[arg(long)]
        param: Option<String>,
        /// Evenly spaced values `lo:hi:n`.
        #[arg(long, conflicts_with = "values")]
        range: Option<String>,
        /// Explicit values, comma separated.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        design: Option<DesignName>,
    },
}

fn parse_profile(s: &str) -> Result<ProfileName, String> {
    match s {
        "tanh" => Ok(ProfileName::Tanh),
        "erf" => Ok(ProfileName::Erf),
        _ => Err(format!("unknown profile `{s}` (expected tanh or erf)")),
    }
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load(cli.config.as_ref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.to_string_lossy().into_owned();
    }
    let design = match &cli.command {
        Command::OptimizeAxial { design } | Command::Analyze { design } | Command::Separate { design, .. } => *design,
        Command::Sweep { design, .. } => *design,
        Command::OptimizeGeometry => None,
    };
    if let (Some(d), false) = (design, matches!(cli.command, Command::OptimizeAxial { .. })) {
        cfg = cfg.with_design(d);
        if matches!(cli.command, Command::Sweep { .. }) {
            cfg.sweep.designs = Some(vec![d]);
        }
    }
    match &cli.command {
        Command::Separate { durations_us, steepness, profile, .. } => {
            if let Some(d) = durations_us {
                cfg.separation.durations_us = d.clone();
            }
            if let Some(n) = steepness {
                cfg.separation.steepness = n.clone();
            }
            if let Some(p) = profile {
                cfg.separation.profile = *p;
            }
        }
        Command::Sweep { param, range, values, .. } => {
            if let Some(p) = param {
                cfg.sweep.parameter = p.clone();
            }
            if let Some(r) = range {
                cfg.sweep.values = commands::parse_range(r)?;
            } else if let Some(v) = values {
                cfg.sweep.values = v.clone();
            }
        }
        _ => {}
    }
    cfg.validate()?;
    let out = OutDir::create(std::path::Path::new(&cfg.output.directory))?;
    let session = Session { config: cfg, out, quiet: cli.quiet };
    match cli.command {
        Command::OptimizeGeometry => commands::optimize_geometry(&session),
        Command::OptimizeAxial { design } => {
            let designs = design.map_or_else(|| vec![DesignName::Outer, DesignName::Centre], |d| vec![d]);
            commands::optimize_axial(&session, &designs)
        }
        Command::Analyze { .. } => commands::analyze(&session),
        Command::Separate { .. } => commands::separate(&session),
        Command::Sweep { .. } => {
            let param = session.config.sweep.parameter.clone();
            let values = session.config.sweep.values.clone();
            commands::sweep(&session, &param, &values)
        }
    }
}

/// Run one invocation and return its process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
