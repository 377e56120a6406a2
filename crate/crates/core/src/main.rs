//! `fnemit` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input-format error, 2 model or fit
//! error (including a failed breakdown check).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fnemit::config::{parse_config, Derive, RunConfig};
use fnemit::csv_io::{parse_iv_csv, write_fnplot_csv, write_iv_csv, write_table, ParsedCurve};
use fnemit::device::{breakdown_check, device_current, iv_sweep, turn_on_voltage, BreakdownReport};
use fnemit::environment::{
    ballistic_fraction, effective_work_function, emission_noise, mean_free_path, pressure_from_current,
};
use fnemit::extraction::{
    extract_beta, extract_work_function, fn_linear_fit, fn_transform, nonlinear_refine, turn_on_from_data,
    FitResult, ResidualSpace,
};
use fnemit::physics::local_field;
use fnemit::report::Report;
use fnemit::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "fnemit", version, about = "Field-emission microdiode simulation and F-N parameter extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file (`section.key = value` lines).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output file; defaults to `output.path` from the config, else stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate an I-V sweep and write it as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        v_min: Option<f64>,
        #[arg(long)]
        v_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Fit measured I-V data and write a JSON report.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Measured I-V CSV.
        #[arg(long, short)]
        data: PathBuf,
        #[arg(long, value_enum)]
        residual_space: Option<SpaceArg>,
        #[arg(long, value_enum)]
        derive: Option<DeriveArg>,
    },
    /// Convert I-V data into Fowler-Nordheim plot coordinates (CSV).
    Fnplot {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        data: PathBuf,
        /// Currents below this (A) are dropped.
        #[arg(long)]
        current_floor: Option<f64>,
    },
    /// Turn-on voltage from data, or from the configured device model.
    Turnon {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        data: Option<PathBuf>,
        /// Detection threshold in A.
        #[arg(long)]
        threshold: Option<f64>,
        /// Upper search bound for the model, V.
        #[arg(long)]
        v_max: Option<f64>,
    },
    /// Current-vs-pressure table, or the pressure implied by a measured current.
    Monitor {
        #[command(flatten)]
        common: Common,
        /// Bias voltage, V.
        #[arg(long)]
        voltage: f64,
        /// Measured current (A); switches to pressure inference.
        #[arg(long)]
        current: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        p_min: f64,
        #[arg(long, default_value_t = 1e3)]
        p_max: f64,
        #[arg(long, default_value_t = 19)]
        points: usize,
    },
    /// Breakdown design-rule report at one bias.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        voltage: f64,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SpaceArg {
    Log,
    Linear,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum DeriveArg {
    Beta,
    Phi,
    None,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            parse_config(&text)
        }
    }
}

fn load_curve(path: &Path) -> Result<ParsedCurve> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_iv_csv(file)
}

fn emit(common: &Common, cfg: &RunConfig, bytes: &[u8]) -> Result<()> {
    let target = common
        .output
        .clone()
        .or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    match target {
        Some(p) => fs::write(&p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

#[derive(Serialize)]
struct FitOutcome {
    data_points: usize,
    dropped_points: usize,
    effective_work_function_ev: f64,
    linear: FitResult,
    refined: Option<FitResult>,
}

#[derive(Serialize)]
struct TurnOnOutcome {
    source: &'static str,
    threshold_current: f64,
    turn_on_voltage: f64,
}

#[derive(Serialize)]
struct PressureOutcome {
    voltage: f64,
    measured_current: f64,
    vacuum_current: f64,
    pressure_pa: f64,
    mean_free_path_m: f64,
    ballistic_fraction: f64,
}

#[derive(Serialize)]
struct CheckOutcome {
    #[serde(flatten)]
    report: BreakdownReport,
    enhancement_gamma: f64,
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Simulate {
            common,
            v_min,
            v_max,
            steps,
        } => {
            let mut cfg = load_config(common.config.as_deref())?;
            cfg.sweep.v_min = v_min.unwrap_or(cfg.sweep.v_min);
            cfg.sweep.v_max = v_max.unwrap_or(cfg.sweep.v_max);
            cfg.sweep.steps = steps.unwrap_or(cfg.sweep.steps);
            let s = &cfg.sweep;
            let curve = iv_sweep(&cfg.geometry, &cfg.material, &cfg.environment, s.v_min, s.v_max, s.steps)?;
            let curve = emission_noise(&cfg.environment, &curve);
            warn_all(&cfg.environment.warnings());
            emit(&common, &cfg, &write_iv_csv(&curve))?;
        }

        Command::Fit {
            common,
            data,
            residual_space,
            derive,
        } => {
            let mut cfg = load_config(common.config.as_deref())?;
            if let Some(s) = residual_space {
                cfg.fit.refine.residual_space = match s {
                    SpaceArg::Log => ResidualSpace::Log,
                    SpaceArg::Linear => ResidualSpace::Linear,
                };
            }
            if let Some(d) = derive {
                cfg.fit.derive = match d {
                    DeriveArg::Beta => Derive::Beta,
                    DeriveArg::Phi => Derive::Phi,
                    DeriveArg::None => Derive::None,
                };
            }
            let parsed = load_curve(&data)?;
            let mut warnings = parsed.warnings.clone();
            let transform = fn_transform(&parsed.curve, cfg.fit.refine.current_floor)?;
            if transform.dropped > 0 {
                warnings.push(format!(
                    "{} samples dropped (V <= 0, I <= 0 or below the current floor)",
                    transform.dropped
                ));
            }
            let mut linear = fn_linear_fit(&transform.points)?;
            let mut refined = if transform.points.len() >= 3 {
                Some(nonlinear_refine(
                    &parsed.curve,
                    (linear.prefactor_c, linear.slope_b),
                    &cfg.fit.refine,
                )?)
            } else {
                warnings.push("only 2 usable points: nonlinear refinement skipped".into());
                None
            };
            let phi_eff = effective_work_function(&cfg.material, &cfg.environment)?;
            let pinned = cfg.material.with_work_function(phi_eff);
            for fit in std::iter::once(&mut linear).chain(refined.as_mut()) {
                match cfg.fit.derive {
                    Derive::Beta => fit.extracted_beta = Some(extract_beta(fit, &pinned)?),
                    Derive::Phi => fit.extracted_phi = Some(extract_work_function(fit, &cfg.geometry)?),
                    Derive::None => {}
                }
            }
            let outcome = FitOutcome {
                data_points: parsed.curve.len(),
                dropped_points: transform.dropped,
                effective_work_function_ev: phi_eff,
                linear,
                refined,
            };
            warn_all(&warnings);
            emit(&common, &cfg, &Report::new("fit", &cfg, outcome, warnings).to_bytes())?;
        }

        Command::Fnplot {
            common,
            data,
            current_floor,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let parsed = load_curve(&data)?;
            let floor = current_floor.unwrap_or(cfg.fit.refine.current_floor);
            let transform = fn_transform(&parsed.curve, floor)?;
            warn_all(&parsed.warnings);
            if transform.dropped > 0 {
                eprintln!("warning: {} samples dropped", transform.dropped);
            }
            emit(&common, &cfg, &write_fnplot_csv(&transform.points))?;
        }

        Command::Turnon {
            common,
            data,
            threshold,
            v_max,
        } => {
            let mut cfg = load_config(common.config.as_deref())?;
            if let Some(t) = threshold {
                cfg.fit.turn_on.threshold_current = t;
            }
            if let Some(v) = v_max {
                cfg.fit.turn_on.v_max = v;
            }
            let mut warnings = Vec::new();
            let (source, voltage) = match data {
                Some(path) => {
                    let parsed = load_curve(&path)?;
                    warnings.extend(parsed.warnings);
                    ("data", turn_on_from_data(&parsed.curve, cfg.fit.turn_on.threshold_current)?)
                }
                None => (
                    "model",
                    turn_on_voltage(&cfg.geometry, &cfg.material, &cfg.environment, &cfg.fit.turn_on)?,
                ),
            };
            let outcome = TurnOnOutcome {
                source,
                threshold_current: cfg.fit.turn_on.threshold_current,
                turn_on_voltage: voltage,
            };
            warn_all(&warnings);
            emit(&common, &cfg, &Report::new("turnon", &cfg, outcome, warnings).to_bytes())?;
        }

        Command::Monitor {
            common,
            voltage,
            current,
            p_min,
            p_max,
            points,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let mut env = cfg.environment.clone();
            env.attenuation = true;
            match current {
                Some(measured) => {
                    let pressure =
                        pressure_from_current(&cfg.geometry, &cfg.material, &env, measured, voltage)?;
                    let at_p = env.with_pressure(pressure);
                    let outcome = PressureOutcome {
                        voltage,
                        measured_current: measured,
                        vacuum_current: device_current(&cfg.geometry, &cfg.material, &env.with_pressure(0.0), voltage)?,
                        pressure_pa: pressure,
                        mean_free_path_m: mean_free_path(&at_p),
                        ballistic_fraction: ballistic_fraction(&at_p, cfg.geometry.gap_d)?,
                    };
                    let warnings = at_p.warnings();
                    warn_all(&warnings);
                    emit(&common, &cfg, &Report::new("monitor", &cfg, outcome, warnings).to_bytes())?;
                }
                None => {
                    if !(p_min > 0.0 && p_max > p_min && points >= 2) {
                        return Err(Error::Config {
                            line: 0,
                            column: 0,
                            message: "monitor sweep needs 0 < p_min < p_max and points >= 2".into(),
                        });
                    }
                    let (lo, hi) = (p_min.log10(), p_max.log10());
                    let rows = (0..points)
                        .map(|i| {
                            let p = if i == points - 1 {
                                p_max
                            } else {
                                10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64)
                            };
                            let e = env.with_pressure(p);
                            Ok(vec![
                                p,
                                device_current(&cfg.geometry, &cfg.material, &e, voltage)?,
                                ballistic_fraction(&e, cfg.geometry.gap_d)?,
                                mean_free_path(&e),
                            ])
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let header = ["pressure_Pa", "current_A", "ballistic_fraction", "mean_free_path_m"];
                    emit(&common, &cfg, &write_table(&header, rows))?;
                }
            }
        }

        Command::Check { common, voltage } => {
            let cfg = load_config(common.config.as_deref())?;
            let report = breakdown_check(&cfg.geometry, voltage)?;
            let outcome = CheckOutcome {
                report,
                enhancement_gamma: local_field(&cfg.geometry, voltage)?.enhancement,
            };
            let warnings = if report.passed {
                Vec::new()
            } else {
                vec![format!(
                    "local field {:.3e} V/m exceeds breakdown limit {:.3e} V/m",
                    report.field, report.limit
                )]
            };
            warn_all(&warnings);
            emit(&common, &cfg, &Report::new("check", &cfg, outcome, warnings).to_bytes())?;
            if !report.passed {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
