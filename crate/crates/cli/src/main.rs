//! `sensbound`: sensitivity indices, log-sensitivity integrals and
//! robustness bounds for feedback loops with dead time.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sensbound::casebook::{
    compensate_loop, load_case, run_case, sweep_model, CaseConfig, CaseDefinition, CaseReport,
    SingularChoice,
};
use sensbound::indices::SweepSamples;
use sensbound::report::{
    bounds_csv, integrals_csv, load_case_file, mismatch_csv, sweep_csv, text_report, to_json,
    write_atomic, TextSections,
};
use sensbound::shaping::{make_sensitivity, SingularPoint};
use sensbound::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "sensbound",
    version,
    about = "Sensitivity bounds for feedback loops with dead time"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Indices, integrals, bounds and mismatch study.
    Analyze(Common),
    /// Frequency sweep of |g(jw)| with the Poisson kernel weight.
    Sweep(Common),
    /// Poisson and Bode integral checks.
    Integral {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Kind::Both)]
        kind: Kind,
    },
    /// Weighted and unweighted lower bounds on ln s_max.
    Bounds(Common),
    /// Peak sensitivity under plant mismatch.
    Mismatch(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Poisson,
    Bode,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Built-in case: foipdt, cstr or sopdt.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    case: Option<String>,
    /// Case file.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Analyze only this controller.
    #[arg(long)]
    controller: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write artifacts into this directory instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation frequency for the Bode bound (rad/s).
    #[arg(long = "omega-l")]
    omega_l: Option<f64>,
    /// Explicit real singular point.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Mismatch level in percent; repeatable.
    #[arg(long, value_delimiter = ',')]
    pct: Vec<f64>,
    /// Add the all-pass compensated loop.
    #[arg(long)]
    compensate: bool,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

/// Everything one invocation needs.
#[derive(Debug, Clone)]
struct RunConfig {
    case: CaseDefinition,
    case_cfg: CaseConfig,
    format: Format,
    out: Option<PathBuf>,
}

impl RunConfig {
    fn from_common(c: &Common) -> Result<Self> {
        let case = match (&c.case, &c.file) {
            (Some(name), None) => load_case(name)?,
            (None, Some(path)) => load_case_file(path)?,
            _ => {
                return Err(Error::InvalidArgument(
                    "give exactly one of --case or --file".into(),
                ))
            }
        };
        let mut cfg = CaseConfig {
            controller: c.controller.clone(),
            omega_l: c.omega_l,
            ..CaseConfig::default()
        };
        if let Some(k) = &c.controller {
            case.controller(k)?;
        }
        if let Some(sigma) = c.sigma {
            SingularPoint::explicit(sigma, 0.0)?;
            cfg.singular_point = Some(SingularChoice::Explicit { sigma, eta: 0.0 });
        }
        if !c.pct.is_empty() {
            cfg.mismatch_pcts = Some(c.pct.clone());
        }
        if c.compensate {
            cfg.compensate = Some(true);
        }
        if let Some(t) = c.tol {
            cfg.quad.abs_tol = t;
        }
        cfg.quad.validate()?;
        Ok(Self {
            case,
            case_cfg: cfg,
            format: c.format,
            out: c.out.clone(),
        })
    }
}

/// Writes each artifact to `--out` or concatenates them to stdout.
fn emit(cfg: &RunConfig, artifacts: Vec<(String, String)>) -> Result<()> {
    match &cfg.out {
        Some(dir) => {
            for (name, body) in artifacts {
                let path = dir.join(name);
                write_atomic(&path, &body)?;
                println!("{}", path.display());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            for (_, body) in artifacts.into_iter().take(if cfg.format == Format::Csv {
                1
            } else {
                usize::MAX
            }) {
                match out.write_all(body.as_bytes()) {
                    // a closed pipe (`| head`) is not an error
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
                    r => r.map_err(|e| Error::InvalidArgument(format!("stdout: {e}")))?,
                }
            }
        }
    }
    Ok(())
}

fn artifact(cfg: &RunConfig, stem: &str, body: String) -> (String, String) {
    (
        format!("{}_{stem}.{}", cfg.case.name, cfg.format.ext()),
        body,
    )
}

#[derive(Serialize)]
struct SweepData<'a> {
    case: &'a str,
    controller: &'a str,
    singular_point: SingularPoint,
    samples: &'a SweepSamples,
}

/// Sweeps of the selected loops (plus the compensated one when asked).
fn loop_sweeps(cfg: &RunConfig) -> Result<Vec<(String, SingularPoint, SweepSamples)>> {
    let c = &cfg.case;
    let plant = c.plant.to_tf()?;
    let choice = cfg.case_cfg.singular_point.unwrap_or(c.singular_point);
    let mut loops = Vec::new();
    for ctrl in &c.controllers {
        if cfg
            .case_cfg
            .controller
            .as_deref()
            .is_some_and(|k| k != ctrl.key)
        {
            continue;
        }
        loops.push((ctrl.key.clone(), ctrl.tf.series(&plant)));
    }
    if cfg.case_cfg.compensate.unwrap_or(c.compensate) {
        let key = c
            .mismatch_controller
            .clone()
            .unwrap_or_else(|| c.controllers[0].key.clone());
        let g = c.open_loop(&key)?;
        loops.push((
            format!("{key}_compensated"),
            compensate_loop(&g, &cfg.case_cfg.shaping)?,
        ));
    }
    loops
        .into_iter()
        .map(|(key, g)| {
            let m = make_sensitivity(g, &cfg.case_cfg.shaping)?;
            let sp = choice.resolve(&m)?;
            let s = sweep_model(&m, &cfg.case_cfg)?;
            Ok((key, sp, s))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e: Error| e.context(format!("case `{}`", c.name)))
}

fn sweep_artifacts(cfg: &RunConfig) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (key, sp, s) in loop_sweeps(cfg)? {
        let body = match cfg.format {
            Format::Csv => sweep_csv(&s, &sp)?,
            Format::Json => to_json(
                "sweep",
                &SweepData {
                    case: &cfg.case.name,
                    controller: &key,
                    singular_point: sp,
                    samples: &s,
                },
            )?,
            Format::Text => {
                let mut t = format!("sweep {} / {key} ({} points)\n", cfg.case.name, s.len());
                t.push_str(&format!(
                    "{:>14} {:>14} {:>14} {:>14}\n",
                    "omega", "mag", "log_mag", "kernel_weight"
                ));
                for i in 0..s.len() {
                    t.push_str(&format!(
                        "{:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}\n",
                        s.omegas[i],
                        s.mags[i],
                        s.logs[i],
                        sensbound::report::kernel_weight(s.omegas[i], &sp)
                    ));
                }
                t
            }
        };
        out.push(artifact(cfg, &format!("{key}_sweep"), body));
    }
    Ok(out)
}

/// Exit status 2 when a requested bound was inapplicable.
fn status(report: &CaseReport) -> ExitCode {
    if report.any_condition_not_met() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze(c) => {
            let cfg = RunConfig::from_common(&c)?;
            let report = run_case(&cfg.case, &cfg.case_cfg)?;
            let artifacts = match cfg.format {
                Format::Text => vec![artifact(
                    &cfg,
                    "report",
                    text_report(&report, TextSections::ALL),
                )],
                Format::Json => vec![artifact(&cfg, "report", to_json("case_report", &report)?)],
                Format::Csv => {
                    let mut a = sweep_artifacts(&cfg)?;
                    a.push(artifact(&cfg, "bounds", bounds_csv(&report)?));
                    a.push(artifact(&cfg, "integrals", integrals_csv(&report)?));
                    if !report.mismatch.is_empty() {
                        a.push(artifact(&cfg, "mismatch", mismatch_csv(&report)?));
                    }
                    a
                }
            };
            emit(&cfg, artifacts)?;
            Ok(status(&report))
        }
        Command::Sweep(c) => {
            let cfg = RunConfig::from_common(&c)?;
            emit(&cfg, sweep_artifacts(&cfg)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Integral { common, kind } => {
            let mut cfg = RunConfig::from_common(&common)?;
            cfg.case_cfg.mismatch_pcts = Some(vec![]);
            let mut report = run_case(&cfg.case, &cfg.case_cfg)?;
            report.mismatch.clear();
            for l in report.loops.iter_mut().chain(report.compensated.iter_mut()) {
                l.bounds.clear();
                match kind {
                    Kind::Poisson => l.bode = None,
                    Kind::Bode => l.poisson = None,
                    Kind::Both => {}
                }
            }
            let body = match cfg.format {
                Format::Text => text_report(
                    &report,
                    TextSections {
                        indices: false,
                        integrals: true,
                        bounds: false,
                        mismatch: false,
                    },
                ),
                Format::Json => to_json("integrals", &report)?,
                Format::Csv => integrals_csv(&report)?,
            };
            emit(&cfg, vec![artifact(&cfg, "integrals", body)])?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds(c) => {
            let mut cfg = RunConfig::from_common(&c)?;
            cfg.case_cfg.skip_integrals = true;
            cfg.case_cfg.mismatch_pcts = Some(vec![]);
            let mut report = run_case(&cfg.case, &cfg.case_cfg)?;
            report.mismatch.clear();
            let body = match cfg.format {
                Format::Text => text_report(
                    &report,
                    TextSections {
                        indices: true,
                        integrals: false,
                        bounds: true,
                        mismatch: false,
                    },
                ),
                Format::Json => to_json("bounds", &report)?,
                Format::Csv => bounds_csv(&report)?,
            };
            emit(&cfg, vec![artifact(&cfg, "bounds", body)])?;
            Ok(status(&report))
        }
        Command::Mismatch(c) => {
            let mut cfg = RunConfig::from_common(&c)?;
            cfg.case_cfg.skip_integrals = true;
            if cfg.case_cfg.mismatch_pcts.is_none() && cfg.case.mismatch_pcts.is_empty() {
                return Err(Error::InvalidArgument(
                    "no mismatch levels: pass --pct".into(),
                ));
            }
            let report = run_case(&cfg.case, &cfg.case_cfg)?;
            let body = match cfg.format {
                Format::Text => {
                    let mut r = report.clone();
                    r.loops.clear();
                    r.compensated = None;
                    text_report(
                        &r,
                        TextSections {
                            indices: false,
                            integrals: false,
                            bounds: false,
                            mismatch: true,
                        },
                    )
                }
                Format::Json => to_json("mismatch", &report.mismatch)?,
                Format::Csv => mismatch_csv(&report)?,
            };
            emit(&cfg, vec![artifact(&cfg, "mismatch", body)])?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are hard errors; 2 is reserved for inapplicable bounds
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
