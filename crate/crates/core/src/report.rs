//! Case files, report emitters (text, JSON, CSV) and atomic file output.
//!
//! Case file grammar (one construct per line, leading/trailing blanks ignored):
//!
//! ```text
//! file     = { line }
//! line     = blank | comment | section | entry
//! comment  = "#" { any }
//! section  = "[" ( "case" | "plant" | "analysis" | "controller" key ) "]"
//! entry    = key "=" value
//! list     = number { "," number }            (ascending powers of s)
//! factors  = [ factor { ";" factor } ]
//! factor   = "integrator" | "first_order(" c "," tau ")" | "second_order(" a2 "," a1 ")"
//! ```
//!
//! Keys per section are listed in the README.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::bounds::BoundVariant;
use crate::casebook::{
    BoundOutcome, CaseDefinition, CaseReport, ControllerDef, IndexSource, LoopReport,
    MismatchReference, MismatchRow, Outcome, PlantModel, ReferenceValues, SingularChoice,
};
use crate::error::{Error, Result};
use crate::indices::{SensitivityIndices, SweepSamples};
use crate::integral::IntegralResult;
use crate::lti::{Factor, FactoredPlant, PerturbationSpec, Polynomial, TransferFunction};
use crate::shaping::SingularPoint;

pub const SCHEMA_VERSION: u32 = 1;
pub const SWEEP_HEADER: [&str; 4] = ["omega", "mag", "log_mag", "kernel_weight"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Case,
    Plant,
    Controller(usize),
    Analysis,
}

#[derive(Default)]
struct PlantFields {
    num: Option<Vec<f64>>,
    den: Option<Vec<f64>>,
    gain: Option<f64>,
    zeros: Option<Vec<Factor>>,
    poles: Option<Vec<Factor>>,
    dead_time: Option<f64>,
}

struct ControllerFields {
    key: String,
    line: usize,
    label: Option<String>,
    num: Option<Vec<f64>>,
    den: Option<Vec<f64>>,
    split_omega: Option<f64>,
    reference: Option<ReferenceValues>,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, field: &str, v: &str) -> Result<f64> {
    let v = v.trim();
    let x: f64 = v
        .parse()
        .map_err(|_| perr(line, format!("{field}: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(perr(line, format!("{field}: value must be finite")));
    }
    Ok(x)
}

fn parse_opt_f64(line: usize, field: &str, v: &str) -> Result<Option<f64>> {
    if v.trim() == "none" {
        Ok(None)
    } else {
        parse_f64(line, field, v).map(Some)
    }
}

fn parse_list(line: usize, field: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(vec![]);
    }
    v.split(',').map(|x| parse_f64(line, field, x)).collect()
}

fn parse_bool(line: usize, field: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(perr(
            line,
            format!("{field}: expected true or false, got `{other}`"),
        )),
    }
}

fn call_args<'a>(
    line: usize,
    field: &str,
    item: &'a str,
    name: &str,
    n: usize,
) -> Result<Option<Vec<&'a str>>> {
    let Some(rest) = item.strip_prefix(name) else {
        return Ok(None);
    };
    let inner = rest
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| perr(line, format!("{field}: malformed `{item}`")))?;
    let args: Vec<&str> = inner.split(',').collect();
    if args.len() != n {
        return Err(perr(line, format!("{field}: `{name}` takes {n} arguments")));
    }
    Ok(Some(args))
}

fn parse_factors(line: usize, field: &str, v: &str) -> Result<Vec<Factor>> {
    let mut out = Vec::new();
    for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        if item == "integrator" {
            out.push(Factor::Integrator);
        } else if let Some(a) = call_args(line, field, item, "first_order", 2)? {
            out.push(Factor::FirstOrder {
                constant: parse_f64(line, field, a[0])?,
                tau: parse_f64(line, field, a[1])?,
            });
        } else if let Some(a) = call_args(line, field, item, "second_order", 2)? {
            out.push(Factor::SecondOrder {
                a2: parse_f64(line, field, a[0])?,
                a1: parse_f64(line, field, a[1])?,
            });
        } else {
            return Err(perr(line, format!("{field}: unknown factor `{item}`")));
        }
    }
    Ok(out)
}

fn parse_singular(line: usize, v: &str) -> Result<SingularChoice> {
    let v = v.trim();
    match v {
        "default" => return Ok(SingularChoice::Default),
        "open_loop_nmp_zero" => return Ok(SingularChoice::OpenLoopNmpZero),
        "delay_heuristic" => return Ok(SingularChoice::DelayHeuristic),
        _ => {}
    }
    match call_args(line, "singular_point", v, "explicit", 2)? {
        Some(a) => Ok(SingularChoice::Explicit {
            sigma: parse_f64(line, "singular_point", a[0])?,
            eta: parse_f64(line, "singular_point", a[1])?,
        }),
        None => Err(perr(
            line,
            format!("singular_point: unknown strategy `{v}`"),
        )),
    }
}

pub fn parse_variant(v: &str) -> Option<BoundVariant> {
    use BoundVariant::*;
    [
        PjArbitrary,
        PjAtNmpZero,
        PjStable,
        PjModified,
        Bode,
        BodeModified,
    ]
    .into_iter()
    .find(|b| b.name() == v.trim())
}

fn parse_reference(line: usize, v: &str) -> Result<ReferenceValues> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 6 {
        return Err(perr(
            line,
            "reference: expected s_max, omega_c, omega_ms, rho, pj, bode",
        ));
    }
    Ok(ReferenceValues {
        s_max: parse_f64(line, "reference", parts[0])?,
        omega_c: parse_f64(line, "reference", parts[1])?,
        omega_ms: parse_f64(line, "reference", parts[2])?,
        rho: parse_f64(line, "reference", parts[3])?,
        pj_bound: parse_opt_f64(line, "reference", parts[4])?,
        bode_bound: parse_opt_f64(line, "reference", parts[5])?,
    })
}

fn parse_mismatch_reference(line: usize, v: &str) -> Result<MismatchReference> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 5 {
        return Err(perr(
            line,
            "mismatch_reference: expected pct, s_max, omega_ms, compensated_s_max, compensated_omega_ms",
        ));
    }
    let f = "mismatch_reference";
    Ok(MismatchReference {
        pct: parse_f64(line, f, parts[0])?,
        s_max: parse_f64(line, f, parts[1])?,
        omega_ms: parse_f64(line, f, parts[2])?,
        compensated_s_max: parse_opt_f64(line, f, parts[3])?,
        compensated_omega_ms: parse_opt_f64(line, f, parts[4])?,
    })
}

fn set<T>(slot: &mut Option<T>, v: T, line: usize, key: &str) -> Result<()> {
    if slot.is_some() {
        return Err(perr(line, format!("duplicate key `{key}`")));
    }
    *slot = Some(v);
    Ok(())
}

fn poly(line: usize, field: &str, c: Vec<f64>) -> Result<Polynomial> {
    Polynomial::new(c).map_err(|e| perr(line, format!("{field}: {e}")))
}

/// Parses a case file.
pub fn parse_case(text: &str) -> Result<CaseDefinition> {
    let mut section = Section::None;
    let mut seen_sections: HashSet<String> = HashSet::new();
    let mut name = None;
    let mut title = None;
    let mut plant = PlantFields::default();
    let mut plant_line = 0;
    let mut controllers: Vec<ControllerFields> = Vec::new();
    let mut singular = None;
    let mut pj_variant = None;
    let mut omega_l = None;
    let mut mismatch_controller = None;
    let mut mismatch_pcts = None;
    let mut mismatch_profile = None;
    let mut compensate = None;
    let mut mismatch_reference = Vec::new();
    let mut notes = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if let Some(inner) = l.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| perr(line, "section header must end with `]`"))?
                .trim();
            let mut parts = inner.split_whitespace();
            let kind = parts.next().unwrap_or("");
            let arg = parts.next();
            if parts.next().is_some() {
                return Err(perr(line, format!("malformed section `[{inner}]`")));
            }
            section = match (kind, arg) {
                ("case", None) => Section::Case,
                ("plant", None) => {
                    plant_line = line;
                    Section::Plant
                }
                ("analysis", None) => Section::Analysis,
                ("controller", Some(key)) => {
                    controllers.push(ControllerFields {
                        key: key.to_string(),
                        line,
                        label: None,
                        num: None,
                        den: None,
                        split_omega: None,
                        reference: None,
                    });
                    Section::Controller(controllers.len() - 1)
                }
                ("controller", None) => return Err(perr(line, "controller section needs a key")),
                _ => return Err(perr(line, format!("unknown section `[{inner}]`"))),
            };
            if !seen_sections.insert(inner.split_whitespace().collect::<Vec<_>>().join(" ")) {
                return Err(perr(line, format!("duplicate section `[{inner}]`")));
            }
            continue;
        }
        let (key, value) = l
            .split_once('=')
            .ok_or_else(|| perr(line, format!("expected `key = value`, got `{l}`")))?;
        let key = key.trim();
        let value = value.trim();
        match section {
            Section::None => return Err(perr(line, format!("`{key}` appears before any section"))),
            Section::Case => match key {
                "name" => set(&mut name, value.to_string(), line, key)?,
                "title" => set(&mut title, value.to_string(), line, key)?,
                _ => return Err(perr(line, format!("unknown key `{key}` in [case]"))),
            },
            Section::Plant => match key {
                "num" => set(&mut plant.num, parse_list(line, key, value)?, line, key)?,
                "den" => set(&mut plant.den, parse_list(line, key, value)?, line, key)?,
                "gain" => set(&mut plant.gain, parse_f64(line, key, value)?, line, key)?,
                "zeros" => set(
                    &mut plant.zeros,
                    parse_factors(line, key, value)?,
                    line,
                    key,
                )?,
                "poles" => set(
                    &mut plant.poles,
                    parse_factors(line, key, value)?,
                    line,
                    key,
                )?,
                "dead_time" => set(
                    &mut plant.dead_time,
                    parse_f64(line, key, value)?,
                    line,
                    key,
                )?,
                _ => return Err(perr(line, format!("unknown key `{key}` in [plant]"))),
            },
            Section::Controller(i) => {
                let c = &mut controllers[i];
                match key {
                    "label" => set(&mut c.label, value.to_string(), line, key)?,
                    "num" => set(&mut c.num, parse_list(line, key, value)?, line, key)?,
                    "den" => set(&mut c.den, parse_list(line, key, value)?, line, key)?,
                    "split_omega" => {
                        set(&mut c.split_omega, parse_f64(line, key, value)?, line, key)?
                    }
                    "reference" => set(&mut c.reference, parse_reference(line, value)?, line, key)?,
                    _ => return Err(perr(line, format!("unknown key `{key}` in [controller]"))),
                }
            }
            Section::Analysis => match key {
                "singular_point" => set(&mut singular, parse_singular(line, value)?, line, key)?,
                "pj_variant" => {
                    let v = parse_variant(value)
                        .filter(|v| !v.is_bode())
                        .ok_or_else(|| {
                            perr(line, format!("pj_variant: unknown variant `{value}`"))
                        })?;
                    set(&mut pj_variant, v, line, key)?
                }
                "omega_l" => set(&mut omega_l, parse_f64(line, key, value)?, line, key)?,
                "mismatch_controller" => {
                    set(&mut mismatch_controller, value.to_string(), line, key)?
                }
                "mismatch_pcts" => {
                    set(&mut mismatch_pcts, parse_list(line, key, value)?, line, key)?
                }
                "mismatch_profile" => {
                    let p = parse_list(line, key, value)?;
                    if p.len() != 3 {
                        return Err(perr(
                            line,
                            "mismatch_profile: expected gain, time_const, dead_time",
                        ));
                    }
                    let spec = PerturbationSpec::new(p[0], p[1], p[2])
                        .map_err(|e| perr(line, e.to_string()))?;
                    set(&mut mismatch_profile, spec, line, key)?
                }
                "compensate" => set(&mut compensate, parse_bool(line, key, value)?, line, key)?,
                "mismatch_reference" => {
                    mismatch_reference.push(parse_mismatch_reference(line, value)?)
                }
                "note" => notes.push(value.to_string()),
                _ => return Err(perr(line, format!("unknown key `{key}` in [analysis]"))),
            },
        }
    }

    let last = text.lines().count().max(1);
    let name = name.ok_or_else(|| perr(last, "missing [case] name"))?;
    let dead_time = plant.dead_time.unwrap_or(0.0);
    let plant = match (plant.num, plant.den, plant.gain) {
        (Some(num), Some(den), None) if plant.zeros.is_none() && plant.poles.is_none() => {
            let tf = TransferFunction::new(
                poly(plant_line, "num", num)?,
                poly(plant_line, "den", den)?,
                dead_time,
            )
            .map_err(|e| perr(plant_line, e.to_string()))?;
            PlantModel::Rational(tf)
        }
        (None, None, Some(gain)) => PlantModel::Factored(FactoredPlant {
            gain,
            zeros: plant.zeros.unwrap_or_default(),
            poles: plant.poles.unwrap_or_default(),
            dead_time,
        }),
        _ => {
            return Err(perr(
                plant_line.max(1),
                "[plant] needs either num and den, or gain with zeros/poles",
            ))
        }
    };
    let mut defs = Vec::new();
    for c in controllers {
        let (Some(num), Some(den)) = (c.num, c.den) else {
            return Err(perr(
                c.line,
                format!("controller `{}` needs num and den", c.key),
            ));
        };
        let tf = TransferFunction::new(poly(c.line, "num", num)?, poly(c.line, "den", den)?, 0.0)
            .map_err(|e| perr(c.line, e.to_string()))?;
        defs.push(ControllerDef {
            label: c.label.unwrap_or_else(|| c.key.clone()),
            key: c.key,
            tf,
            split_omega: c.split_omega,
            reference: c.reference,
        });
    }
    let case = CaseDefinition {
        title: title.unwrap_or_else(|| name.clone()),
        name,
        plant,
        controllers: defs,
        singular_point: singular.unwrap_or(SingularChoice::Default),
        pj_variant: pj_variant.unwrap_or(BoundVariant::PjArbitrary),
        omega_l: omega_l.unwrap_or(100.0),
        mismatch_controller,
        mismatch_pcts: mismatch_pcts.unwrap_or_default(),
        mismatch_profile: match mismatch_profile {
            Some(p) => p,
            None => PerturbationSpec::uniform(1.0)?,
        },
        compensate: compensate.unwrap_or(false),
        mismatch_reference,
        notes,
    };
    case.validate().map_err(|e| perr(last, e.to_string()))?;
    Ok(case)
}

fn list(c: &[f64]) -> String {
    c.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn factors(f: &[Factor]) -> String {
    f.iter()
        .map(|f| match *f {
            Factor::Integrator => "integrator".to_string(),
            Factor::FirstOrder { constant, tau } => format!("first_order({constant}, {tau})"),
            Factor::SecondOrder { a2, a1 } => format!("second_order({a2}, {a1})"),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// Writes a case in the file grammar; `parse_case` reads it back exactly.
pub fn write_case(c: &CaseDefinition) -> String {
    let mut o = String::new();
    let _ = writeln!(
        o,
        "[case]\nname = {}\ntitle = {}\n",
        one_line(&c.name),
        one_line(&c.title)
    );
    o.push_str("[plant]\n");
    match &c.plant {
        PlantModel::Factored(p) => {
            let _ = writeln!(o, "gain = {}", p.gain);
            let _ = writeln!(o, "zeros = {}", factors(&p.zeros));
            let _ = writeln!(o, "poles = {}", factors(&p.poles));
            let _ = writeln!(o, "dead_time = {}", p.dead_time);
        }
        PlantModel::Rational(t) => {
            let _ = writeln!(o, "num = {}", list(t.num.coeffs()));
            let _ = writeln!(o, "den = {}", list(t.den.coeffs()));
            let _ = writeln!(o, "dead_time = {}", t.dead_time);
        }
    }
    for ctrl in &c.controllers {
        let _ = writeln!(o, "\n[controller {}]", ctrl.key);
        let _ = writeln!(o, "label = {}", one_line(&ctrl.label));
        let _ = writeln!(o, "num = {}", list(ctrl.tf.num.coeffs()));
        let _ = writeln!(o, "den = {}", list(ctrl.tf.den.coeffs()));
        if let Some(w) = ctrl.split_omega {
            let _ = writeln!(o, "split_omega = {w}");
        }
        if let Some(r) = ctrl.reference {
            let _ = writeln!(
                o,
                "reference = {}, {}, {}, {}, {}, {}",
                r.s_max,
                r.omega_c,
                r.omega_ms,
                r.rho,
                opt(r.pj_bound),
                opt(r.bode_bound)
            );
        }
    }
    o.push_str("\n[analysis]\n");
    let sp = match c.singular_point {
        SingularChoice::Default => "default".to_string(),
        SingularChoice::OpenLoopNmpZero => "open_loop_nmp_zero".to_string(),
        SingularChoice::DelayHeuristic => "delay_heuristic".to_string(),
        SingularChoice::Explicit { sigma, eta } => format!("explicit({sigma}, {eta})"),
    };
    let _ = writeln!(o, "singular_point = {sp}");
    let _ = writeln!(o, "pj_variant = {}", c.pj_variant.name());
    let _ = writeln!(o, "omega_l = {}", c.omega_l);
    if let Some(k) = &c.mismatch_controller {
        let _ = writeln!(o, "mismatch_controller = {k}");
    }
    let _ = writeln!(o, "mismatch_pcts = {}", list(&c.mismatch_pcts));
    let p = &c.mismatch_profile;
    let _ = writeln!(
        o,
        "mismatch_profile = {}, {}, {}",
        p.gain_pct, p.time_const_pct, p.dead_time_pct
    );
    let _ = writeln!(o, "compensate = {}", c.compensate);
    for r in &c.mismatch_reference {
        let _ = writeln!(
            o,
            "mismatch_reference = {}, {}, {}, {}, {}",
            r.pct,
            r.s_max,
            r.omega_ms,
            opt(r.compensated_s_max),
            opt(r.compensated_omega_ms)
        );
    }
    for n in &c.notes {
        let _ = writeln!(o, "note = {}", one_line(n));
    }
    o
}

pub fn load_case_file(path: &Path) -> Result<CaseDefinition> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_case(&text).map_err(|e| e.context(path.display().to_string()))
}

/// Versioned JSON envelope.
#[derive(Debug, Serialize)]
pub struct JsonEnvelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub kind: &'a str,
    pub data: &'a T,
}

pub fn to_json<T: Serialize>(kind: &str, data: &T) -> Result<String> {
    let env = JsonEnvelope {
        schema_version: SCHEMA_VERSION,
        kind,
        data,
    };
    let mut s = serde_json::to_string_pretty(&env)
        .map_err(|e| Error::InvalidArgument(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Poisson kernel `σ/(σ² + (ω − η)²)`.
pub fn kernel_weight(omega: f64, sp: &SingularPoint) -> f64 {
    sp.sigma / (sp.sigma * sp.sigma + (omega - sp.eta).powi(2))
}

/// Sweep as CSV with columns `omega,mag,log_mag,kernel_weight`.
pub fn sweep_csv(s: &SweepSamples, sp: &SingularPoint) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for i in 0..s.len() {
        w.write_record([
            s.omegas[i].to_string(),
            s.mags[i].to_string(),
            s.logs[i].to_string(),
            kernel_weight(s.omegas[i], sp).to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

fn csv_table(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

fn all_loops(r: &CaseReport) -> impl Iterator<Item = &LoopReport> {
    r.loops.iter().chain(r.compensated.iter())
}

/// One row per bound: `controller,variant,source,bound_nats,bound_log10,measured_ln_smax,satisfied,condition_value,error`.
pub fn bounds_csv(r: &CaseReport) -> Result<String> {
    let mut rows = Vec::new();
    for l in all_loops(r) {
        for b in &l.bounds {
            let mut row = vec![
                l.key.clone(),
                b.variant.name().to_string(),
                source_name(b.source).to_string(),
            ];
            match &b.result {
                Outcome::Ok(x) => row.extend([
                    x.bound_nats.to_string(),
                    x.bound_log10().to_string(),
                    x.measured_ln_smax.to_string(),
                    x.satisfied.to_string(),
                    x.condition.value.to_string(),
                    String::new(),
                ]),
                Outcome::Failed { error, .. } => row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    error.clone(),
                ]),
            }
            rows.push(row);
        }
    }
    csv_table(
        &[
            "controller",
            "variant",
            "source",
            "bound_nats",
            "bound_log10",
            "measured_ln_smax",
            "satisfied",
            "condition_value",
            "error",
        ],
        rows,
    )
}

/// One row per integral: `controller,kind,lhs,rhs,residual,tail_bound,quad_error,panels,error`.
pub fn integrals_csv(r: &CaseReport) -> Result<String> {
    let mut rows = Vec::new();
    for l in all_loops(r) {
        for (kind, v) in [("poisson", &l.poisson), ("bode", &l.bode)] {
            let mut row = vec![l.key.clone(), kind.to_string()];
            match v {
                None => continue,
                Some(Outcome::Ok(x)) => row.extend([
                    x.lhs_numeric.to_string(),
                    x.rhs_analytic.to_string(),
                    x.residual.to_string(),
                    x.tail_bound.to_string(),
                    x.quad_error.to_string(),
                    x.panels_used.to_string(),
                    String::new(),
                ]),
                Some(Outcome::Failed { error, .. }) => {
                    row.extend(std::iter::repeat_n(String::new(), 6));
                    row.push(error.clone());
                }
            }
            rows.push(row);
        }
    }
    csv_table(
        &[
            "controller",
            "kind",
            "lhs",
            "rhs",
            "residual",
            "tail_bound",
            "quad_error",
            "panels",
            "error",
        ],
        rows,
    )
}

/// One row per mismatch level.
pub fn mismatch_csv(r: &CaseReport) -> Result<String> {
    let cell = |o: Option<&Outcome<SensitivityIndices>>| -> [String; 3] {
        match o {
            Some(Outcome::Ok(i)) => [
                i.s_max.to_string(),
                i.omega_ms.to_string(),
                i.omega_c.to_string(),
            ],
            _ => [String::new(), String::new(), String::new()],
        }
    };
    let rows = r
        .mismatch
        .iter()
        .map(|m| {
            let mut row = vec![m.pct.to_string()];
            row.extend(cell(Some(&m.uncompensated)));
            row.extend(cell(m.compensated.as_ref()));
            row
        })
        .collect();
    csv_table(
        &[
            "pct",
            "s_max",
            "omega_ms",
            "omega_c",
            "compensated_s_max",
            "compensated_omega_ms",
            "compensated_omega_c",
        ],
        rows,
    )
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io =
        |e: std::io::Error| Error::InvalidArgument(format!("cannot write {}: {e}", path.display()));
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn g(x: f64) -> String {
    format!("{x:.6e}")
}

fn nats(x: f64) -> String {
    format!("{} nats ({} log10)", g(x), g(x / std::f64::consts::LN_10))
}

fn source_name(s: IndexSource) -> &'static str {
    match s {
        IndexSource::Crossing => "crossing",
        IndexSource::Split => "split",
        IndexSource::Reference => "reference",
    }
}

pub fn text_indices(o: &mut String, label: &str, ix: &SensitivityIndices) {
    let _ = writeln!(
        o,
        "  {label:<9} omega_c {}  rho {}  s_max {}  omega_ms {}  ln s_max {}",
        g(ix.omega_c),
        g(ix.rho),
        g(ix.s_max),
        g(ix.omega_ms),
        nats(ix.ln_s_max())
    );
}

pub fn text_integral(o: &mut String, name: &str, r: &Option<Outcome<IntegralResult>>) {
    match r {
        None => {}
        Some(Outcome::Ok(r)) => {
            let _ = writeln!(
                o,
                "  {name:<8} lhs {}  rhs {}  residual {}  tail {}  quad_err {}  panels {}",
                g(r.lhs_numeric),
                g(r.rhs_analytic),
                g(r.residual),
                g(r.tail_bound),
                g(r.quad_error),
                r.panels_used
            );
        }
        Some(Outcome::Failed { error, .. }) => {
            let _ = writeln!(o, "  {name:<8} not evaluated: {error}");
        }
    }
}

pub fn text_bound(o: &mut String, b: &BoundOutcome) {
    let head = format!("{:<15} [{}]", b.variant.name(), source_name(b.source));
    match &b.result {
        Outcome::Ok(r) => {
            let _ = writeln!(
                o,
                "  {head:<28} bound {}  measured {}  {}",
                nats(r.bound_nats),
                g(r.measured_ln_smax),
                if r.satisfied { "satisfied" } else { "VIOLATED" }
            );
        }
        Outcome::Failed { error, .. } => {
            let _ = writeln!(o, "  {head:<28} inapplicable: {error}");
        }
    }
}

fn published_line(o: &mut String, l: &LoopReport) {
    let Some(r) = l.reference else { return };
    let computed = |v: BoundVariant| {
        l.bounds
            .iter()
            .find(|b| b.source == IndexSource::Reference && b.variant == v)
            .and_then(|b| b.result.ok())
            .map(|r| r.bound_nats)
    };
    let pj_variant = l.bounds.first().map(|b| b.variant);
    if let (Some(p), Some(v)) = (r.pj_bound, pj_variant) {
        let c = computed(v);
        let _ = write!(
            o,
            "  published weighted bound {}; from published indices {}",
            g(p),
            c.map_or("n/a".into(), g)
        );
        if let Some(sp) = l.single_pole_pj_from_reference {
            let _ = write!(
                o,
                "; with one pole per conjugate pair {} (the published value matches only this single-pole sum)",
                g(sp)
            );
        }
        o.push('\n');
    }
    if let Some(p) = r.bode_bound {
        let c = computed(BoundVariant::Bode);
        let _ = writeln!(
            o,
            "  published Bode bound {}; from published indices {}",
            g(p),
            c.map_or("n/a".into(), g)
        );
    }
}

fn roots(v: &[num_complex::Complex64]) -> String {
    if v.is_empty() {
        return "none".into();
    }
    v.iter()
        .map(|z| {
            if z.im == 0.0 {
                format!("{:.6}", z.re)
            } else {
                format!("{:.6}{:+.6}j", z.re, z.im)
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Which parts of a case report to print.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextSections {
    pub indices: bool,
    pub integrals: bool,
    pub bounds: bool,
    pub mismatch: bool,
}

impl TextSections {
    pub const ALL: TextSections = TextSections {
        indices: true,
        integrals: true,
        bounds: true,
        mismatch: true,
    };
}

fn text_loop(o: &mut String, l: &LoopReport, sec: TextSections) {
    let _ = writeln!(o, "\n[{}] {}", l.key, l.label);
    let _ = writeln!(
        o,
        "  alpha {}  beta {}  zeta {}",
        roots(&l.sets.alpha),
        roots(&l.sets.beta),
        roots(&l.sets.zeta)
    );
    let _ = writeln!(
        o,
        "  singular point sigma {} eta {} ({:?})  |g(s0)| {}",
        g(l.singular_point.sigma),
        g(l.singular_point.eta),
        l.singular_point.strategy,
        g(l.g_at_sp)
    );
    if sec.indices {
        text_indices(o, "crossing", &l.indices);
        if let Some(s) = &l.split_indices {
            text_indices(o, "split", s);
        }
        if let Some(r) = &l.reference {
            let _ = writeln!(
                o,
                "  published omega_c {}  rho {}  s_max {}  omega_ms {}",
                g(r.omega_c),
                g(r.rho),
                g(r.s_max),
                g(r.omega_ms)
            );
        }
    }
    if sec.integrals {
        text_integral(o, "poisson", &l.poisson);
        text_integral(o, "bode", &l.bode);
    }
    if sec.bounds {
        for b in &l.bounds {
            text_bound(o, b);
        }
        published_line(o, l);
    }
}

fn text_mismatch_row(o: &mut String, m: &MismatchRow) {
    let ix = |x: &Outcome<SensitivityIndices>| match x {
        Outcome::Ok(i) => format!("s_max {} at {}", g(i.s_max), g(i.omega_ms)),
        Outcome::Failed { error, .. } => format!("failed: {error}"),
    };
    let _ = write!(o, "  {:>5}%  uncompensated {}", m.pct, ix(&m.uncompensated));
    if let Some(c) = &m.compensated {
        let _ = write!(o, "  compensated {}", ix(c));
    }
    if let Some(r) = &m.reference {
        let _ = write!(o, "  (published {}", g(r.s_max));
        if let Some(c) = r.compensated_s_max {
            let _ = write!(o, " / {}", g(c));
        }
        o.push(')');
    }
    o.push('\n');
}

/// Human-readable case report.
pub fn text_report(r: &CaseReport, sec: TextSections) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "case {}: {}", r.case, r.title);
    let _ = writeln!(o, "omega_l {}", g(r.omega_l));
    for l in &r.loops {
        text_loop(&mut o, l, sec);
    }
    if let Some(c) = &r.compensated {
        text_loop(&mut o, c, sec);
    }
    if sec.mismatch && !r.mismatch.is_empty() {
        let _ = writeln!(
            o,
            "\nmismatch ({})",
            r.mismatch_controller.as_deref().unwrap_or("")
        );
        for m in &r.mismatch {
            text_mismatch_row(&mut o, m);
        }
    }
    if !r.notes.is_empty() {
        o.push_str("\nnotes\n");
        for n in &r.notes {
            let _ = writeln!(o, "  - {n}");
        }
    }
    o
}
