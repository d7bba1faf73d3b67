//! Built-in case studies and the end-to-end analysis pipeline that runs a
//! case: sweep, indices, integrals, bounds and mismatch studies.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{bode_bound, pj_bound, BoundInputs, BoundReport, BoundVariant};
use crate::error::{Error, Result};
use crate::indices::{
    default_window, extract_indices, indices_with_split, sweep, SensitivityIndices, SweepSamples,
    DEFAULT_SWEEP_POINTS,
};
use crate::integral::{bode_check, poisson_check, IntegralResult, QuadratureConfig};
use crate::lti::{
    lead_lag, perturb, pid, series_pid_filtered, Factor, FactoredPlant, PerturbationSpec,
    Polynomial, TransferFunction,
};
use crate::shaping::{
    all_pass_kappa, compensated_loop, default_singular_point, make_sensitivity, SensitivityModel,
    ShapingConfig, SingularPoint, SingularStrategy,
};

pub const BUILTIN_CASES: [&str; 3] = ["foipdt", "cstr", "sopdt"];

/// Plant in factored form (perturbable by time constant) or raw coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PlantModel {
    Factored(FactoredPlant),
    Rational(TransferFunction),
}

impl PlantModel {
    pub fn to_tf(&self) -> Result<TransferFunction> {
        match self {
            PlantModel::Factored(p) => p.to_tf(),
            PlantModel::Rational(t) => Ok(t.clone()),
        }
    }

    pub fn perturb(&self, spec: &PerturbationSpec) -> Result<PlantModel> {
        match self {
            PlantModel::Factored(p) => Ok(PlantModel::Factored(perturb(p, spec)?)),
            PlantModel::Rational(t) => {
                spec.validate()?;
                if spec.time_const_pct != 0.0 {
                    return Err(Error::InvalidArgument(
                        "time constants of a coefficient-form plant are not identifiable; use the factored form".into(),
                    ));
                }
                let out = TransferFunction::new(
                    t.num.scale(1.0 + spec.gain_pct),
                    t.den.clone(),
                    t.dead_time * (1.0 + spec.dead_time_pct),
                )?;
                Ok(PlantModel::Rational(out))
            }
        }
    }
}

/// Published indices and bounds for a loop, kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub s_max: f64,
    pub omega_c: f64,
    pub omega_ms: f64,
    pub rho: f64,
    pub pj_bound: Option<f64>,
    pub bode_bound: Option<f64>,
}

impl ReferenceValues {
    pub fn indices(&self) -> Result<SensitivityIndices> {
        SensitivityIndices::new(self.omega_c, self.rho, self.s_max, self.omega_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerDef {
    pub key: String,
    pub label: String,
    pub tf: TransferFunction,
    /// Alternative split frequency for `ρ` (a graph-read crossover).
    pub split_omega: Option<f64>,
    pub reference: Option<ReferenceValues>,
}

/// Published mismatch row: peaks without and with compensation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchReference {
    pub pct: f64,
    pub s_max: f64,
    pub omega_ms: f64,
    pub compensated_s_max: Option<f64>,
    pub compensated_omega_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum SingularChoice {
    /// NMP open-loop zero if any, else `2/t_d`.
    Default,
    OpenLoopNmpZero,
    DelayHeuristic,
    Explicit {
        sigma: f64,
        eta: f64,
    },
}

impl SingularChoice {
    pub fn resolve(&self, m: &SensitivityModel) -> Result<SingularPoint> {
        match *self {
            SingularChoice::Default => default_singular_point(m),
            SingularChoice::OpenLoopNmpZero => {
                let sp = default_singular_point(m)?;
                if sp.strategy != SingularStrategy::OpenLoopNmpZero {
                    return Err(Error::InvalidArgument(
                        "loop has no NMP open-loop zero".into(),
                    ));
                }
                Ok(sp)
            }
            SingularChoice::DelayHeuristic => SingularPoint::delay_heuristic(m.max_dead_time()),
            SingularChoice::Explicit { sigma, eta } => SingularPoint::explicit(sigma, eta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDefinition {
    pub name: String,
    pub title: String,
    pub plant: PlantModel,
    pub controllers: Vec<ControllerDef>,
    pub singular_point: SingularChoice,
    /// Weighted-bound variant matching the singular point.
    pub pj_variant: BoundVariant,
    pub omega_l: f64,
    /// Controller used for the mismatch study; the first one when unset.
    pub mismatch_controller: Option<String>,
    pub mismatch_pcts: Vec<f64>,
    /// Which parameters move (as unit fractions) in the mismatch study.
    pub mismatch_profile: PerturbationSpec,
    pub compensate: bool,
    pub mismatch_reference: Vec<MismatchReference>,
    pub notes: Vec<String>,
}

impl CaseDefinition {
    pub fn controller(&self, key: &str) -> Result<&ControllerDef> {
        self.controllers
            .iter()
            .find(|c| c.key == key)
            .ok_or_else(|| Error::UnknownController {
                case: self.name.clone(),
                controller: key.to_string(),
            })
    }

    /// Plant in series with the named controller.
    pub fn open_loop(&self, key: &str) -> Result<TransferFunction> {
        Ok(self.controller(key)?.tf.series(&self.plant.to_tf()?))
    }

    pub fn validate(&self) -> Result<()> {
        if self.controllers.is_empty() {
            return Err(Error::InvalidModel(format!(
                "case `{}` has no controllers",
                self.name
            )));
        }
        let plant = self.plant.to_tf()?;
        for c in &self.controllers {
            c.tf.series(&plant)
                .ensure_proper()
                .map_err(|e| e.context(format!("controller `{}`", c.key)))?;
        }
        if !(self.omega_l > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega_l must be positive, got {}",
                self.omega_l
            )));
        }
        self.mismatch_profile.validate()?;
        if let Some(k) = &self.mismatch_controller {
            self.controller(k)?;
        }
        Ok(())
    }
}

fn lag(tau: f64) -> Factor {
    Factor::lag(tau)
}

fn foipdt() -> Result<CaseDefinition> {
    let plant = FactoredPlant {
        gain: 0.547,
        zeros: vec![Factor::FirstOrder {
            constant: 1.0,
            tau: -0.418,
        }],
        poles: vec![Factor::Integrator, lag(1.06)],
        dead_time: 0.1,
    };
    Ok(CaseDefinition {
        name: "foipdt".into(),
        title: "Integrating plant with NMP zero and dead time".into(),
        plant: PlantModel::Factored(plant),
        controllers: vec![
            ControllerDef {
                key: "luyben".into(),
                label: "Luyben series PID with derivative filter".into(),
                tf: series_pid_filtered(1.69, 11.5, 1.15, 0.1)?,
                split_omega: Some(0.8685),
                reference: Some(ReferenceValues {
                    s_max: 2.09,
                    omega_c: 0.8685,
                    omega_ms: 2.5,
                    rho: 0.967,
                    pj_bound: Some(9.48e-3),
                    bode_bound: Some(2.894e-5),
                }),
            },
            ControllerDef {
                key: "pai".into(),
                label: "Pai ideal PID".into(),
                tf: pid(4.06, 2.68, 0.65)?,
                split_omega: Some(0.9),
                reference: Some(ReferenceValues {
                    s_max: 3.33,
                    omega_c: 0.9,
                    omega_ms: 3.089,
                    rho: 0.794,
                    pj_bound: Some(0.0685),
                    bode_bound: Some(2.077e-4),
                }),
            },
        ],
        singular_point: SingularChoice::OpenLoopNmpZero,
        pj_variant: BoundVariant::PjAtNmpZero,
        omega_l: 1000.0,
        mismatch_controller: None,
        mismatch_pcts: vec![],
        mismatch_profile: PerturbationSpec::uniform(1.0)?,
        compensate: false,
        mismatch_reference: vec![],
        notes: vec![
            "Derivative filter ratio of the Luyben controller is not published; 0.1 is assumed."
                .into(),
        ],
    })
}

fn cstr() -> Result<CaseDefinition> {
    let plant = FactoredPlant {
        gain: -0.2679,
        zeros: vec![Factor::FirstOrder {
            constant: 1.0,
            tau: -41.6667,
        }],
        poles: vec![Factor::SecondOrder {
            a2: 279.03,
            a1: -2.9781,
        }],
        dead_time: 10.0,
    };
    // integral time is negative as published
    let controller = pid(1.3254, -86.251, 3.5807)?.series(&lead_lag(5.0, 4.112)?);
    Ok(CaseDefinition {
        name: "cstr".into(),
        title: "Autocatalytic CSTR with complex unstable poles".into(),
        plant: PlantModel::Factored(plant),
        controllers: vec![ControllerDef {
            key: "rc2006".into(),
            label: "PID with lead-lag".into(),
            tf: controller,
            split_omega: Some(0.003972),
            reference: Some(ReferenceValues {
                s_max: 2.411,
                omega_c: 0.003972,
                omega_ms: 0.0173,
                rho: 0.9333,
                pj_bound: Some(0.0766),
                bode_bound: Some(0.00335),
            }),
        }],
        // the plant zero 1/τ_0; the controller adds a second, slower NMP zero
        singular_point: SingularChoice::Explicit {
            sigma: 1.0 / 41.6667,
            eta: 0.0,
        },
        pj_variant: BoundVariant::PjAtNmpZero,
        omega_l: 10.0,
        mismatch_controller: None,
        mismatch_pcts: vec![10.0],
        mismatch_profile: PerturbationSpec::uniform(1.0)?,
        compensate: false,
        mismatch_reference: vec![
            MismatchReference {
                pct: 0.0,
                s_max: 2.411,
                omega_ms: 0.0173,
                compensated_s_max: None,
                compensated_omega_ms: None,
            },
        MismatchReference {
        pct: 10.0,
        s_max: 2.947,
        omega_ms: 0.0152,
        compensated_s_max: None,
        compensated_omega_ms: None,
    },
        ],
        notes: vec![
            "Both poles of the conjugate pair enter the weighted bound; the published value 0.0766 is reproduced only with a single pole in the sum.".into(),
            "ln|g| does not decay (relative degree 0), so the unweighted integral diverges; the Bode bound is still evaluated from its formula.".into(),
        ],
    })
}

fn sopdt() -> Result<CaseDefinition> {
    let plant = FactoredPlant {
        gain: 1.0,
        zeros: vec![],
        poles: vec![
            Factor::FirstOrder {
                constant: -1.0,
                tau: 5.0,
            },
            lag(2.07),
        ],
        dead_time: 0.939,
    };
    let mk = |key: &str, label: &str, kc, ti, td, r: ReferenceValues| -> Result<ControllerDef> {
        Ok(ControllerDef {
            key: key.into(),
            label: label.into(),
            tf: pid(kc, ti, td)?,
            split_omega: Some(r.omega_c),
            reference: Some(r),
        })
    };
    Ok(CaseDefinition {
        name: "sopdt".into(),
        title: "Unstable second-order plant with dead time".into(),
        plant: PlantModel::Factored(plant),
        controllers: vec![
            mk(
                "sl2008",
                "Shamsuzzoha-Lee 2008 PID",
                6.7051,
                5.4738,
                1.333,
                ReferenceValues {
                    s_max: 4.992,
                    omega_c: 0.4498,
                    omega_ms: 0.9655,
                    rho: 0.9443,
                    pj_bound: Some(0.2267),
                    bode_bound: Some(0.0685),
                },
            )?,
            mk(
                "rc2006",
                "Rao-Chidambaram 2006 PID",
                6.4285,
                6.4409,
                1.413,
                ReferenceValues {
                    s_max: 4.31,
                    omega_c: 0.4479,
                    omega_ms: 1.023,
                    rho: 0.9306,
                    pj_bound: Some(0.2287),
                    bode_bound: Some(0.0691),
                },
            )?,
            mk(
                "sl2007",
                "Shamsuzzoha-Lee 2007 PID",
                4.009,
                8.0327,
                1.6808,
                ReferenceValues {
                    s_max: 2.338,
                    omega_c: 0.2805,
                    omega_ms: 0.8123,
                    rho: 0.9536,
                    pj_bound: Some(0.2105),
                    bode_bound: Some(0.0641),
                },
            )?,
        ],
        singular_point: SingularChoice::DelayHeuristic,
        // σ = 2/t_d is the NMP zero of the first-order Padé surrogate of the delay
        pj_variant: BoundVariant::PjAtNmpZero,
        omega_l: 10.0,
        mismatch_controller: Some("sl2008".into()),
        mismatch_pcts: vec![10.0, 20.0],
        mismatch_profile: PerturbationSpec::new(0.0, 0.0, 1.0)?,
        compensate: true,
        mismatch_reference: vec![
            MismatchReference {
                pct: 0.0,
                s_max: 4.992,
                omega_ms: 0.9655,
                compensated_s_max: Some(2.431),
                compensated_omega_ms: Some(1.369),
            },
            MismatchReference {
                pct: 10.0,
                s_max: 7.972,
                omega_ms: 0.9298,
                compensated_s_max: Some(2.793),
                compensated_omega_ms: Some(1.24),
            },
            MismatchReference {
                pct: 20.0,
                s_max: 19.45,
                omega_ms: 0.8957,
                compensated_s_max: Some(3.261),
                compensated_omega_ms: Some(1.177),
            },
        ],
        notes: vec![
            "Mismatch moves the dead time only; moving gain and time constants as well gives smaller peaks at 20%.".into(),
            "The compensated loop is G/kappa: the unstable pole is reflected and the delay stays in the loop.".into(),
        ],
    })
}

/// One of the built-in cases by name.
pub fn load_case(name: &str) -> Result<CaseDefinition> {
    let c = match name {
        "foipdt" => foipdt()?,
        "cstr" => cstr()?,
        "sopdt" => sopdt()?,
        other => return Err(Error::UnknownCase(other.to_string())),
    };
    c.validate()?;
    Ok(c)
}

/// Overrides applied when running a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub quad: QuadratureConfig,
    pub shaping: ShapingConfig,
    pub sweep_points: usize,
    pub sweep_window: Option<(f64, f64)>,
    pub omega_l: Option<f64>,
    pub singular_point: Option<SingularChoice>,
    pub mismatch_pcts: Option<Vec<f64>>,
    pub compensate: Option<bool>,
    /// Run only this controller.
    pub controller: Option<String>,
    /// Skip the integrals (faster index/bound screening).
    pub skip_integrals: bool,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            shaping: ShapingConfig::default(),
            sweep_points: DEFAULT_SWEEP_POINTS,
            sweep_window: None,
            omega_l: None,
            singular_point: None,
            mismatch_pcts: None,
            compensate: None,
            controller: None,
            skip_integrals: false,
        }
    }
}

/// A computed value or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Failed {
        error: String,
        condition_not_met: bool,
    },
}

impl<T> Outcome<T> {
    pub fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Failed {
                condition_not_met: matches!(e.root(), Error::ConditionNotMet { .. }),
                error: e.to_string(),
            },
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Failed { .. } => None,
        }
    }

    pub fn condition_not_met(&self) -> bool {
        matches!(
            self,
            Outcome::Failed {
                condition_not_met: true,
                ..
            }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSource {
    /// First unit crossing.
    Crossing,
    /// Prescribed split frequency.
    Split,
    /// Published indices.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOutcome {
    pub variant: BoundVariant,
    pub source: IndexSource,
    pub result: Outcome<BoundReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSets {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub zeta: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub key: String,
    pub label: String,
    pub sets: SingularSets,
    pub singular_point: SingularPoint,
    pub g_at_sp: f64,
    pub indices: SensitivityIndices,
    pub split_indices: Option<SensitivityIndices>,
    pub poisson: Option<Outcome<IntegralResult>>,
    pub bode: Option<Outcome<IntegralResult>>,
    pub bounds: Vec<BoundOutcome>,
    pub reference: Option<ReferenceValues>,
    /// Weighted bound from the published indices using one pole of each
    /// conjugate pair, when the pair is present.
    pub single_pole_pj_from_reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchRow {
    pub pct: f64,
    pub spec: PerturbationSpec,
    pub uncompensated: Outcome<SensitivityIndices>,
    pub compensated: Option<Outcome<SensitivityIndices>>,
    pub reference: Option<MismatchReference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub title: String,
    pub omega_l: f64,
    pub loops: Vec<LoopReport>,
    /// Nominal compensated loop `G/κ` of the mismatch controller.
    pub compensated: Option<LoopReport>,
    pub mismatch_controller: Option<String>,
    pub mismatch: Vec<MismatchRow>,
    pub notes: Vec<String>,
}

impl CaseReport {
    /// Whether any bound in the report failed its applicability condition.
    pub fn any_condition_not_met(&self) -> bool {
        self.loops
            .iter()
            .chain(self.compensated.iter())
            .flat_map(|l| l.bounds.iter())
            .filter(|b| b.source != IndexSource::Reference)
            .any(|b| b.result.condition_not_met())
    }
}

/// Sweep over the configured window.
pub fn sweep_model(m: &SensitivityModel, cfg: &CaseConfig) -> Result<SweepSamples> {
    let (lo, hi) = cfg.sweep_window.unwrap_or_else(|| default_window(m));
    sweep(m, lo, hi, cfg.sweep_points)
}

/// Indices of a loop at the first crossing.
pub fn loop_indices(g: &TransferFunction, cfg: &CaseConfig) -> Result<SensitivityIndices> {
    let m = make_sensitivity(g.clone(), &cfg.shaping)?;
    let s = sweep_model(&m, cfg)?;
    extract_indices(&m, &s)
}

/// The compensated loop `G/κ` with κ built from the loop's own RHP poles
/// and closed-loop RHP poles.
pub fn compensate_loop(g: &TransferFunction, cfg: &ShapingConfig) -> Result<TransferFunction> {
    let m = make_sensitivity(g.clone(), cfg)?;
    let kappa = all_pass_kappa(&m.alpha.roots, &m.beta.roots)?;
    compensated_loop(g, &kappa)
}

fn bound_inputs(
    m: &SensitivityModel,
    sp: &SingularPoint,
    g_at_sp: f64,
    indices: SensitivityIndices,
    omega_l: f64,
) -> Result<BoundInputs> {
    let a = match m.open_loop.bode_gain_a() {
        Ok(a) => a,
        // a relative-degree-0 loop has no gain term in the limit used by the bound
        Err(Error::NonconvergentIntegral(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(BoundInputs {
        indices,
        sp: SingularPoint { eta: 0.0, ..*sp },
        alpha: m.alpha.roots.clone(),
        beta: m.beta.roots.clone(),
        g_at_sp,
        a,
        omega_l: Some(omega_l),
    })
}

fn bounds_for(
    variants: &[BoundVariant],
    source: IndexSource,
    inputs: &BoundInputs,
) -> Vec<BoundOutcome> {
    variants
        .iter()
        .map(|&v| BoundOutcome {
            variant: v,
            source,
            result: Outcome::from_result(if v.is_bode() {
                bode_bound(inputs, v)
            } else {
                pj_bound(inputs, v)
            }),
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn analyze_loop(
    key: &str,
    label: &str,
    g: TransferFunction,
    choice: SingularChoice,
    pj_variant: BoundVariant,
    bode_variant: BoundVariant,
    omega_l: f64,
    split: Option<f64>,
    reference: Option<ReferenceValues>,
    cfg: &CaseConfig,
) -> Result<LoopReport> {
    let m = make_sensitivity(g, &cfg.shaping)?;
    let sp = choice.resolve(&m)?;
    let g_at_sp = m.eval_s(sp.s())?.norm();
    let s = sweep_model(&m, cfg)?;
    let indices = extract_indices(&m, &s)?;
    let split_indices = match split {
        Some(w) if w < indices.omega_c => Some(indices_with_split(&m, &s, w)?),
        _ => None,
    };
    let (poisson, bode) = if cfg.skip_integrals {
        (None, None)
    } else {
        (
            Some(Outcome::from_result(poisson_check(&m, &sp, &cfg.quad))),
            Some(Outcome::from_result(bode_check(&m, &cfg.quad))),
        )
    };

    let mut pj_variants = vec![pj_variant];
    if !matches!(
        pj_variant,
        BoundVariant::PjArbitrary | BoundVariant::PjModified
    ) && sp.strategy != SingularStrategy::OpenLoopNmpZero
    {
        pj_variants.push(BoundVariant::PjArbitrary);
    }
    let mut variants = pj_variants.clone();
    variants.push(bode_variant);

    let mut bounds = bounds_for(
        &variants,
        IndexSource::Crossing,
        &bound_inputs(&m, &sp, g_at_sp, indices, omega_l)?,
    );
    if let Some(ix) = split_indices {
        bounds.extend(bounds_for(
            &variants,
            IndexSource::Split,
            &bound_inputs(&m, &sp, g_at_sp, ix, omega_l)?,
        ));
    }
    let mut single_pole = None;
    if let Some(r) = reference {
        let inputs = bound_inputs(&m, &sp, g_at_sp, r.indices()?, omega_l)?;
        bounds.extend(bounds_for(&variants, IndexSource::Reference, &inputs));
        let has_pair = inputs.alpha.iter().any(|a| a.im != 0.0);
        if has_pair {
            let mut one = inputs.clone();
            one.alpha.retain(|a| a.im >= 0.0);
            single_pole = pj_bound(&one, pj_variant).ok().map(|r| r.bound_nats);
        }
    }

    Ok(LoopReport {
        key: key.to_string(),
        label: label.to_string(),
        sets: SingularSets {
            alpha: m.alpha.roots.clone(),
            beta: m.beta.roots.clone(),
            zeta: m.zeta.roots.clone(),
        },
        singular_point: sp,
        g_at_sp,
        indices,
        split_indices,
        poisson,
        bode,
        bounds,
        reference,
        single_pole_pj_from_reference: single_pole,
    })
}

/// Runs every analysis of a case.
pub fn run_case(c: &CaseDefinition, cfg: &CaseConfig) -> Result<CaseReport> {
    c.validate()?;
    cfg.quad.validate()?;
    let omega_l = cfg.omega_l.unwrap_or(c.omega_l);
    let choice = cfg.singular_point.unwrap_or(c.singular_point);
    let plant = c.plant.to_tf()?;

    let selected: Vec<&ControllerDef> = match &cfg.controller {
        Some(k) => vec![c.controller(k)?],
        None => c.controllers.iter().collect(),
    };
    let mut loops = Vec::new();
    for ctrl in &selected {
        let g = ctrl.tf.series(&plant);
        let r = analyze_loop(
            &ctrl.key,
            &ctrl.label,
            g,
            choice,
            c.pj_variant,
            BoundVariant::Bode,
            omega_l,
            ctrl.split_omega,
            ctrl.reference,
            cfg,
        )
        .map_err(|e| e.context(format!("case `{}`, controller `{}`", c.name, ctrl.key)))?;
        loops.push(r);
    }

    let compensate = cfg.compensate.unwrap_or(c.compensate);
    let pcts = cfg
        .mismatch_pcts
        .clone()
        .unwrap_or_else(|| c.mismatch_pcts.clone());
    let mismatch_key = c
        .mismatch_controller
        .clone()
        .unwrap_or_else(|| c.controllers[0].key.clone());
    let mismatch_ctrl = c.controller(&mismatch_key)?;
    let run_mismatch = !pcts.is_empty() || compensate;
    let mismatch_key = if run_mismatch {
        Some(mismatch_key)
    } else {
        None
    };

    let compensated = if compensate {
        let g = mismatch_ctrl.tf.series(&plant);
        let gc = compensate_loop(&g, &cfg.shaping)?;
        let variant = if choice == SingularChoice::OpenLoopNmpZero {
            BoundVariant::PjAtNmpZero
        } else {
            BoundVariant::PjModified
        };
        Some(
            analyze_loop(
                &format!("{}_compensated", mismatch_ctrl.key),
                &format!("{} with all-pass compensation", mismatch_ctrl.label),
                gc,
                choice,
                variant,
                BoundVariant::BodeModified,
                omega_l,
                None,
                None,
                cfg,
            )
            .map_err(|e| e.context(format!("case `{}`, compensated loop", c.name)))?,
        )
    } else {
        None
    };

    let mut mismatch = Vec::new();
    if run_mismatch {
        let mut levels = vec![0.0];
        levels.extend(pcts.iter().copied().filter(|p| *p != 0.0));
        for pct in levels {
            let spec = PerturbationSpec::from_profile(&c.mismatch_profile, pct / 100.0)?;
            let row = mismatch_row(c, mismatch_ctrl, &spec, compensate, cfg);
            mismatch.push(MismatchRow {
                pct,
                spec,
                uncompensated: row.0,
                compensated: row.1,
                reference: c.mismatch_reference.iter().copied().find(|r| r.pct == pct),
            });
        }
    }

    Ok(CaseReport {
        case: c.name.clone(),
        title: c.title.clone(),
        omega_l,
        loops,
        compensated,
        mismatch_controller: mismatch_key,
        mismatch,
        notes: c.notes.clone(),
    })
}

/// Perturbed-plant indices with and without compensation. The compensator
/// is rebuilt from the perturbed loop so the unstable pole is reflected
/// exactly.
fn mismatch_row(
    c: &CaseDefinition,
    ctrl: &ControllerDef,
    spec: &PerturbationSpec,
    compensate: bool,
    cfg: &CaseConfig,
) -> (
    Outcome<SensitivityIndices>,
    Option<Outcome<SensitivityIndices>>,
) {
    let g = c
        .plant
        .perturb(spec)
        .and_then(|p| p.to_tf())
        .map(|p| ctrl.tf.series(&p));
    let unc = Outcome::from_result(g.clone().and_then(|g| loop_indices(&g, cfg)));
    let comp = compensate.then(|| {
        Outcome::from_result(
            g.and_then(|g| compensate_loop(&g, &cfg.shaping))
                .and_then(|gc| loop_indices(&gc, cfg)),
        )
    });
    (unc, comp)
}

/// Coefficient-form controller from raw lists, for user case files.
pub fn controller_from_coeffs(num: &[f64], den: &[f64]) -> Result<TransferFunction> {
    TransferFunction::new(
        Polynomial::new(num.to_vec())?,
        Polynomial::new(den.to_vec())?,
        0.0,
    )
}
