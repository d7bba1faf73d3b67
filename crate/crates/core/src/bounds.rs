//! Lower bounds on `ln s_max` implied by the weighted and unweighted
//! log-sensitivity integrals, and verdicts against measured peaks.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::SensitivityIndices;
use crate::integral::blaschke_log_sum;
use crate::shaping::SingularPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// Arbitrary real singular point, keeps the `ln|g(σ)|` term.
    PjArbitrary,
    /// Singular point at an NMP zero of the loop, where `g = 1`.
    PjAtNmpZero,
    /// Stable closed loop (no β) with the point at a real NMP zero.
    PjStable,
    /// Modified sensitivity `g̃`.
    PjModified,
    Bode,
    BodeModified,
}

impl BoundVariant {
    pub fn is_bode(self) -> bool {
        matches!(self, BoundVariant::Bode | BoundVariant::BodeModified)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::PjArbitrary => "pj_arbitrary",
            BoundVariant::PjAtNmpZero => "pj_at_nmp_zero",
            BoundVariant::PjStable => "pj_stable",
            BoundVariant::PjModified => "pj_modified",
            BoundVariant::Bode => "bode",
            BoundVariant::BodeModified => "bode_modified",
        }
    }
}

/// Everything a bound formula needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub indices: SensitivityIndices,
    pub sp: SingularPoint,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    /// `|g(σ)|` for the arbitrary-point variant, `|g̃(σ)|` for the modified one.
    pub g_at_sp: f64,
    /// Bode gain term of the loop (of the modified forward path for the
    /// modified Bode variant).
    pub a: f64,
    pub omega_l: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub description: String,
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub variant: BoundVariant,
    pub bound_nats: f64,
    pub measured_ln_smax: f64,
    pub satisfied: bool,
    /// `measured_ln_smax − bound_nats`.
    pub margin: f64,
    pub condition: Condition,
    pub inputs: BoundInputs,
}

impl BoundReport {
    pub fn bound_log10(&self) -> f64 {
        self.bound_nats / std::f64::consts::LN_10
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must lie in (0, 1), got {rho}"
        )));
    }
    Ok(())
}

/// The bracket `K` whose negativity makes the weighted bound informative.
pub fn pj_condition_value(inputs: &BoundInputs, variant: BoundVariant) -> Result<f64> {
    let s0 = Complex64::new(inputs.sp.sigma, 0.0);
    match variant {
        BoundVariant::PjArbitrary => {
            if !(inputs.g_at_sp > 0.0) {
                return Err(Error::InvalidArgument("|g(sigma)| must be positive".into()));
            }
            Ok(-inputs.g_at_sp.ln() + blaschke_log_sum(s0, &inputs.alpha, &inputs.beta)?)
        }
        BoundVariant::PjAtNmpZero => blaschke_log_sum(s0, &inputs.alpha, &inputs.beta),
        BoundVariant::PjStable => {
            if !inputs.beta.is_empty() {
                return Err(Error::InvalidArgument(
                    "stable-loop variant requires an empty beta set".into(),
                ));
            }
            blaschke_log_sum(s0, &inputs.alpha, &[])
        }
        BoundVariant::PjModified => {
            if !(inputs.g_at_sp > 0.0) {
                return Err(Error::InvalidArgument(
                    "|g~(sigma)| must be positive".into(),
                ));
            }
            Ok(-inputs.g_at_sp.ln())
        }
        _ => Err(Error::InvalidArgument(format!(
            "{} is not a Poisson-Jensen variant",
            variant.name()
        ))),
    }
}

/// `(−(π/2)K − atan(ω_c/σ) ln ρ) / (π/2 − atan(ω_c/σ))`.
pub fn pj_bound(inputs: &BoundInputs, variant: BoundVariant) -> Result<BoundReport> {
    if inputs.sp.eta != 0.0 {
        return Err(Error::InvalidArgument(
            "the weighted bound needs a real singular point".into(),
        ));
    }
    let ix = &inputs.indices;
    check_rho(ix.rho)?;
    let k = pj_condition_value(inputs, variant)?;
    // K = 0 (no RHP singularities, point at an NMP zero) still gives a
    // positive bound through ln ρ < 0
    let description = match variant {
        BoundVariant::PjArbitrary => {
            "K = -ln|g(s0)| + sum ln|(s0-a)/(s0+conj a)| + sum ln|(s0+conj b)/(s0-b)| <= 0"
        }
        BoundVariant::PjModified => "K = -ln|g~(s0)| <= 0",
        BoundVariant::PjStable => "K = sum ln|(s0-a)/(s0+conj a)| <= 0",
        _ => "K = sum ln|(s0-a)/(s0+conj a)| + sum ln|(s0+conj b)/(s0-b)| <= 0",
    };
    if !(k <= 0.0) {
        return Err(Error::ConditionNotMet {
            description: description.into(),
            value: k,
        });
    }
    let theta = (ix.omega_c / inputs.sp.sigma).atan();
    let bound = (-FRAC_PI_2 * k - theta * ix.rho.ln()) / (FRAC_PI_2 - theta);
    Ok(finish(
        variant,
        bound,
        Condition {
            description: description.into(),
            value: k,
            holds: true,
        },
        inputs,
    ))
}

/// `(−aπ/2 + πΣα − πΣβ − ω_c ln ρ)/(ω_l − ω_c)`; the modified variant omits
/// the α and β sums.
pub fn bode_bound(inputs: &BoundInputs, variant: BoundVariant) -> Result<BoundReport> {
    let ix = &inputs.indices;
    check_rho(ix.rho)?;
    let omega_l = inputs
        .omega_l
        .ok_or_else(|| Error::InvalidArgument("Bode bound needs omega_l".into()))?;
    if !(omega_l > ix.omega_c) || !omega_l.is_finite() {
        return Err(Error::InvalidTruncation {
            omega_l,
            omega_c: ix.omega_c,
        });
    }
    let sums = match variant {
        BoundVariant::Bode => {
            let sa: f64 = inputs.alpha.iter().map(|r| r.re).sum();
            let sb: f64 = inputs.beta.iter().map(|r| r.re).sum();
            PI * sa - PI * sb
        }
        BoundVariant::BodeModified => 0.0,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{} is not a Bode variant",
                variant.name()
            )))
        }
    };
    let numer = -inputs.a * FRAC_PI_2 + sums - ix.omega_c * ix.rho.ln();
    let description = "-a*pi/2 + pi*sum(alpha) - pi*sum(beta) - omega_c*ln(rho) > 0";
    if !(numer > 0.0) {
        return Err(Error::ConditionNotMet {
            description: description.into(),
            value: numer,
        });
    }
    Ok(finish(
        variant,
        numer / (omega_l - ix.omega_c),
        Condition {
            description: description.into(),
            value: numer,
            holds: true,
        },
        inputs,
    ))
}

fn finish(
    variant: BoundVariant,
    bound: f64,
    condition: Condition,
    inputs: &BoundInputs,
) -> BoundReport {
    verdict(BoundReport {
        variant,
        bound_nats: bound,
        measured_ln_smax: inputs.indices.s_max.ln(),
        satisfied: false,
        margin: 0.0,
        condition,
        inputs: inputs.clone(),
    })
}

/// Sets `satisfied` and `margin` from the bound and the measured peak.
pub fn verdict(mut report: BoundReport) -> BoundReport {
    report.satisfied = report.measured_ln_smax >= report.bound_nats;
    report.margin = report.measured_ln_smax - report.bound_nats;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaping::SingularStrategy;

    fn inputs(omega_c: f64, rho: f64, s_max: f64, sigma: f64, alpha: &[f64]) -> BoundInputs {
        BoundInputs {
            indices: SensitivityIndices::new(omega_c, rho, s_max, 10.0 * omega_c).unwrap(),
            sp: SingularPoint::new(sigma, 0.0, SingularStrategy::OpenLoopNmpZero).unwrap(),
            alpha: alpha.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
            beta: vec![],
            g_at_sp: 1.0,
            a: 0.0,
            omega_l: Some(1000.0),
        }
    }

    #[test]
    fn empty_bracket_uses_attenuation_only() {
        let i = inputs(0.8685, 0.967, 2.09, 1.0 / 0.418, &[]);
        let r = pj_bound(&i, BoundVariant::PjAtNmpZero).unwrap();
        let th = (0.8685f64 * 0.418).atan();
        let expect = -th * 0.967f64.ln() / (FRAC_PI_2 - th);
        assert!((r.bound_nats - expect).abs() < 1e-15);
        assert!((r.bound_nats - 9.48e-3).abs() < 0.03 * 9.48e-3);
    }

    #[test]
    fn positive_bracket_is_rejected() {
        let mut i = inputs(0.8685, 0.967, 2.09, 1.0, &[]);
        i.g_at_sp = 0.5;
        assert!(matches!(
            pj_bound(&i, BoundVariant::PjArbitrary),
            Err(Error::ConditionNotMet { .. })
        ));
    }

    #[test]
    fn real_pole_bracket() {
        let i = inputs(0.4498, 0.9443, 4.992, 2.0 / 0.939, &[0.2]);
        let r = pj_bound(&i, BoundVariant::PjAtNmpZero).unwrap();
        let s: f64 = 2.0 / 0.939;
        let k = ((s - 0.2) / (s + 0.2)).ln();
        let th = (0.4498 / s).atan();
        let expect = (-FRAC_PI_2 * k - th * 0.9443f64.ln()) / (FRAC_PI_2 - th);
        assert!((r.bound_nats - expect).abs() < 1e-15);
        assert!(r.satisfied);
    }

    #[test]
    fn bode_truncation_checked() {
        let mut i = inputs(0.9, 0.794, 3.33, 1.0, &[]);
        i.omega_l = Some(0.5);
        assert!(matches!(
            bode_bound(&i, BoundVariant::Bode),
            Err(Error::InvalidTruncation { .. })
        ));
    }

    #[test]
    fn verdict_flags_violation() {
        let i = inputs(0.9, 0.794, 3.33, 1.0, &[]);
        let mut r = bode_bound(&i, BoundVariant::Bode).unwrap();
        r.bound_nats = 0.5;
        r.measured_ln_smax = 0.3;
        let r = verdict(r);
        assert!(!r.satisfied);
        assert!((r.margin + 0.2).abs() < 1e-15);
    }
}
