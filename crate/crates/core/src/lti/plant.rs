//! Parametric (factored) plant descriptions and model-mismatch perturbation.
//!
//! Time constants are only meaningful relative to a factored form: scaling
//! `a2 s^2 + a1 s + 1` by a time-constant factor `f` maps it to
//! `a2 f^2 s^2 + a1 f s + 1`, which is not a uniform scaling of the raw
//! coefficients.

use serde::{Deserialize, Serialize};

use super::{Polynomial, TransferFunction};
use crate::error::{Error, Result};

/// A single factor of a factored numerator or denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    /// `s`
    Integrator,
    /// `constant + tau s`; `constant` is normally `±1`.
    FirstOrder { constant: f64, tau: f64 },
    /// `a2 s^2 + a1 s + 1`
    SecondOrder { a2: f64, a1: f64 },
}

impl Factor {
    pub fn lag(tau: f64) -> Self {
        Factor::FirstOrder { constant: 1.0, tau }
    }

    pub fn polynomial(&self) -> Polynomial {
        match *self {
            Factor::Integrator => Polynomial::s(),
            Factor::FirstOrder { constant, tau } => Polynomial::linear(constant, tau),
            Factor::SecondOrder { a2, a1 } => {
                Polynomial::new(vec![1.0, a1, a2]).expect("finite coefficients")
            }
        }
    }

    fn scale_time(&self, f: f64) -> Self {
        match *self {
            Factor::Integrator => Factor::Integrator,
            Factor::FirstOrder { constant, tau } => Factor::FirstOrder {
                constant,
                tau: tau * f,
            },
            Factor::SecondOrder { a2, a1 } => Factor::SecondOrder {
                a2: a2 * f * f,
                a1: a1 * f,
            },
        }
    }
}

/// `gain * Π zeros / Π poles * exp(-dead_time s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredPlant {
    pub gain: f64,
    pub zeros: Vec<Factor>,
    pub poles: Vec<Factor>,
    pub dead_time: f64,
}

impl FactoredPlant {
    pub fn to_tf(&self) -> Result<TransferFunction> {
        let num = self
            .zeros
            .iter()
            .fold(Polynomial::constant(self.gain), |acc, f| {
                acc.mul(&f.polynomial())
            });
        let den = self
            .poles
            .iter()
            .fold(Polynomial::one(), |acc, f| acc.mul(&f.polynomial()));
        TransferFunction::new(num, den, self.dead_time)
    }
}

/// Relative parameter changes, each a signed fraction (`0.1` = +10%).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub gain_pct: f64,
    pub time_const_pct: f64,
    pub dead_time_pct: f64,
}

impl PerturbationSpec {
    pub fn new(gain_pct: f64, time_const_pct: f64, dead_time_pct: f64) -> Result<Self> {
        let spec = Self {
            gain_pct,
            time_const_pct,
            dead_time_pct,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Every parameter moved by the same fraction.
    pub fn uniform(pct: f64) -> Result<Self> {
        Self::new(pct, pct, pct)
    }

    /// Scales a unit profile (which parameters move) by a magnitude.
    pub fn from_profile(profile: &PerturbationSpec, pct: f64) -> Result<Self> {
        Self::new(
            profile.gain_pct * pct,
            profile.time_const_pct * pct,
            profile.dead_time_pct * pct,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gain_pct", self.gain_pct),
            ("time_const_pct", self.time_const_pct),
            ("dead_time_pct", self.dead_time_pct),
        ] {
            if !v.is_finite() || v <= -1.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a finite fraction > -1, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.gain_pct == 0.0 && self.time_const_pct == 0.0 && self.dead_time_pct == 0.0
    }
}

/// Applies a mismatch scenario to a factored plant.
pub fn perturb(plant: &FactoredPlant, spec: &PerturbationSpec) -> Result<FactoredPlant> {
    spec.validate()?;
    let f = 1.0 + spec.time_const_pct;
    let out = FactoredPlant {
        gain: plant.gain * (1.0 + spec.gain_pct),
        zeros: plant.zeros.iter().map(|z| z.scale_time(f)).collect(),
        poles: plant.poles.iter().map(|p| p.scale_time(f)).collect(),
        dead_time: plant.dead_time * (1.0 + spec.dead_time_pct),
    };
    if out.dead_time < 0.0 {
        return Err(Error::DegeneratePlant("negative dead time".into()));
    }
    let tf = out
        .to_tf()
        .map_err(|e| Error::DegeneratePlant(e.to_string()))?;
    if tf.num.is_zero() {
        return Err(Error::DegeneratePlant("zero gain".into()));
    }
    Ok(out)
}

/// Ideal PID `k_c (1 + 1/(τ_I s) + τ_D s)`.
pub fn pid(kc: f64, ti: f64, td: f64) -> Result<TransferFunction> {
    if ti == 0.0 {
        return Err(Error::InvalidModel("integral time must be nonzero".into()));
    }
    TransferFunction::from_coeffs(&[kc, kc * ti, kc * ti * td], &[0.0, ti], 0.0)
}

/// Series PID with derivative filter
/// `k_c (1 + τ_I s)(1 + τ_D s) / (τ_I s (α τ_D s + 1))`.
pub fn series_pid_filtered(kc: f64, ti: f64, td: f64, alpha: f64) -> Result<TransferFunction> {
    if ti == 0.0 {
        return Err(Error::InvalidModel("integral time must be nonzero".into()));
    }
    let num = Polynomial::linear(1.0, ti)
        .mul(&Polynomial::linear(1.0, td))
        .scale(kc);
    let den = Polynomial::new(vec![0.0, ti])?.mul(&Polynomial::linear(1.0, alpha * td));
    TransferFunction::new(num, den, 0.0)
}

/// Lead-lag `(a1 s + 1)/(a2 s + 1)`.
pub fn lead_lag(a1: f64, a2: f64) -> Result<TransferFunction> {
    TransferFunction::from_coeffs(&[1.0, a1], &[1.0, a2], 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sopdt() -> FactoredPlant {
        FactoredPlant {
            gain: 1.0,
            zeros: vec![],
            poles: vec![
                Factor::FirstOrder {
                    constant: -1.0,
                    tau: 5.0,
                },
                Factor::lag(2.07),
            ],
            dead_time: 0.939,
        }
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let p = sopdt();
        let q = perturb(&p, &PerturbationSpec::default()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.to_tf().unwrap(), q.to_tf().unwrap());
    }

    #[test]
    fn time_constants_scale_in_factored_form() {
        let p = FactoredPlant {
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
        let q = perturb(&p, &PerturbationSpec::uniform(0.1).unwrap()).unwrap();
        assert!((q.gain + 0.2679 * 1.1).abs() < 1e-15);
        assert!((q.dead_time - 11.0).abs() < 1e-12);
        match q.poles[0] {
            Factor::SecondOrder { a2, a1 } => {
                assert!((a2 - 279.03 * 1.21).abs() < 1e-9);
                assert!((a1 + 2.9781 * 1.1).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn dead_time_only_profile() {
        let profile = PerturbationSpec::new(0.0, 0.0, 1.0).unwrap();
        let spec = PerturbationSpec::from_profile(&profile, 0.2).unwrap();
        let q = perturb(&sopdt(), &spec).unwrap();
        assert!((q.dead_time - 0.939 * 1.2).abs() < 1e-12);
        assert_eq!(q.poles, sopdt().poles);
    }

    #[test]
    fn rejects_out_of_range_fraction() {
        assert!(PerturbationSpec::new(-1.0, 0.0, 0.0).is_err());
        assert!(PerturbationSpec::new(0.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn pid_matches_parallel_form() {
        let c = pid(2.0, 4.0, 0.5).unwrap();
        let w = 0.7;
        let s = num_complex::Complex64::new(0.0, w);
        let direct = 2.0 * (1.0 + 1.0 / (4.0 * s) + 0.5 * s);
        assert!((c.eval(w).unwrap() - direct).norm() < 1e-14);
    }
}
