use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{Polynomial, TransferFunction};

/// Blaschke-type all-pass factor
/// `κ(s) = Π (s + ᾱ_i)/(s − α_i) · Π (s − β_i)/(s + β̄_i)`.
///
/// Both root lists must lie in the open right half plane. When they are
/// closed under conjugation the numerator and denominator polynomials are
/// real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllPass {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
}

impl AllPass {
    pub fn identity() -> Self {
        Self {
            alpha: Vec::new(),
            beta: Vec::new(),
        }
    }

    pub fn new(alpha: Vec<Complex64>, beta: Vec<Complex64>) -> Result<Self> {
        for r in alpha.iter().chain(beta.iter()) {
            if !(r.re > 0.0) || !r.re.is_finite() || !r.im.is_finite() {
                return Err(Error::InvalidBlaschkeFactor { re: r.re, im: r.im });
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn is_identity(&self) -> bool {
        self.alpha.is_empty() && self.beta.is_empty()
    }

    /// Poles of κ: the α_i and the reflected −β̄_i.
    pub fn poles(&self) -> Vec<Complex64> {
        self.alpha
            .iter()
            .copied()
            .chain(self.beta.iter().map(|b| -b.conj()))
            .collect()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.alpha
            .iter()
            .map(|a| -a.conj())
            .chain(self.beta.iter().copied())
            .collect()
    }

    /// `κ(s)`; returns an error exactly at a pole.
    pub fn eval_s(&self, s: Complex64) -> Result<Complex64> {
        let mut v = Complex64::new(1.0, 0.0);
        for a in &self.alpha {
            let d = s - a;
            if d.norm() == 0.0 {
                return Err(Error::SingularCoincidence);
            }
            v *= (s + a.conj()) / d;
        }
        for b in &self.beta {
            let d = s + b.conj();
            if d.norm() == 0.0 {
                return Err(Error::SingularCoincidence);
            }
            v *= (s - b) / d;
        }
        Ok(v)
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        // Poles are off the imaginary axis, so this never fails.
        self.eval_s(Complex64::new(0.0, omega))
            .expect("all-pass poles are off the axis")
    }

    pub fn numerator(&self) -> Polynomial {
        Polynomial::from_roots(&self.zeros())
    }

    pub fn denominator(&self) -> Polynomial {
        Polynomial::from_roots(&self.poles())
    }

    /// Real-coefficient rational form (the conjugate pairs are multiplied out).
    pub fn to_tf(&self) -> TransferFunction {
        TransferFunction::rational(self.numerator(), self.denominator()).expect("monic denominator")
    }
}

/// Builds κ from the RHP zero set α and RHP pole set β of a sensitivity function.
pub fn all_pass_kappa(alpha: &[Complex64], beta: &[Complex64]) -> Result<AllPass> {
    AllPass::new(alpha.to_vec(), beta.to_vec())
}
