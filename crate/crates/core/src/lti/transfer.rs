use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Polynomial;
use crate::error::{Error, Result};

/// Rational transfer function with a pure transport delay:
/// `num(s) / den(s) * exp(-dead_time * s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub num: Polynomial,
    pub den: Polynomial,
    pub dead_time: f64,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial, dead_time: f64) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidModel(
                "denominator is identically zero".into(),
            ));
        }
        if !(dead_time >= 0.0) || !dead_time.is_finite() {
            return Err(Error::InvalidModel(format!(
                "dead time must be finite and >= 0, got {dead_time}"
            )));
        }
        Ok(Self {
            num,
            den,
            dead_time,
        })
    }

    pub fn rational(num: Polynomial, den: Polynomial) -> Result<Self> {
        Self::new(num, den, 0.0)
    }

    pub fn from_coeffs(num: &[f64], den: &[f64], dead_time: f64) -> Result<Self> {
        Self::new(Polynomial::new(num)?, Polynomial::new(den)?, dead_time)
    }

    pub fn gain(k: f64) -> Self {
        Self::new(Polynomial::constant(k), Polynomial::one(), 0.0).expect("valid gain")
    }

    pub fn delay(dead_time: f64) -> Result<Self> {
        Self::new(Polynomial::one(), Polynomial::one(), dead_time)
    }

    pub fn relative_degree(&self) -> isize {
        self.den.degree() as isize - self.num.degree() as isize
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.relative_degree() >= 0
    }

    pub fn ensure_proper(&self) -> Result<()> {
        if self.is_proper() {
            Ok(())
        } else {
            Err(Error::ImproperSystem {
                num: self.num.degree(),
                den: self.den.degree(),
            })
        }
    }

    /// `G(s)` at an arbitrary complex point.
    pub fn eval_s(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval(s);
        if d.norm() <= 4.0 * f64::EPSILON * self.den.eval_scale(s) {
            return Err(Error::PoleOnAxis { omega: s.im });
        }
        let mut v = self.num.eval(s) / d;
        if self.dead_time > 0.0 {
            v *= (-s * self.dead_time).exp();
        }
        Ok(v)
    }

    /// Frequency response `G(jω)`.
    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        self.eval_s(Complex64::new(0.0, omega))
    }

    /// Series connection; no pole-zero cancellation is attempted.
    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
            dead_time: self.dead_time + other.dead_time,
        }
    }

    /// The gain term `a = lim s G(s)` of the Bode integral: nonzero only for
    /// relative degree one without dead time.
    pub fn bode_gain_a(&self) -> Result<f64> {
        self.ensure_proper()?;
        if self.num.is_zero() {
            return Ok(0.0);
        }
        let r = self.relative_degree();
        if self.dead_time > 0.0 || r >= 2 {
            return Ok(0.0);
        }
        if r == 0 {
            return Err(Error::NonconvergentIntegral(
                "relative degree 0 without dead time: ln|g| does not decay".into(),
            ));
        }
        Ok(self.num.leading() / self.den.leading())
    }

    /// Coefficients `c_k` of the expansion `num/den = Σ_k c_k s^{-k}` about
    /// `s = ∞`, for `k = 0..terms`.
    pub fn laurent_at_infinity(&self, terms: usize) -> Vec<f64> {
        let mut out = vec![0.0; terms];
        if self.num.is_zero() {
            return out;
        }
        let n = self.num.degree();
        let d = self.den.degree();
        if n > d {
            return out;
        }
        let shift = d - n;
        // In w = 1/s: num/den = w^shift * A(w)/B(w), A and B the reversed coefficient lists.
        let a: Vec<f64> = self.num.coeffs().iter().rev().copied().collect();
        let b: Vec<f64> = self.den.coeffs().iter().rev().copied().collect();
        let mut series = vec![0.0; terms.saturating_sub(shift)];
        for m in 0..series.len() {
            let mut acc = a.get(m).copied().unwrap_or(0.0);
            for j in 1..=m.min(b.len() - 1) {
                acc -= b[j] * series[m - j];
            }
            series[m] = acc / b[0];
        }
        for (m, c) in series.into_iter().enumerate() {
            out[m + shift] = c;
        }
        out
    }

    /// Largest modulus among poles and zeros, or 0 when there are none.
    pub fn characteristic_frequency(&self) -> f64 {
        let mut m = 0.0_f64;
        for p in [&self.num, &self.den] {
            if p.degree() > 0 {
                if let Ok(rs) = super::poly_roots(p, 1e-6) {
                    m = m.max(rs.max_modulus());
                }
            }
        }
        m
    }
}

/// A sum of delayed rational terms, `Σ_i N_i(s)/D_i(s) · exp(-τ_i s)`.
///
/// Plain loops `G = G_c G_p` are a single term; the compensated forward path
/// `(1 - κ + G)/κ` needs two terms when `G` carries dead time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenLoop {
    pub terms: Vec<TransferFunction>,
}

impl From<TransferFunction> for OpenLoop {
    fn from(tf: TransferFunction) -> Self {
        Self { terms: vec![tf] }
    }
}

impl OpenLoop {
    pub fn new(terms: Vec<TransferFunction>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidModel(
                "open loop needs at least one term".into(),
            ));
        }
        Ok(Self { terms })
    }

    pub fn eval_s(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.eval_s(s)?;
        }
        Ok(acc)
    }

    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        self.eval_s(Complex64::new(0.0, omega))
    }

    /// The single rational-plus-delay term, when there is exactly one.
    pub fn as_single(&self) -> Option<&TransferFunction> {
        match self.terms.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }

    pub fn ensure_proper(&self) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.ensure_proper())
    }

    pub fn max_dead_time(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.dead_time))
    }

    /// Minimum relative degree across terms.
    pub fn relative_degree(&self) -> isize {
        self.terms
            .iter()
            .filter(|t| !t.num.is_zero())
            .map(|t| t.relative_degree())
            .min()
            .unwrap_or(isize::MAX)
    }

    /// Bode gain term of the sum: contributions from undelayed relative-degree-one terms.
    pub fn bode_gain_a(&self) -> Result<f64> {
        let mut a = 0.0;
        for t in &self.terms {
            a += t.bode_gain_a()?;
        }
        Ok(a)
    }

    pub fn characteristic_frequency(&self) -> f64 {
        self.terms
            .iter()
            .fold(0.0, |m, t| m.max(t.characteristic_frequency()))
    }

    /// High-frequency expansion as `(delay, [c_0, c_1, ...])` pairs.
    pub fn asymptotic_terms(&self, order: usize) -> Vec<(f64, Vec<f64>)> {
        self.terms
            .iter()
            .map(|t| (t.dead_time, t.laurent_at_infinity(order)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(num: &[f64], den: &[f64], td: f64) -> TransferFunction {
        TransferFunction::from_coeffs(num, den, td).unwrap()
    }

    #[test]
    fn first_order_lag_at_unit_frequency() {
        let g = tf(&[1.0], &[1.0, 1.0], 0.0);
        let v = g.eval(1.0).unwrap();
        assert!((v - Complex64::new(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn pure_delay_is_all_pass() {
        let d = TransferFunction::delay(0.939).unwrap();
        for w in [0.0, 0.1, 1.0, 17.3, 1e4] {
            assert!((d.eval(w).unwrap().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pole_on_axis_is_reported() {
        let g = tf(&[1.0], &[0.0, 1.0], 0.0);
        assert_eq!(g.eval(0.0), Err(Error::PoleOnAxis { omega: 0.0 }));
        let h = tf(&[1.0], &[4.0, 0.0, 1.0], 0.0);
        assert!(matches!(h.eval(2.0), Err(Error::PoleOnAxis { .. })));
    }

    #[test]
    fn series_composition() {
        let a = tf(&[1.0], &[1.0, 1.0], 0.0);
        let b = tf(&[1.0], &[2.0, 1.0], 0.0);
        let ab = a.series(&b);
        assert_eq!(ab.den.coeffs(), &[2.0, 3.0, 1.0]);
        assert_eq!(ab.num.coeffs(), &[1.0]);
        let id = a.series(&TransferFunction::gain(1.0));
        assert_eq!(id, a);
    }

    #[test]
    fn bode_gain_term() {
        assert_eq!(tf(&[2.0], &[1.0, 1.0], 0.0).bode_gain_a().unwrap(), 2.0);
        assert_eq!(
            tf(&[1.0], &[1.0, 2.0, 1.0], 0.0).bode_gain_a().unwrap(),
            0.0
        );
        assert_eq!(
            tf(&[1.0, 1.0], &[1.0, 1.0, 1.0], 0.5)
                .bode_gain_a()
                .unwrap(),
            0.0
        );
        assert!(matches!(
            tf(&[1.0, 1.0, 1.0], &[1.0, 1.0], 0.0).bode_gain_a(),
            Err(Error::ImproperSystem { .. })
        ));
        assert!(matches!(
            tf(&[1.0, 1.0], &[1.0, 1.0], 0.0).bode_gain_a(),
            Err(Error::NonconvergentIntegral(_))
        ));
    }

    #[test]
    fn laurent_expansion_of_simple_lag() {
        // 2/(s+1) = 2/s - 2/s^2 + 2/s^3 - ...
        let c = tf(&[2.0], &[1.0, 1.0], 0.0).laurent_at_infinity(4);
        assert_eq!(c, vec![0.0, 2.0, -2.0, 2.0]);
        // (s+3)/(s+1) = 1 + 2/s - 2/s^2
        let c = tf(&[3.0, 1.0], &[1.0, 1.0], 0.0).laurent_at_infinity(3);
        assert_eq!(c, vec![1.0, 2.0, -2.0]);
    }
}
