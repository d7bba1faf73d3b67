use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real polynomial in `s`, coefficients in ascending powers (`coeffs[k]` multiplies `s^k`).
///
/// Trailing (highest-power) zeros are trimmed on construction, so the last
/// coefficient is nonzero unless the polynomial is identically zero, in which
/// case it is stored as `[0.0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coeffs = coeffs.into();
        if coeffs.is_empty() {
            return Err(Error::InvalidModel(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel(
                "non-finite polynomial coefficient".into(),
            ));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Self {
            coeffs: vec![0.0, 1.0],
        }
    }

    /// `c0 + c1 s`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::new(vec![c0, c1]).expect("finite coefficients")
    }

    /// Monic real polynomial with the given roots. Complex roots must come
    /// with their conjugates; the imaginary part of the product is dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, a) in acc.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect::<Vec<_>>()).expect("finite roots")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// Evaluation at `s = jω`.
    pub fn eval_jw(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    /// `Σ |c_k| |s|^k`, the natural scale for judging cancellation in `eval`.
    pub fn eval_scale(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        let d: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        Self::new(d).expect("finite")
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>()).expect("finite")
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out).expect("finite")
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let out: Vec<f64> = (0..n)
            .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + other.coeffs.get(k).unwrap_or(&0.0))
            .collect();
        Self::new(out).expect("finite")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Polynomial obtained by substituting `s -> -s`.
    pub fn mirror(&self) -> Self {
        let c: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 1 { -c } else { *c })
            .collect();
        Self::new(c).expect("finite")
    }

    /// Exact division by the monic polynomial with the given roots.
    ///
    /// The roots must be roots of `self` (conjugates included); the relative
    /// remainder is checked against `tol`.
    pub fn deflate(&self, roots: &[Complex64], tol: f64) -> Result<Self> {
        let divisor = Self::from_roots(roots);
        let (q, r) = self.div_rem(&divisor);
        let scale = self.max_abs_coeff().max(f64::MIN_POSITIVE);
        if r.max_abs_coeff() > tol * scale {
            return Err(Error::InvalidModel(format!(
                "deflation remainder {:.3e} exceeds tolerance",
                r.max_abs_coeff() / scale
            )));
        }
        Ok(q)
    }

    /// Polynomial long division; returns `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let n = self.degree();
        let d = divisor.degree();
        if n < d {
            return (Self::constant(0.0), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; n - d + 1];
        let lead = divisor.leading();
        for k in (0..=n - d).rev() {
            let q = rem[k + d] / lead;
            quot[k] = q;
            for (j, c) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * c;
            }
            rem[k + d] = 0.0;
        }
        rem.truncate(d.max(1));
        (
            Self::new(quot).expect("finite"),
            Self::new(rem).expect("finite"),
        )
    }

    /// Number of trailing zero coefficients at the low end, i.e. the
    /// multiplicity of the root at `s = 0`.
    pub fn zero_root_multiplicity(&self) -> usize {
        if self.is_zero() {
            return 0;
        }
        self.coeffs.iter().take_while(|c| **c == 0.0).count()
    }
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Polynomial::new(v)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if *c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}s")?,
                _ => write!(f, "{a}s^{k}")?,
            }
            first = false;
        }
        Ok(())
    }
}
