//! Sensitivity functions `g = 1/(1 + G)`, their right-half-plane singular
//! sets, the all-pass factor κ and the modified (compensated) loop.

mod allpass;
mod closed_loop;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use allpass::{all_pass_kappa, AllPass};
pub use closed_loop::{
    characteristic_polynomial, closed_loop_rhp_poles, nyquist_rhp_count, pade_delay, WindingReport,
};

use crate::error::{Error, Result};
use crate::lti::{
    poly_roots_with_axis_tol, OpenLoop, Polynomial, RootSet, TransferFunction, DEFAULT_RHP_TOL,
    DEFAULT_ROOT_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityKind {
    Plain,
    Modified,
}

/// Settings for building a sensitivity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    pub pade_order: usize,
    pub rhp_tol: f64,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            pade_order: 6,
            rhp_tol: DEFAULT_RHP_TOL,
        }
    }
}

/// `g(s) = κ(s)/(1 + G(s))` with its classified singular sets.
///
/// For a plain model κ ≡ 1. `alpha` holds the NMP zeros of `g` (RHP poles of
/// `G`), `beta` the RHP poles of `g` and `zeta` the NMP zeros of `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityModel {
    pub open_loop: OpenLoop,
    pub kind: SensitivityKind,
    pub alpha: RootSet,
    pub beta: RootSet,
    pub zeta: RootSet,
    pub kappa: AllPass,
}

impl SensitivityModel {
    /// `g(s)` anywhere off the singular sets.
    pub fn eval_s(&self, s: Complex64) -> Result<Complex64> {
        let one_plus = Complex64::new(1.0, 0.0) + self.open_loop.eval_s(s)?;
        if one_plus.norm() <= 1e-14 {
            return Err(Error::MarginallyStableLoop { omega: s.im });
        }
        let k = if self.kappa.is_identity() {
            Complex64::new(1.0, 0.0)
        } else {
            self.kappa.eval_s(s)?
        };
        Ok(k / one_plus)
    }

    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        self.eval_s(Complex64::new(0.0, omega))
    }

    /// `ln|g(jω)|`. Axis poles of `G` are zeros of `g` and give `-inf`.
    pub fn ln_mag(&self, omega: f64) -> Result<f64> {
        match self.eval(omega) {
            Ok(v) => Ok(v.norm().ln()),
            Err(Error::PoleOnAxis { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }

    pub fn max_dead_time(&self) -> f64 {
        self.open_loop.max_dead_time()
    }

    /// Largest pole/zero modulus of the loop and of κ.
    pub fn characteristic_frequency(&self) -> f64 {
        let k = self
            .kappa
            .poles()
            .iter()
            .fold(0.0_f64, |m, p| m.max(p.norm()));
        self.open_loop.characteristic_frequency().max(k)
    }
}

fn rhp_of(p: &Polynomial, rhp_tol: f64) -> Result<RootSet> {
    if p.degree() == 0 {
        return Ok(RootSet::empty());
    }
    Ok(poly_roots_with_axis_tol(p, DEFAULT_ROOT_TOL, rhp_tol)?.rhp_subset())
}

fn merge(sets: Vec<RootSet>, tol: f64) -> RootSet {
    RootSet::classify(sets.into_iter().flat_map(|s| s.roots).collect(), tol)
}

/// Builds the plain sensitivity function of the loop `G`.
pub fn make_sensitivity(
    open_loop: impl Into<OpenLoop>,
    cfg: &ShapingConfig,
) -> Result<SensitivityModel> {
    let open_loop = open_loop.into();
    open_loop.ensure_proper()?;
    let alpha = merge(
        open_loop
            .terms
            .iter()
            .map(|t| rhp_of(&t.den, cfg.rhp_tol))
            .collect::<Result<_>>()?,
        cfg.rhp_tol,
    );
    let zeta = match open_loop.as_single() {
        Some(t) => rhp_of(&t.num, cfg.rhp_tol)?,
        // zeros of a sum of delayed terms are not polynomial roots
        None if open_loop.max_dead_time() == 0.0 => rhp_of(
            &characteristic_polynomial(&open_loop, 0).sub(&common_den(&open_loop)),
            cfg.rhp_tol,
        )?,
        None => RootSet::empty(),
    };
    let beta = closed_loop_rhp_poles(&open_loop, cfg.pade_order, cfg.rhp_tol)?;
    Ok(SensitivityModel {
        open_loop,
        kind: SensitivityKind::Plain,
        alpha,
        beta,
        zeta,
        kappa: AllPass::identity(),
    })
}

fn common_den(open_loop: &OpenLoop) -> Polynomial {
    open_loop
        .terms
        .iter()
        .fold(Polynomial::one(), |acc, t| acc.mul(&t.den))
}

/// `g̃ = κ g`, with κ built from the model's α and β. The result is analytic
/// in the closed RHP; its magnitude on the axis equals that of `g`.
pub fn modified_sensitivity(m: &SensitivityModel) -> Result<SensitivityModel> {
    if m.kind != SensitivityKind::Plain {
        return Err(Error::InvalidArgument(
            "modified_sensitivity expects a plain model".into(),
        ));
    }
    let kappa = all_pass_kappa(&m.alpha.roots, &m.beta.roots)?;
    Ok(SensitivityModel {
        open_loop: m.open_loop.clone(),
        kind: SensitivityKind::Modified,
        alpha: RootSet::classify(Vec::new(), m.alpha.tol),
        beta: RootSet::classify(Vec::new(), m.beta.tol),
        zeta: m.zeta.clone(),
        kappa,
    })
}

/// Splits the α poles of κ off its denominator; returns `(α part, rest)`.
fn kappa_den_parts(kappa: &AllPass) -> (Polynomial, Polynomial) {
    let rest: Vec<Complex64> = kappa.beta.iter().map(|b| -b.conj()).collect();
    (
        Polynomial::from_roots(&kappa.alpha),
        Polynomial::from_roots(&rest),
    )
}

/// `G/κ` as a single delayed rational term: the RHP poles `α` of `G` are
/// reflected to `-ᾱ` and the closed-loop RHP poles enter as zeros at `-β̄`.
/// The dead time stays inside the loop.
pub fn compensated_loop(g: &TransferFunction, kappa: &AllPass) -> Result<TransferFunction> {
    if kappa.is_identity() {
        return Ok(g.clone());
    }
    let (_, rest) = kappa_den_parts(kappa);
    let den = g
        .den
        .deflate(&kappa.alpha, 1e-8)
        .map_err(|e| e.context("kappa alpha set is not a subset of the loop poles"))?;
    let num = g.num.mul(&rest);
    TransferFunction::new(num, den.mul(&kappa.numerator()), g.dead_time)
}

/// The modified forward path `G̃ = (1 − κ + G)/κ`, returned as the two-term
/// sum `G/κ + (1/κ − 1)` so that `1/(1 + G̃) = κ g` holds exactly even when
/// `G` carries dead time.
pub fn modified_forward_path(g: &TransferFunction, kappa: &AllPass) -> Result<OpenLoop> {
    if kappa.is_identity() {
        return Ok(OpenLoop::from(g.clone()));
    }
    for z in kappa.poles() {
        if z.re < 0.0 {
            let v = Complex64::new(1.0, 0.0)
                + g.eval_s(z).unwrap_or(Complex64::new(f64::INFINITY, 0.0));
            if v.norm() <= 1e-9 {
                return Err(Error::DegenerateCompensation { re: z.re, im: z.im });
            }
        }
    }
    let first = compensated_loop(g, kappa)?;
    let kn = kappa.numerator();
    let kd = kappa.denominator();
    let second = TransferFunction::rational(kd.sub(&kn), kn)?;
    OpenLoop::new(vec![first, second])
}

/// How a singular point was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularStrategy {
    Explicit,
    OpenLoopNmpZero,
    DelayHeuristic,
}

/// Point `σ + jη` in the open RHP where the weighted integral is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub sigma: f64,
    pub eta: f64,
    pub strategy: SingularStrategy,
}

impl SingularPoint {
    pub fn new(sigma: f64, eta: f64, strategy: SingularStrategy) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() || !eta.is_finite() {
            return Err(Error::InvalidSingularPoint { sigma });
        }
        Ok(Self {
            sigma,
            eta,
            strategy,
        })
    }

    pub fn explicit(sigma: f64, eta: f64) -> Result<Self> {
        Self::new(sigma, eta, SingularStrategy::Explicit)
    }

    /// `σ = 2/t_d`, the zero of the first-order Padé surrogate of the delay.
    pub fn delay_heuristic(dead_time: f64) -> Result<Self> {
        if !(dead_time > 0.0) {
            return Err(Error::InvalidArgument(
                "delay heuristic needs a positive dead time".into(),
            ));
        }
        Self::new(2.0 / dead_time, 0.0, SingularStrategy::DelayHeuristic)
    }

    pub fn s(&self) -> Complex64 {
        Complex64::new(self.sigma, self.eta)
    }
}

/// NMP open-loop zero of smallest modulus, else the delay heuristic.
pub fn default_singular_point(m: &SensitivityModel) -> Result<SingularPoint> {
    if let Some(z) = m
        .zeta
        .roots
        .iter()
        .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
    {
        // pick the upper member of a conjugate pair for determinism
        return SingularPoint::new(z.re, z.im.abs(), SingularStrategy::OpenLoopNmpZero);
    }
    if m.max_dead_time() > 0.0 {
        return SingularPoint::delay_heuristic(m.max_dead_time());
    }
    Err(Error::InvalidArgument(
        "loop has no NMP zero and no dead time: an explicit singular point is required".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{pid, Polynomial};

    fn sopdt_loop() -> TransferFunction {
        let plant = TransferFunction::new(
            Polynomial::one(),
            Polynomial::linear(-1.0, 5.0).mul(&Polynomial::linear(1.0, 2.07)),
            0.939,
        )
        .unwrap();
        pid(6.7051, 5.4738, 1.333).unwrap().series(&plant)
    }

    #[test]
    fn sopdt_sets() {
        let m = make_sensitivity(sopdt_loop(), &ShapingConfig::default()).unwrap();
        assert_eq!(m.alpha.len(), 1);
        assert!((m.alpha.roots[0].re - 0.2).abs() < 1e-12);
        assert!(m.zeta.is_empty());
        assert!(m.beta.is_empty());
    }

    #[test]
    fn modified_has_same_magnitude() {
        let m = make_sensitivity(sopdt_loop(), &ShapingConfig::default()).unwrap();
        let mm = modified_sensitivity(&m).unwrap();
        assert!(mm.alpha.is_empty() && mm.beta.is_empty());
        for w in [0.01, 0.3, 1.0, 5.0] {
            let a = m.eval(w).unwrap().norm();
            let b = mm.eval(w).unwrap().norm();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn forward_path_identity() {
        let g = sopdt_loop();
        let m = make_sensitivity(g.clone(), &ShapingConfig::default()).unwrap();
        let mm = modified_sensitivity(&m).unwrap();
        let gt = modified_forward_path(&g, &mm.kappa).unwrap();
        for k in 0..50 {
            let w = 10f64.powf(-3.0 + 5.0 * k as f64 / 49.0);
            let lhs = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + gt.eval(w).unwrap());
            let rhs = mm.eval(w).unwrap();
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm(), "w = {w}");
        }
        for t in &gt.terms {
            let r = poly_roots_with_axis_tol(&t.den, 1e-9, 1e-9).unwrap();
            assert!(r.rhp.is_empty());
        }
    }

    #[test]
    fn compensated_loop_reflects_unstable_pole() {
        let g = sopdt_loop();
        let kappa = all_pass_kappa(&[Complex64::new(0.2, 0.0)], &[]).unwrap();
        let c = compensated_loop(&g, &kappa).unwrap();
        let r = poly_roots_with_axis_tol(&c.den, 1e-9, 1e-9).unwrap();
        assert!(r.rhp.is_empty());
        assert!(r.roots.iter().any(|z| (z.re + 0.2).abs() < 1e-9));
        // |G/κ| = |G| on the axis
        for w in [0.1, 1.0, 3.0] {
            assert!((c.eval(w).unwrap().norm() - g.eval(w).unwrap().norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_point_defaults() {
        let m = make_sensitivity(sopdt_loop(), &ShapingConfig::default()).unwrap();
        let sp = default_singular_point(&m).unwrap();
        assert_eq!(sp.strategy, SingularStrategy::DelayHeuristic);
        assert!((sp.sigma - 2.0 / 0.939).abs() < 1e-15);
        assert!(SingularPoint::explicit(0.0, 0.0).is_err());
    }
}
