//! Poisson-weighted and unweighted (Bode) integrals of `ln|g(jω)|`, with the
//! matching analytic right-hand sides.

mod quad;
mod special;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use quad::{gk15, integrate_adaptive, QuadOutcome};
pub use special::{cisi, cos_over_t2_tail, si_complement, sin_over_t_tail};

use crate::error::{Error, Result};
use crate::lti::{poly_roots, OpenLoop};
use crate::shaping::{SensitivityKind, SensitivityModel, SingularPoint, SingularStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Upper limit of the Bode quadrature; the rest is handled analytically.
    pub bode_omega_max: Option<f64>,
    pub pade_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-6,
            max_panels: 200_000,
            bode_omega_max: None,
            pade_order: 6,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_panels < 16 {
            return Err(Error::InvalidArgument(
                "max_panels must be at least 16".into(),
            ));
        }
        if let Some(w) = self.bode_omega_max {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bode_omega_max must be positive, got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// Numerical left-hand side against its analytic value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub lhs_numeric: f64,
    pub rhs_analytic: f64,
    pub residual: f64,
    /// Bound on the truncated tail.
    pub tail_bound: f64,
    /// Quadrature error estimate on the computed part.
    pub quad_error: f64,
    pub panels_used: usize,
}

impl IntegralResult {
    fn new(q: &Quadrature, rhs: f64) -> Self {
        Self {
            lhs_numeric: q.value,
            rhs_analytic: rhs,
            residual: q.value - rhs,
            tail_bound: q.tail_bound,
            quad_error: q.error,
            panels_used: q.panels,
        }
    }
}

/// A numerically evaluated integral with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub tail_bound: f64,
    pub panels: usize,
    /// Frequency where the quadrature stopped and the tail began.
    pub omega_cut: f64,
}

/// Sum of `|N_i(jω)/D_i(jω)|`: a delay-free envelope of `|G(jω)|`.
fn envelope(open_loop: &OpenLoop, omega: f64) -> f64 {
    let s = Complex64::new(0.0, omega);
    open_loop
        .terms
        .iter()
        .map(|t| (t.num.eval(s) / t.den.eval(s)).norm())
        .sum()
}

fn axis_pole_frequencies(open_loop: &OpenLoop) -> Vec<f64> {
    let mut out = Vec::new();
    for t in &open_loop.terms {
        if t.den.degree() == 0 {
            continue;
        }
        if let Ok(rs) = poly_roots(&t.den, 1e-9) {
            out.extend(rs.on_axis_roots().iter().map(|r| r.im));
        }
    }
    out
}

fn ln_mag_checked(m: &SensitivityModel, omega: f64) -> Result<f64> {
    let v = m.ln_mag(omega)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::AxisZeroDetected { omega })
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
    v
}

/// Number of uniform panels needed to put eight panels in every delay period
/// on `[0, omega]`.
fn delay_panels(tau: f64, omega: f64) -> usize {
    if tau > 0.0 {
        (8.0 * tau * omega / (2.0 * PI)).ceil() as usize
    } else {
        0
    }
}

/// Tail bound of the Poisson integral beyond `|ω − η| > Ω − |η|` on both sides.
fn poisson_tail(m: &SensitivityModel, sp: &SingularPoint, omega: f64) -> Option<f64> {
    let eta = sp.eta.abs();
    if omega <= eta {
        return None;
    }
    let rd = m.open_loop.relative_degree();
    let mut m1 = 0.0_f64;
    let mut l0 = 0.0_f64;
    for k in 0..=16 {
        let w = omega * 2f64.powf(k as f64 / 2.0);
        let e = envelope(&m.open_loop, w);
        if e >= 0.9 {
            return None;
        }
        // |ln|1 + G|| <= -ln(1 - |G|)
        let l = -(1.0 - e).ln();
        l0 = l0.max(l);
        m1 = m1.max(w * l);
    }
    if rd >= 1 {
        Some(2.0 * 1.5 * m1 * sp.sigma / (omega * (omega - eta)))
    } else {
        Some(2.0 * l0 * (FRAC_PI_2 - ((omega - eta) / sp.sigma).atan()))
    }
}

fn poisson_cutoff(m: &SensitivityModel, sp: &SingularPoint, cfg: &QuadratureConfig) -> (f64, f64) {
    let tau = m.max_dead_time();
    let mut omega = (sp.eta.abs() + 10.0 * sp.sigma)
        .max(100.0 * m.characteristic_frequency())
        .max(10.0);
    let budget = cfg.max_panels / 4;
    let mut best = (omega, f64::INFINITY);
    for _ in 0..80 {
        if let Some(t) = poisson_tail(m, sp, omega) {
            best = (omega, t);
            if t <= 0.25 * cfg.abs_tol {
                break;
            }
        }
        let next = omega * 1.5;
        if 2 * delay_panels(tau, next) > budget {
            break;
        }
        omega = next;
    }
    if !best.1.is_finite() {
        best = (omega, poisson_tail(m, sp, omega).unwrap_or(f64::INFINITY));
    }
    best
}

/// Breakpoints in `θ`, where `ω = η + σ tan θ`, covering `ω ∈ [lo, hi]`.
fn poisson_breaks(m: &SensitivityModel, sp: &SingularPoint, lo: f64, hi: f64) -> Vec<f64> {
    let theta = |w: f64| ((w - sp.eta) / sp.sigma).atan();
    let (t0, t1) = (theta(lo), theta(hi));
    let mut pts: Vec<f64> = (0..=64).map(|k| t0 + (t1 - t0) * k as f64 / 64.0).collect();
    let mut special = vec![0.0, sp.eta];
    special.extend(axis_pole_frequencies(&m.open_loop));
    for w in special {
        if w > lo && w < hi {
            pts.push(theta(w));
        }
    }
    let tau = m.max_dead_time();
    if tau > 0.0 {
        let step = 2.0 * PI / tau / 8.0;
        let k0 = (lo / step).ceil() as i64;
        let k1 = (hi / step).floor() as i64;
        for k in k0..=k1 {
            pts.push(theta(k as f64 * step));
        }
    }
    // log-spaced points around the anchor keep panels small where |g| varies
    let scale = m.characteristic_frequency().max(sp.sigma);
    for k in -40..=40 {
        let d = scale * 10f64.powf(k as f64 / 8.0);
        for w in [sp.eta + d, sp.eta - d] {
            if w > lo && w < hi {
                pts.push(theta(w));
            }
        }
    }
    // endpoints are pinned: the uniform grid may round past them
    let mut out = vec![t0];
    out.extend(
        sorted_unique(pts)
            .into_iter()
            .filter(|t| *t > t0 && *t < t1),
    );
    out.push(t1);
    out
}

/// `∫ ln|g(jω)| σ/(σ² + (ω−η)²) dω` over the whole axis.
pub fn poisson_integral(
    m: &SensitivityModel,
    sp: &SingularPoint,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    cfg.validate()?;
    let (omega, tail) = poisson_cutoff(m, sp, cfg);
    let breaks = poisson_breaks(m, sp, -omega, omega);
    poisson_on(m, sp, cfg, &breaks, 1.0, tail, omega)
}

/// The same integral folded onto `ω ≥ 0` with a doubled kernel; only valid
/// for a real singular point, where the integrand is even.
pub fn poisson_integral_half_line(
    m: &SensitivityModel,
    sp: &SingularPoint,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    cfg.validate()?;
    if sp.eta != 0.0 {
        return Err(Error::InvalidArgument(
            "half-line folding needs a real singular point".into(),
        ));
    }
    let (omega, tail) = poisson_cutoff(m, sp, cfg);
    let breaks = poisson_breaks(m, sp, 0.0, omega);
    poisson_on(m, sp, cfg, &breaks, 2.0, tail, omega)
}

fn poisson_on(
    m: &SensitivityModel,
    sp: &SingularPoint,
    cfg: &QuadratureConfig,
    breaks: &[f64],
    factor: f64,
    tail: f64,
    omega: f64,
) -> Result<Quadrature> {
    let f = |theta: f64| -> Result<f64> {
        let w = sp.eta + sp.sigma * theta.tan();
        Ok(factor * ln_mag_checked(m, w)?)
    };
    let out = integrate_adaptive(f, breaks, 0.5 * cfg.abs_tol, cfg.max_panels)?;
    // kernel mass beyond ±Ω times the mean of ln|g| there
    let mass = PI - ((omega - sp.eta) / sp.sigma).atan() - ((omega + sp.eta) / sp.sigma).atan();
    let tail_mean = asymptotic_log_mean(&m.open_loop);
    Ok(Quadrature {
        value: out.value + tail_mean * mass,
        error: out.error,
        tail_bound: tail,
        panels: out.panels,
        omega_cut: omega,
    })
}

/// Mean of `ln|g(jω)|` as `ω → ∞`. With `G(j∞) = A − 1 + Σ B_i e^{−jωτ_i}`
/// the delayed part averages out (Jensen) when `Σ|B_i| < |A|`; otherwise
/// no correction is attempted.
fn asymptotic_log_mean(open_loop: &OpenLoop) -> f64 {
    let mut a = 1.0;
    let mut b = 0.0;
    for (delay, c) in open_loop.asymptotic_terms(1) {
        if delay > 0.0 {
            b += c[0].abs();
        } else {
            a += c[0];
        }
    }
    if a != 0.0 && b < a.abs() {
        -a.abs().ln()
    } else {
        0.0
    }
}

fn check_coincidence(s0: Complex64, roots: &[Complex64]) -> Result<()> {
    for r in roots {
        if (s0 - r).norm() <= 1e-12 * (1.0 + r.norm()) {
            return Err(Error::SingularCoincidence);
        }
    }
    Ok(())
}

/// `Σ ln|(s0−α)/(s0+ᾱ)| + Σ ln|(s0+β̄)/(s0−β)|`.
pub fn blaschke_log_sum(s0: Complex64, alpha: &[Complex64], beta: &[Complex64]) -> Result<f64> {
    check_coincidence(s0, alpha)?;
    check_coincidence(s0, beta)?;
    let a: f64 = alpha
        .iter()
        .map(|a| ((s0 - a) / (s0 + a.conj())).norm().ln())
        .sum();
    let b: f64 = beta
        .iter()
        .map(|b| ((s0 + b.conj()) / (s0 - b)).norm().ln())
        .sum();
    Ok(a + b)
}

/// Analytic value of the Poisson integral.
///
/// Plain model: `−π(−ln|g(s0)| + Σ_α + Σ_β)`, with the `ln|g|` term dropped
/// when the point is an open-loop NMP zero (where `g = 1`). Modified model:
/// `π ln|g̃(s0)|`.
pub fn poisson_rhs(m: &SensitivityModel, sp: &SingularPoint) -> Result<f64> {
    let s0 = sp.s();
    match m.kind {
        SensitivityKind::Plain => {
            let sums = blaschke_log_sum(s0, &m.alpha.roots, &m.beta.roots)?;
            let g_term = if sp.strategy == SingularStrategy::OpenLoopNmpZero {
                0.0
            } else {
                -m.eval_s(s0)?.norm().ln()
            };
            // + 0.0 folds a signed zero
            Ok(-PI * (g_term + sums) + 0.0)
        }
        SensitivityKind::Modified => {
            check_coincidence(s0, &m.kappa.alpha)?;
            check_coincidence(s0, &m.kappa.beta)?;
            Ok(PI * m.eval_s(s0)?.norm().ln())
        }
    }
}

/// Poisson integral together with its analytic value.
pub fn poisson_check(
    m: &SensitivityModel,
    sp: &SingularPoint,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    let rhs = poisson_rhs(m, sp)?;
    let q = poisson_integral(m, sp, cfg)?;
    Ok(IntegralResult::new(&q, rhs))
}

/// `−aπ/2 + πΣα − πΣβ`. For a modified model the gain term belongs to the
/// modified forward path, whose `a` absorbs κ's contribution, so the value is
/// the same as for the loop it was built from.
pub fn bode_rhs(m: &SensitivityModel) -> Result<f64> {
    let a = m.open_loop.bode_gain_a()?;
    let (alpha, beta) = match m.kind {
        SensitivityKind::Plain => (&m.alpha.roots, &m.beta.roots),
        SensitivityKind::Modified => (&m.kappa.alpha, &m.kappa.beta),
    };
    let sa: f64 = alpha.iter().map(|r| r.re).sum();
    let sb: f64 = beta.iter().map(|r| r.re).sum();
    Ok(-a * PI / 2.0 + PI * sa - PI * sb)
}

/// Second-order high-frequency model of `ln|g(jω)|`:
/// `−Re G + Re G²/2` with `G` truncated to its `1/s` and `1/s²` terms.
struct BodeTail {
    terms: Vec<(f64, f64, f64)>, // (delay, c1, c2)
}

impl BodeTail {
    fn new(open_loop: &OpenLoop) -> Result<Self> {
        let mut terms = Vec::new();
        for (tau, c) in open_loop.asymptotic_terms(3) {
            if c[0] != 0.0 {
                return Err(Error::NonconvergentIntegral(
                    "relative degree 0: ln|g| does not decay".into(),
                ));
            }
            terms.push((tau, c[1], c[2]));
        }
        Ok(Self { terms })
    }

    fn pointwise(&self, w: f64) -> f64 {
        let mut v = 0.0;
        for &(tau, c1, c2) in &self.terms {
            v += c1 * (tau * w).sin() / w + c2 * (tau * w).cos() / (w * w);
        }
        for &(ti, ci, _) in &self.terms {
            for &(tl, cl, _) in &self.terms {
                v -= 0.5 * ci * cl * ((ti + tl) * w).cos() / (w * w);
            }
        }
        v
    }

    fn integral_from(&self, w: f64) -> f64 {
        let mut v = 0.0;
        for &(tau, c1, c2) in &self.terms {
            v += c1 * sin_over_t_tail(tau, w) + c2 * cos_over_t2_tail(tau, w);
        }
        for &(ti, ci, _) in &self.terms {
            for &(tl, cl, _) in &self.terms {
                v -= 0.5 * ci * cl * cos_over_t2_tail(ti + tl, w);
            }
        }
        v
    }
}

fn bode_cutoff(m: &SensitivityModel, cfg: &QuadratureConfig) -> f64 {
    let mut w = match cfg.bode_omega_max {
        Some(w) => w,
        None => {
            let tau = m.max_dead_time();
            let mut w = (100.0 * m.characteristic_frequency()).max(10.0);
            if tau > 0.0 {
                w = w.max(200.0 * PI / tau);
            }
            w
        }
    };
    // the tail model needs |G| small
    while envelope(&m.open_loop, w) > 0.1 && w < 1e12 {
        w *= 2.0;
    }
    w
}

/// `∫_0^∞ ln|g(jω)| dω`: adaptive quadrature on `[0, ω_max]` plus the
/// closed-form integral of the asymptotic expansion beyond it.
pub fn bode_integral(m: &SensitivityModel, cfg: &QuadratureConfig) -> Result<Quadrature> {
    cfg.validate()?;
    let tail = BodeTail::new(&m.open_loop)?;
    let w_max = bode_cutoff(m, cfg);
    let tau = m.max_dead_time();
    let n = delay_panels(tau, w_max);
    if n > cfg.max_panels / 2 {
        return Err(Error::NonconvergentIntegral(format!(
            "{n} panels needed to resolve the delay up to omega = {w_max:.3e}"
        )));
    }
    let mut pts = vec![0.0, w_max];
    for k in 1..n {
        pts.push(w_max * k as f64 / n as f64);
    }
    let scale = m.characteristic_frequency().max(1e-6);
    for k in -48..=24 {
        let w = scale * 10f64.powf(k as f64 / 8.0);
        if w < w_max {
            pts.push(w);
        }
    }
    for w in axis_pole_frequencies(&m.open_loop) {
        if w > 0.0 && w < w_max {
            pts.push(w);
        }
    }
    if n == 0 {
        for k in 1..64 {
            pts.push(w_max * k as f64 / 64.0);
        }
    }
    let breaks = sorted_unique(pts);
    let out = integrate_adaptive(
        |w| ln_mag_checked(m, w),
        &breaks,
        0.5 * cfg.abs_tol,
        cfg.max_panels,
    )?;

    // Remainder of the expansion is O(ω⁻³); bound it from samples.
    let mut m3 = 0.0_f64;
    for k in 0..=400 {
        let w = w_max * 64f64.powf(k as f64 / 400.0);
        let r = m.ln_mag(w)? - tail.pointwise(w);
        m3 = m3.max(r.abs() * w.powi(3));
    }
    let tail_bound = m3 / (w_max * w_max);
    Ok(Quadrature {
        value: out.value + tail.integral_from(w_max),
        error: out.error,
        tail_bound,
        panels: out.panels,
        omega_cut: w_max,
    })
}

/// Bode integral together with its analytic value.
pub fn bode_check(m: &SensitivityModel, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    let rhs = bode_rhs(m)?;
    let q = bode_integral(m, cfg)?;
    Ok(IntegralResult::new(&q, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::TransferFunction;
    use crate::shaping::{make_sensitivity, ShapingConfig};

    fn model(num: &[f64], den: &[f64], td: f64) -> SensitivityModel {
        let g = TransferFunction::from_coeffs(num, den, td).unwrap();
        make_sensitivity(g, &ShapingConfig::default()).unwrap()
    }

    #[test]
    fn constant_loop_poisson() {
        // ln|g| = -ln 2 everywhere
        let m = model(&[1.0], &[1.0], 0.0);
        let sp = SingularPoint::explicit(1.3, 0.4).unwrap();
        let q = poisson_integral(&m, &sp, &QuadratureConfig::default()).unwrap();
        assert!((q.value + PI * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn bode_double_lag() {
        let m = model(&[1.0], &[1.0, 2.0, 1.0], 0.0);
        let r = bode_check(&m, &QuadratureConfig::default()).unwrap();
        assert!(r.lhs_numeric.abs() < 1e-4, "{r:?}");
        assert_eq!(r.rhs_analytic, 0.0);
    }

    #[test]
    fn bode_first_order_gain_term() {
        let m = model(&[2.0], &[1.0, 1.0], 0.0);
        let r = bode_check(&m, &QuadratureConfig::default()).unwrap();
        assert!((r.rhs_analytic + PI).abs() < 1e-15);
        assert!(r.residual.abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn bode_with_delay() {
        // 0.5 e^{-s}/(s+1): stable, relative degree 1 with delay, a = 0
        let m = model(&[0.5], &[1.0, 1.0], 1.0);
        let r = bode_check(&m, &QuadratureConfig::default()).unwrap();
        assert!(r.residual.abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn relative_degree_zero_diverges() {
        let m = model(&[0.5, 0.5], &[1.0, 1.0], 0.0);
        assert!(matches!(
            bode_integral(&m, &QuadratureConfig::default()),
            Err(Error::NonconvergentIntegral(_))
        ));
    }

    #[test]
    fn unstable_open_loop_poisson() {
        // G = 2/(s-1): alpha = {1}, closed loop stable
        let m = model(&[2.0], &[-1.0, 1.0], 0.0);
        let sp = SingularPoint::explicit(0.7, 0.3).unwrap();
        let r = poisson_check(&m, &sp, &QuadratureConfig::default()).unwrap();
        assert!(r.residual.abs() < 1e-6, "{r:?}");
        let r = bode_check(&m, &QuadratureConfig::default()).unwrap();
        // a = 2, alpha = 1: -π + π = 0
        assert!(r.residual.abs() < 1e-4, "{r:?}");
    }
}
