//! Right-half-plane roots of `1 + G(s)`.
//!
//! Without dead time these are roots of the characteristic polynomial. With
//! dead time `1 + G` is a quasi-polynomial: the roots are located on a Padé
//! surrogate and their count is certified by the argument principle applied
//! to `1 + G(jω)` along an indented Nyquist contour.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{poly_roots_with_axis_tol, OpenLoop, Polynomial, RootSet, DEFAULT_ROOT_TOL};

/// Diagonal Padé approximant of `exp(-tau s)` as `(numerator, denominator)`.
pub fn pade_delay(tau: f64, order: usize) -> (Polynomial, Polynomial) {
    if tau == 0.0 || order == 0 {
        return (Polynomial::one(), Polynomial::one());
    }
    let n = order;
    let mut c = vec![0.0; n + 1];
    // c_k = (2n-k)! n! / ((2n)! k! (n-k)!), built incrementally
    c[0] = 1.0;
    for k in 1..=n {
        c[k] = c[k - 1] * (n - k + 1) as f64 / (k as f64 * (2 * n - k + 1) as f64);
    }
    let den: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(k, ck)| ck * tau.powi(k as i32))
        .collect();
    let num: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(k, ck)| ck * (-tau).powi(k as i32))
        .collect();
    (
        Polynomial::new(num).expect("finite"),
        Polynomial::new(den).expect("finite"),
    )
}

/// Numerator of `1 + G(s)` over the common denominator, with each delay
/// replaced by its Padé surrogate of the given order.
pub fn characteristic_polynomial(open_loop: &OpenLoop, pade_order: usize) -> Polynomial {
    let parts: Vec<(Polynomial, Polynomial)> = open_loop
        .terms
        .iter()
        .map(|t| {
            let (pn, pd) = pade_delay(t.dead_time, pade_order);
            (t.num.mul(&pn), t.den.mul(&pd))
        })
        .collect();
    let common = parts
        .iter()
        .fold(Polynomial::one(), |acc, (_, d)| acc.mul(d));
    let mut total = common;
    for (i, (n, _)) in parts.iter().enumerate() {
        let others = parts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .fold(Polynomial::one(), |acc, (_, (_, d))| acc.mul(d));
        total = total.add(&n.mul(&others));
    }
    total
}

/// Outcome of the argument-principle count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    /// Zeros of `1 + G` in the open RHP.
    pub rhp_zeros: i64,
    /// Poles of `G` in the open RHP.
    pub open_loop_rhp_poles: usize,
    /// Total argument change of `1 + G` around the contour, in turns.
    pub turns: f64,
    /// Frequency where the axis traversal was truncated.
    pub omega_max: f64,
}

struct PhaseTracker<'a> {
    open_loop: &'a OpenLoop,
    total: f64,
    last: Option<Complex64>,
}

impl<'a> PhaseTracker<'a> {
    fn f(&self, s: Complex64) -> Result<Complex64> {
        let v = Complex64::new(1.0, 0.0) + self.open_loop.eval_s(s)?;
        if v.norm() == 0.0 || !v.re.is_finite() {
            return Err(Error::MarginallyStableLoop { omega: s.im });
        }
        Ok(v)
    }

    fn push(&mut self, v: Complex64) {
        if let Some(prev) = self.last {
            self.total += (v / prev).arg();
        }
        self.last = Some(v);
    }

    /// Follows `path(t)` for `t` in `[t0, t1]`, bisecting wherever the phase
    /// step between neighbours exceeds half a radian.
    fn follow<P>(&mut self, path: &P, ts: &[f64]) -> Result<()>
    where
        P: Fn(f64) -> Complex64,
    {
        let mut prev_t = ts[0];
        let mut prev_v = self.f(path(prev_t))?;
        self.push(prev_v);
        for &t in &ts[1..] {
            let v = self.f(path(t))?;
            self.refine(path, prev_t, prev_v, t, v, 0)?;
            prev_t = t;
            prev_v = v;
        }
        Ok(())
    }

    fn refine<P>(
        &mut self,
        path: &P,
        ta: f64,
        va: Complex64,
        tb: f64,
        vb: Complex64,
        depth: usize,
    ) -> Result<()>
    where
        P: Fn(f64) -> Complex64,
    {
        if (vb / va).arg().abs() <= 0.5 || depth >= 48 {
            self.push(vb);
            return Ok(());
        }
        let tm = 0.5 * (ta + tb);
        let vm = self.f(path(tm))?;
        self.refine(path, ta, va, tm, vm, depth + 1)?;
        self.refine(path, tm, vm, tb, vb, depth + 1)
    }
}

fn axis_pole_frequencies(open_loop: &OpenLoop, rhp_tol: f64) -> Result<Vec<f64>> {
    let mut freqs: Vec<f64> = Vec::new();
    for t in &open_loop.terms {
        if t.den.degree() == 0 {
            continue;
        }
        let rs = poly_roots_with_axis_tol(&t.den, DEFAULT_ROOT_TOL, rhp_tol)?;
        for r in rs.on_axis_roots() {
            freqs.push(r.im);
        }
    }
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    freqs.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    Ok(freqs)
}

fn open_loop_rhp_poles(open_loop: &OpenLoop, rhp_tol: f64) -> Result<usize> {
    let mut n = 0;
    for t in &open_loop.terms {
        if t.den.degree() > 0 {
            n += poly_roots_with_axis_tol(&t.den, DEFAULT_ROOT_TOL, rhp_tol)?
                .rhp
                .len();
        }
    }
    Ok(n)
}

/// Frequency beyond which `|G(jω)|` stays below a level strictly less than one.
fn truncation_frequency(open_loop: &OpenLoop) -> Result<f64> {
    let g_inf: f64 = open_loop
        .terms
        .iter()
        .map(|t| {
            if t.relative_degree() == 0 {
                (t.num.leading() / t.den.leading()).abs()
            } else {
                0.0
            }
        })
        .sum();
    if g_inf >= 1.0 {
        return Err(Error::InvalidModel(format!(
            "|G(j inf)| = {g_inf:.3} >= 1: neutral loop, closed-loop stability cannot be certified"
        )));
    }
    let level = 0.5_f64.max(0.5 * (1.0 + g_inf));
    let envelope = |w: f64| -> f64 {
        open_loop
            .terms
            .iter()
            .map(|t| {
                let s = Complex64::new(0.0, w);
                (t.num.eval(s) / t.den.eval(s)).norm()
            })
            .sum()
    };
    let mut omega = (10.0 * open_loop.characteristic_frequency()).max(1.0);
    for _ in 0..200 {
        if envelope(omega) < level && envelope(2.0 * omega) < level && envelope(8.0 * omega) < level
        {
            return Ok(omega);
        }
        omega *= 2.0;
    }
    Err(Error::InvalidModel(
        "open-loop magnitude does not settle below unity".into(),
    ))
}

/// Counts zeros of `1 + G(s)` in the open right half plane by the argument
/// principle. Imaginary-axis poles of `G` are excluded by small indentations.
pub fn nyquist_rhp_count(open_loop: &OpenLoop, rhp_tol: f64) -> Result<WindingReport> {
    let omega_max = truncation_frequency(open_loop)?;
    let poles = axis_pole_frequencies(open_loop, rhp_tol)?;
    let p = open_loop_rhp_poles(open_loop, rhp_tol)?;
    let scale = open_loop.characteristic_frequency().max(1e-3);
    let eps = 1e-7 * scale;
    let tau = open_loop.max_dead_time();

    let mut tracker = PhaseTracker {
        open_loop,
        total: 0.0,
        last: None,
    };

    let axis_points = |a: f64, b: f64, near_a: bool, near_b: bool| -> Vec<f64> {
        let len = b - a;
        let mut step = len / 400.0;
        if tau > 0.0 {
            step = step.min(2.0 * PI / tau / 16.0);
        }
        let n = ((len / step).ceil() as usize).clamp(2, 2_000_000);
        let mut pts: Vec<f64> = (0..=n).map(|k| a + len * k as f64 / n as f64).collect();
        // geometric clustering towards indented poles
        let per_decade = 40.0;
        if near_a || near_b {
            let decades = (len / eps).log10().max(0.0);
            let m = (decades * per_decade).ceil() as usize;
            for k in 0..=m {
                let d = eps * 10f64.powf(k as f64 / per_decade);
                if d >= len {
                    break;
                }
                if near_a {
                    pts.push(a + d);
                }
                if near_b {
                    pts.push(b - d);
                }
            }
        }
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup();
        pts
    };

    let mut start = -omega_max;
    let mut start_near = false;
    let inside: Vec<f64> = poles.into_iter().filter(|w| w.abs() < omega_max).collect();
    for wp in &inside {
        let end = wp - eps;
        if end > start {
            let pts = axis_points(start, end, start_near, true);
            tracker.follow(&|w: f64| Complex64::new(0.0, w), &pts)?;
        }
        // right-hand semicircle around j*wp
        let phis: Vec<f64> = (0..=64).map(|k| -PI / 2.0 + PI * k as f64 / 64.0).collect();
        let centre = Complex64::new(0.0, *wp);
        tracker.follow(&|phi: f64| centre + Complex64::from_polar(eps, phi), &phis)?;
        start = wp + eps;
        start_near = true;
    }
    let pts = axis_points(start, omega_max, start_near, false);
    tracker.follow(&|w: f64| Complex64::new(0.0, w), &pts)?;

    let end_arg = tracker.last.expect("path has points").arg();
    let turns = (tracker.total - 2.0 * end_arg) / (2.0 * PI);
    let rhp_zeros = p as i64 - turns.round() as i64;
    Ok(WindingReport {
        rhp_zeros,
        open_loop_rhp_poles: p,
        turns,
        omega_max,
    })
}

/// RHP zeros of `1 + G` (the RHP poles of the sensitivity function).
pub fn closed_loop_rhp_poles(
    open_loop: &OpenLoop,
    pade_order: usize,
    rhp_tol: f64,
) -> Result<RootSet> {
    let delayed = open_loop.max_dead_time() > 0.0;
    let chi = characteristic_polynomial(open_loop, if delayed { pade_order } else { 0 });
    let roots = if chi.degree() == 0 {
        RootSet::empty()
    } else {
        poly_roots_with_axis_tol(&chi, 1e-6, rhp_tol)?
    };
    let candidates = roots.rhp_subset();
    if !delayed {
        return Ok(candidates);
    }
    let winding = nyquist_rhp_count(open_loop, rhp_tol)?;
    if winding.rhp_zeros != candidates.len() as i64 {
        return Err(Error::UnresolvedClosedLoopPoles {
            pade: candidates.len(),
            winding: winding.rhp_zeros,
        });
    }
    Ok(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::TransferFunction;

    #[test]
    fn pade_first_order() {
        let (n, d) = pade_delay(2.0, 1);
        // (1 - s)/(1 + s) for tau = 2
        assert_eq!(n.coeffs(), &[1.0, -1.0]);
        assert_eq!(d.coeffs(), &[1.0, 1.0]);
    }

    #[test]
    fn pade_is_all_pass_and_accurate_at_low_frequency() {
        let (n, d) = pade_delay(0.939, 6);
        for w in [0.01, 0.5, 1.0, 3.0] {
            let s = Complex64::new(0.0, w);
            let p = n.eval(s) / d.eval(s);
            assert!((p.norm() - 1.0).abs() < 1e-12);
            let exact = (-s * 0.939).exp();
            assert!((p - exact).norm() < 1e-6, "w = {w}");
        }
    }

    #[test]
    fn winding_detects_unstable_closed_loop() {
        // G = 0.5/(s - 1): 1 + G = (s - 0.5)/(s - 1), one RHP zero
        let g: OpenLoop = TransferFunction::from_coeffs(&[0.5], &[-1.0, 1.0], 0.0)
            .unwrap()
            .into();
        let r = nyquist_rhp_count(&g, 1e-9).unwrap();
        assert_eq!(r.open_loop_rhp_poles, 1);
        assert_eq!(r.rhp_zeros, 1);
        // G = 2/(s - 1): stabilised
        let g: OpenLoop = TransferFunction::from_coeffs(&[2.0], &[-1.0, 1.0], 0.0)
            .unwrap()
            .into();
        assert_eq!(nyquist_rhp_count(&g, 1e-9).unwrap().rhp_zeros, 0);
    }

    #[test]
    fn winding_with_integrator_and_delay() {
        // G = k e^{-s}/s is stable for k < pi/2 and unstable above
        let stable: OpenLoop = TransferFunction::from_coeffs(&[1.0], &[0.0, 1.0], 1.0)
            .unwrap()
            .into();
        assert_eq!(nyquist_rhp_count(&stable, 1e-9).unwrap().rhp_zeros, 0);
        assert_eq!(closed_loop_rhp_poles(&stable, 6, 1e-9).unwrap().len(), 0);
        let unstable: OpenLoop = TransferFunction::from_coeffs(&[2.0], &[0.0, 1.0], 1.0)
            .unwrap()
            .into();
        assert_eq!(nyquist_rhp_count(&unstable, 1e-9).unwrap().rhp_zeros, 2);
        assert_eq!(closed_loop_rhp_poles(&unstable, 6, 1e-9).unwrap().len(), 2);
    }

    #[test]
    fn delay_free_loop_uses_characteristic_polynomial() {
        // G = 3/((s+1)^3): 1 + G = (s^3 + 3s^2 + 3s + 4)/(s+1)^3, stable
        let g: OpenLoop = TransferFunction::from_coeffs(&[3.0], &[1.0, 3.0, 3.0, 1.0], 0.0)
            .unwrap()
            .into();
        assert!(closed_loop_rhp_poles(&g, 6, 1e-9).unwrap().is_empty());
        // gain 9 puts the loop past its critical gain of 8
        let g: OpenLoop = TransferFunction::from_coeffs(&[9.0], &[1.0, 3.0, 3.0, 1.0], 0.0)
            .unwrap()
            .into();
        assert_eq!(closed_loop_rhp_poles(&g, 6, 1e-9).unwrap().len(), 2);
    }
}
